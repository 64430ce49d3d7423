"""Benchmark harness: convergence comparisons, BER-vs-SNR sweeps, parameter
grid selection, and the config file format shared by the CLI.

Config files are flat INI-style text: '#' comments, [section] headers,
key = value pairs.  No environment variables are consulted.  Seeds are
assigned per trial as seed_base + trial (validation seeds for grid selection
live in a disjoint range), so results are reproducible and independent of
the worker-pool size.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .baselines import (
    lmmse_detect,
    modulus_pgd,
    project_modulus_vector,
    project_polygon_vector,
    prox_subgradient,
    soav_primal_dual,
    PrimalDualConfig,
)
from .mimo import (
    MimoInstance,
    bit_error_rate,
    build_polar_problem,
    generate_instance,
    polar_from_lifted,
    polar_map,
    psk_demodulate,
    realify_matrix,
    realify_vector,
    save_instance,
    split_polar,
)
from .solver import (
    SmoothingSchedule,
    SolverConfig,
    Trajectory,
    format_float,
    run,
    write_trajectory_csv,
)
from .svgplot import PlotSpec, emit_plot

VALIDATION_SEED_OFFSET = 10_000_000

CONVERGENCE_METHODS = ("pvs", "sub_lipschitz", "sub_heuristic")
BER_METHODS = ("pvs", "lmmse", "modulus", "soav")


class ConfigError(Exception):
    """Invalid or inconsistent experiment configuration."""


@dataclass(frozen=True)
class StopConfig:
    time_budget_s: Optional[float] = None
    x_change_tol: float = 1e-5
    max_iters: int = 2000


@dataclass(frozen=True)
class PvsParams:
    lambda_r: float = 0.1
    lambda_theta: float = 0.1
    r_lower: float = 0.1
    armijo_c: float = 2.0**-13
    alpha: float = 3.0
    eta: float = 1.0
    gamma_initial: float = 1.0
    rho: float = 0.5
    stepsize_mode: str = "backtracking"


@dataclass(frozen=True)
class SoavParams:
    lam: float = 0.1


@dataclass(frozen=True)
class ModulusParams:
    gamma: Optional[float] = None  # None: 1 / ||H'H||_op


@dataclass(frozen=True)
class SubParams:
    lip_const: Optional[float] = None  # None: the problem's own constant


@dataclass(frozen=True)
class GridConfig:
    validation_trials: int = 3
    pvs_lambda_r: Tuple[float, ...] = tuple(10.0**k for k in range(-6, 1))
    pvs_lambda_theta: Tuple[float, ...] = tuple(10.0**k for k in range(-6, 1))
    soav_lam: Tuple[float, ...] = tuple(10.0**k for k in range(-6, 2))


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "single_solve"
    U: int = 16
    B: int = 16
    M: int = 8
    snr_list: Tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)
    trials: int = 1
    seed_base: int = 1000
    methods: Tuple[str, ...] = ("pvs", "lmmse")
    pvs: PvsParams = PvsParams()
    soav: SoavParams = SoavParams()
    modulus: ModulusParams = ModulusParams()
    sub: SubParams = SubParams()
    stop: StopConfig = StopConfig()
    grid: GridConfig = GridConfig()
    output_dir: str = "out"
    parallel_trials: int = 1
    time_grid_points: int = 50
    runtime_column: str = "wallclock"  # "wallclock" | "zero"
    allow_any_psk_order: bool = False

    def validate(self) -> None:
        if self.U < 1 or self.B < 1 or self.M < 2:
            raise ConfigError("U, B >= 1 and M >= 2 required")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.snr_list:
            raise ConfigError("snr_list must be nonempty")
        if self.parallel_trials < 1:
            raise ConfigError("parallel_trials must be >= 1")
        if self.time_grid_points < 2:
            raise ConfigError("time_grid_points must be >= 2")
        if self.runtime_column not in ("wallclock", "zero"):
            raise ConfigError("runtime_column must be 'wallclock' or 'zero'")
        if self.experiment == "convergence":
            bad = set(self.methods) - set(CONVERGENCE_METHODS)
            if bad:
                raise ConfigError(f"unknown convergence methods: {sorted(bad)}")
        elif self.experiment == "ber_sweep":
            bad = set(self.methods) - set(BER_METHODS)
            if bad:
                raise ConfigError(f"unknown detection methods: {sorted(bad)}")
        polar = {"pvs", "sub_lipschitz", "sub_heuristic"}
        if (
            set(self.methods) & polar
            and self.M % 4 != 0
            and not self.allow_any_psk_order
        ):
            raise ConfigError(
                "the polar model demodulates through the [real; imag] reading "
                "of its sin/cos stack, which maps onto the constellation only "
                "when 4 divides M; set output.allow_any_psk_order = true to "
                "run anyway"
            )
        if self.stop.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")


# ---------------------------------------------------------------------------
# config file parsing
# ---------------------------------------------------------------------------

_FLOAT_KEYS = {
    ("stop", "time_budget_s"),
    ("pvs", "lambda_r"),
    ("pvs", "lambda_theta"),
    ("pvs", "r_lower"),
    ("pvs", "armijo_c"),
    ("pvs", "alpha"),
    ("pvs", "eta"),
    ("pvs", "gamma_initial"),
    ("pvs", "rho"),
    ("soav", "lambda"),
    ("modulus", "gamma"),
    ("sub", "lip_const"),
    ("stop", "x_change_tol"),
}

_KNOWN_KEYS = {
    "experiment": {"u", "b", "m", "snr_list", "trials", "seed_base", "methods",
                   "parallel_trials"},
    "stop": {"time_budget_s", "x_change_tol", "max_iters"},
    "pvs": {"lambda_r", "lambda_theta", "r_lower", "armijo_c", "alpha", "eta",
            "gamma_initial", "rho", "stepsize_mode"},
    "soav": {"lambda"},
    "modulus": {"gamma"},
    "sub": {"lip_const"},
    "output": {"dir", "runtime_column", "time_grid_points",
               "allow_any_psk_order"},
    "grid": {"validation_trials", "pvs.lambda_r", "pvs.lambda_theta",
             "soav.lambda"},
    "plot": {"csv", "kind", "out"},
}


def _parse_float_list(text: str) -> Tuple[float, ...]:
    return tuple(float(v.strip()) for v in text.split(",") if v.strip())


def _parse_optional_float(text: str) -> Optional[float]:
    text = text.strip()
    if text in ("", "none", "auto"):
        return None
    return float(text)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"cannot parse boolean value {text!r}")


def parse_config_text(
    path: Optional[str] = None, overrides: Sequence[str] = ()
) -> configparser.ConfigParser:
    """Read the INI file (if any), apply overrides, and check key names."""
    parser = configparser.ConfigParser(interpolation=None)
    if path is not None:
        read = parser.read(path)
        if not read:
            raise ConfigError(f"config file not found: {path}")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        target, value = item.split("=", 1)
        if "." not in target:
            raise ConfigError(f"override key {target!r} must be section.key")
        section, key = target.split(".", 1)
        section, key = section.strip(), key.strip()
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, value.strip())

    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser.options(section):
            if key not in _KNOWN_KEYS[section]:
                raise ConfigError(f"unknown config key {section}.{key}")
    return parser


def load_config(
    path: Optional[str] = None,
    overrides: Sequence[str] = (),
    experiment: Optional[str] = None,
) -> ExperimentConfig:
    """Build an ExperimentConfig from an optional INI file plus overrides.

    Overrides use the repeatable 'section.key=value' form and win over file
    contents.  Unknown sections or keys are configuration errors.
    """
    parser = parse_config_text(path, overrides)

    def get(section, key, default=None):
        if parser.has_option(section, key):
            return parser.get(section, key)
        return default

    try:
        cfg = ExperimentConfig(
            experiment=experiment or "single_solve",
            U=int(get("experiment", "u", "16")),
            B=int(get("experiment", "b", "16")),
            M=int(get("experiment", "m", "8")),
            snr_list=_parse_float_list(get("experiment", "snr_list", "0,5,10,15,20,25")),
            trials=int(get("experiment", "trials", "1")),
            seed_base=int(get("experiment", "seed_base", "1000")),
            methods=tuple(
                m.strip()
                for m in get("experiment", "methods", "pvs,lmmse").split(",")
                if m.strip()
            ),
            pvs=PvsParams(
                lambda_r=float(get("pvs", "lambda_r", "0.1")),
                lambda_theta=float(get("pvs", "lambda_theta", "0.1")),
                r_lower=float(get("pvs", "r_lower", "0.1")),
                armijo_c=float(get("pvs", "armijo_c", repr(2.0**-13))),
                alpha=float(get("pvs", "alpha", "3")),
                eta=float(get("pvs", "eta", "1")),
                gamma_initial=float(get("pvs", "gamma_initial", "1")),
                rho=float(get("pvs", "rho", "0.5")),
                stepsize_mode=get("pvs", "stepsize_mode", "backtracking"),
            ),
            soav=SoavParams(lam=float(get("soav", "lambda", "0.1"))),
            modulus=ModulusParams(
                gamma=_parse_optional_float(get("modulus", "gamma", "auto"))
            ),
            sub=SubParams(
                lip_const=_parse_optional_float(get("sub", "lip_const", "auto"))
            ),
            stop=StopConfig(
                time_budget_s=_parse_optional_float(get("stop", "time_budget_s", "")),
                x_change_tol=float(get("stop", "x_change_tol", "1e-5")),
                max_iters=int(get("stop", "max_iters", "2000")),
            ),
            grid=GridConfig(
                validation_trials=int(get("grid", "validation_trials", "3")),
                pvs_lambda_r=_parse_float_list(
                    get("grid", "pvs.lambda_r", "1e-6,1e-5,1e-4,1e-3,1e-2,1e-1,1")
                ),
                pvs_lambda_theta=_parse_float_list(
                    get("grid", "pvs.lambda_theta", "1e-6,1e-5,1e-4,1e-3,1e-2,1e-1,1")
                ),
                soav_lam=_parse_float_list(
                    get("grid", "soav.lambda", "1e-6,1e-5,1e-4,1e-3,1e-2,1e-1,1,10")
                ),
            ),
            output_dir=get("output", "dir", "out"),
            parallel_trials=int(get("experiment", "parallel_trials", "1")),
            time_grid_points=int(get("output", "time_grid_points", "50")),
            runtime_column=get("output", "runtime_column", "wallclock"),
            allow_any_psk_order=_parse_bool(
                get("output", "allow_any_psk_order", "false")
            ),
        )
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError(f"malformed config value: {err}") from None
    cfg.validate()
    return cfg


# fields that do not influence the numbers; the config hash must stay stable
# across output destinations and worker-pool sizes
_HASH_EXCLUDED_FIELDS = {"output_dir", "parallel_trials"}


def _flatten_config(cfg) -> List[Tuple[str, str]]:
    pairs = []

    def walk(prefix, obj):
        for f in fields(obj):
            if f.name in _HASH_EXCLUDED_FIELDS:
                continue
            value = getattr(obj, f.name)
            name = f"{prefix}{f.name}"
            if hasattr(value, "__dataclass_fields__"):
                walk(name + ".", value)
            else:
                pairs.append((name, repr(value)))

    walk("", cfg)
    return sorted(pairs)


def config_hash(cfg: ExperimentConfig) -> str:
    canon = "\n".join(f"{k}={v}" for k, v in _flatten_config(cfg))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def csv_metadata(cfg: ExperimentConfig) -> Dict[str, str]:
    return {
        "config_hash": config_hash(cfg),
        "seed_base": str(cfg.seed_base),
        "trials": str(cfg.trials),
        "version": __version__,
    }


# ---------------------------------------------------------------------------
# shared detection plumbing
# ---------------------------------------------------------------------------

def _solver_config(
    cfg: ExperimentConfig,
    max_iters: Optional[int] = None,
    log_records: bool = True,
) -> SolverConfig:
    return SolverConfig(
        armijo_c=cfg.pvs.armijo_c,
        stepsize_mode=cfg.pvs.stepsize_mode,
        gamma_initial=cfg.pvs.gamma_initial,
        rho=cfg.pvs.rho,
        max_iterations=max_iters or cfg.stop.max_iters,
        time_budget_s=cfg.stop.time_budget_s,
        x_change_tolerance=cfg.stop.x_change_tol,
        log_records=log_records,
    )


def detect(
    cfg: ExperimentConfig, inst: MimoInstance, method: str
) -> Tuple[np.ndarray, float, Optional[Trajectory]]:
    """Run one detector; returns (lifted estimate, solver seconds, trajectory).

    All methods warm-start from the LMMSE estimate, mapped into each model's
    feasible set; the reported time covers the method's own computation
    (including its linear-system warm start), not scoring.
    """
    H = realify_matrix(inst.H_complex)
    y = realify_vector(inst.y_complex)
    tic = time.perf_counter()
    if method == "lmmse":
        est = lmmse_detect(H, y, inst.sigma2)
        return est, time.perf_counter() - tic, None
    s0 = lmmse_detect(H, y, inst.sigma2)
    if method == "pvs":
        problem = build_polar_problem(
            inst, cfg.pvs.lambda_r, cfg.pvs.lambda_theta, cfg.pvs.r_lower
        )
        x1 = polar_from_lifted(s0, cfg.pvs.r_lower)
        schedule = SmoothingSchedule(eta=cfg.pvs.eta, alpha=cfg.pvs.alpha)
        # per-iteration diagnostics are skipped here: only the final point is
        # scored, and the stationarity recomputation would dominate runtime
        traj = run(problem, x1, schedule, _solver_config(cfg, log_records=False))
        est = polar_map(*split_polar(traj.final_x))
        elapsed = time.perf_counter() - tic
        return est, elapsed, traj
    if method == "modulus":
        x1 = project_modulus_vector(s0, inst.U)
        res = modulus_pgd(
            H,
            y,
            x1,
            gamma=cfg.modulus.gamma,
            iters=cfg.stop.max_iters,
            x_change_tol=cfg.stop.x_change_tol,
            time_budget_s=cfg.stop.time_budget_s,
        )
        return res.estimate, time.perf_counter() - tic, None
    if method == "soav":
        res = soav_primal_dual(
            H,
            y,
            cfg.soav.lam,
            inst.M,
            PrimalDualConfig(
                max_iters=cfg.stop.max_iters,
                x_change_tol=cfg.stop.x_change_tol,
                time_budget_s=cfg.stop.time_budget_s,
            ),
            x1=s0,
        )
        return res.estimate, time.perf_counter() - tic, None
    raise ConfigError(f"unknown method tag {method!r}")


def score_ber(cfg: ExperimentConfig, inst: MimoInstance, estimate) -> float:
    return bit_error_rate(
        psk_demodulate(estimate, inst.M), inst.s_star_indices, inst.M
    )


def _ber_cell(args) -> Tuple[str, float, int, float, float]:
    """Worker body: one (method, snr, trial) detection, returns a CSV row."""
    cfg, method, snr, trial = args
    inst = generate_instance(cfg.U, cfg.B, cfg.M, snr, cfg.seed_base + trial)
    est, runtime_s, _ = detect(cfg, inst, method)
    ber = score_ber(cfg, inst, est)
    return (method, snr, trial, ber, runtime_s)


# ---------------------------------------------------------------------------
# experiment drivers
# ---------------------------------------------------------------------------

def run_ber_sweep(cfg: ExperimentConfig, out_dir: Optional[str] = None) -> Dict[str, Path]:
    """Detect every (method, snr, trial) cell, score BER, emit CSV and SVG."""
    cfg = replace(cfg, experiment="ber_sweep")
    cfg.validate()
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = [
        (cfg, method, snr, trial)
        for method in cfg.methods
        for snr in cfg.snr_list
        for trial in range(cfg.trials)
    ]
    if cfg.parallel_trials > 1:
        with ProcessPoolExecutor(max_workers=cfg.parallel_trials) as pool:
            rows = list(pool.map(_ber_cell, cells, chunksize=1))
    else:
        rows = [_ber_cell(c) for c in cells]

    csv_path = out / "ber_results.csv"
    with open(csv_path, "w", newline="") as fh:
        for key, value in csv_metadata(cfg).items():
            fh.write(f"# {key}={value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "snr_db", "trial", "ber", "runtime_s"])
        for method, snr, trial, ber, runtime_s in rows:
            shown = 0.0 if cfg.runtime_column == "zero" else runtime_s
            writer.writerow(
                [method, format_float(snr), trial, format_float(ber),
                 format_float(shown)]
            )

    svg_path = out / "ber.svg"
    emit_plot(
        csv_path,
        PlotSpec(
            mode="grouped_mean",
            x_column="snr_db",
            y_column="ber",
            group_column="method",
            x_label="SNR (dB)",
            y_label="mean BER",
            title=f"U={cfg.U} B={cfg.B} {cfg.M}-PSK",
            y_log=True,
            floor_at_eps=True,
        ),
        svg_path,
    )
    return {"csv": csv_path, "svg": svg_path}


def _convergence_trial(args):
    """One trial of the convergence comparison; returns method -> record list."""
    cfg, trial = args
    snr = cfg.snr_list[0]
    inst = generate_instance(cfg.U, cfg.B, cfg.M, snr, cfg.seed_base + trial)
    H = realify_matrix(inst.H_complex)
    y = realify_vector(inst.y_complex)
    problem = build_polar_problem(
        inst, cfg.pvs.lambda_r, cfg.pvs.lambda_theta, cfg.pvs.r_lower
    )
    x1 = polar_from_lifted(lmmse_detect(H, y, inst.sigma2), cfg.pvs.r_lower)
    results = {}
    for method in cfg.methods:
        if method == "pvs":
            traj = run(
                problem,
                x1,
                SmoothingSchedule(eta=cfg.pvs.eta, alpha=cfg.pvs.alpha),
                _solver_config(cfg),
            )
            results[method] = traj.records
        else:
            rule = "lipschitz" if method == "sub_lipschitz" else "heuristic"
            res = prox_subgradient(
                problem,
                x1,
                rule,
                lip_const=cfg.sub.lip_const,
                iters=cfg.stop.max_iters,
                x_change_tol=cfg.stop.x_change_tol,
                time_budget_s=cfg.stop.time_budget_s,
            )
            results[method] = res.trajectory
    return results


def run_convergence(cfg: ExperimentConfig, out_dir: Optional[str] = None) -> Dict[str, Path]:
    """Cost-versus-time comparison of the solver against subgradient baselines.

    Writes one trajectory CSV per (method, trial), a wide aggregate CSV of
    mean true cost on a uniform time grid, and the corresponding SVG.
    """
    cfg = replace(cfg, experiment="convergence")
    cfg.validate()
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(cfg, t) for t in range(cfg.trials)]
    if cfg.parallel_trials > 1:
        with ProcessPoolExecutor(max_workers=cfg.parallel_trials) as pool:
            all_results = list(pool.map(_convergence_trial, jobs, chunksize=1))
    else:
        all_results = [_convergence_trial(j) for j in jobs]

    meta = csv_metadata(cfg)
    paths: Dict[str, Path] = {}
    for trial, results in enumerate(all_results):
        for method, records in results.items():
            p = out / f"trajectory_{method}_trial{trial:03d}.csv"
            write_trajectory_csv(p, records, {**meta, "method": method, "trial": trial})
            paths[f"trajectory_{method}_{trial}"] = p

    budget = cfg.stop.time_budget_s
    if budget is None:
        budget = max(
            rec[-1].elapsed_s
            for results in all_results
            for rec in results.values()
            if rec
        )
    grid = np.linspace(0.0, budget, cfg.time_grid_points)

    def cost_at(records, t):
        # piecewise-constant interpolation: last record finished by time t
        value = records[0].cost_true
        for r in records:
            if r.elapsed_s <= t:
                value = r.cost_true
            else:
                break
        return value

    agg_path = out / "convergence_mean.csv"
    with open(agg_path, "w", newline="") as fh:
        for key, value in meta.items():
            fh.write(f"# {key}={value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t_s"] + list(cfg.methods))
        for t in grid:
            row = [format_float(float(t))]
            for method in cfg.methods:
                mean = np.mean(
                    [cost_at(results[method], t) for results in all_results]
                )
                row.append(format_float(float(mean)))
            writer.writerow(row)
    paths["aggregate"] = agg_path

    svg_path = out / "convergence.svg"
    emit_plot(
        agg_path,
        PlotSpec(
            mode="wide",
            x_column="t_s",
            series_columns=tuple(cfg.methods),
            x_label="time (s)",
            y_label="mean cost",
            title=f"U={cfg.U} B={cfg.B} {cfg.M}-PSK",
            y_log=True,
        ),
        svg_path,
    )
    paths["svg"] = svg_path
    return paths


def run_single_solve(cfg: ExperimentConfig, out_dir: Optional[str] = None) -> Dict[str, Path]:
    """One instance, every configured method; trajectories plus a summary CSV."""
    cfg = replace(cfg, experiment="ber_sweep")  # same method set applies
    cfg.validate()
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    snr = cfg.snr_list[0]
    inst = generate_instance(cfg.U, cfg.B, cfg.M, snr, cfg.seed_base)
    meta = csv_metadata(cfg)
    paths: Dict[str, Path] = {}
    summary_path = out / "solve_summary.csv"
    with open(summary_path, "w", newline="") as fh:
        for key, value in meta.items():
            fh.write(f"# {key}={value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "snr_db", "ber", "runtime_s"])
        for method in cfg.methods:
            est, runtime_s, traj = detect(cfg, inst, method)
            ber = score_ber(cfg, inst, est)
            shown = 0.0 if cfg.runtime_column == "zero" else runtime_s
            writer.writerow(
                [method, format_float(snr), format_float(ber), format_float(shown)]
            )
            if traj is not None:
                p = out / f"trajectory_{method}_seed{cfg.seed_base}.csv"
                traj.to_csv(p, {**meta, "method": method})
                paths[f"trajectory_{method}"] = p
    paths["summary"] = summary_path
    return paths


def generate_to_file(cfg: ExperimentConfig, out_dir: Optional[str] = None) -> Path:
    """Write one instance container for the configured size and seed."""
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    inst = generate_instance(
        cfg.U, cfg.B, cfg.M, cfg.snr_list[0], cfg.seed_base
    )
    path = out / f"instance_seed{cfg.seed_base}.npz"
    save_instance(inst, path)
    return path


# ---------------------------------------------------------------------------
# grid selection
# ---------------------------------------------------------------------------

def _mean_ber_for_params(cfg: ExperimentConfig, method: str) -> float:
    total = 0.0
    count = 0
    for snr in cfg.snr_list:
        for t in range(cfg.grid.validation_trials):
            seed = cfg.seed_base + VALIDATION_SEED_OFFSET + t
            inst = generate_instance(cfg.U, cfg.B, cfg.M, snr, seed)
            est, _, _ = detect(cfg, inst, method)
            total += score_ber(cfg, inst, est)
            count += 1
    return total / count


def grid_select(
    cfg: ExperimentConfig, out_dir: Optional[str] = None
) -> Dict[str, Dict[str, float]]:
    """Pick per-method regularization weights by mean BER on held-out seeds.

    The search grids come from the [grid] config section; ties resolve to the
    smallest parameter tuple.  A selection log CSV is written per method.
    """
    if cfg.grid.validation_trials < 1:
        raise ConfigError("validation_trials must be >= 1")
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = csv_metadata(cfg)
    best: Dict[str, Dict[str, float]] = {}

    if "pvs" in cfg.methods:
        combos = sorted(
            itertools.product(cfg.grid.pvs_lambda_r, cfg.grid.pvs_lambda_theta)
        )
        if not combos:
            raise ConfigError("empty parameter grid for pvs")
        log_path = out / "grid_selection_pvs.csv"
        with open(log_path, "w", newline="") as fh:
            for key, value in meta.items():
                fh.write(f"# {key}={value}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["lambda_r", "lambda_theta", "mean_ber"])
            best_val, best_combo = math.inf, None
            for lam_r, lam_t in combos:
                trial_cfg = replace(
                    cfg, pvs=replace(cfg.pvs, lambda_r=lam_r, lambda_theta=lam_t)
                )
                mean = _mean_ber_for_params(trial_cfg, "pvs")
                writer.writerow(
                    [format_float(lam_r), format_float(lam_t), format_float(mean)]
                )
                if mean < best_val:
                    best_val, best_combo = mean, (lam_r, lam_t)
        best["pvs"] = {
            "lambda_r": best_combo[0],
            "lambda_theta": best_combo[1],
            "mean_ber": best_val,
        }

    if "soav" in cfg.methods:
        values = sorted(cfg.grid.soav_lam)
        if not values:
            raise ConfigError("empty parameter grid for soav")
        log_path = out / "grid_selection_soav.csv"
        with open(log_path, "w", newline="") as fh:
            for key, value in meta.items():
                fh.write(f"# {key}={value}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["lambda", "mean_ber"])
            best_val, best_lam = math.inf, None
            for lam in values:
                trial_cfg = replace(cfg, soav=SoavParams(lam=lam))
                mean = _mean_ber_for_params(trial_cfg, "soav")
                writer.writerow([format_float(lam), format_float(mean)])
                if mean < best_val:
                    best_val, best_lam = mean, lam
        best["soav"] = {"lambda": best_lam, "mean_ber": best_val}

    selected = out / "selected_params.csv"
    with open(selected, "w", newline="") as fh:
        for key, value in meta.items():
            fh.write(f"# {key}={value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "parameter", "value"])
        for method, params in best.items():
            for name, value in params.items():
                if name != "mean_ber":
                    writer.writerow([method, name, format_float(value)])
    return best
