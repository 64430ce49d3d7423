"""Variable-smoothing proximal gradient solver.

Each iteration builds the smoothed surrogate of the composite objective at a
decreasing smoothing index, takes a gradient step on it, and applies the prox
of the remaining convex term.  Stepsizes come either from a known Lipschitz
bound or from backtracking against a sufficient-decrease test.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .problem import (
    Array,
    CompositeProblem,
    grad_lipschitz,
    stationarity_measure,
    surrogate_grad,
    true_value,
)
from .prox import moreau_value

CSV_COLUMNS = (
    "n",
    "mu",
    "gamma",
    "cost_surrogate",
    "cost_true",
    "measure",
    "x_change",
    "elapsed_s",
    "backtracks",
)


class StepsizeError(RuntimeError):
    """Backtracking exhausted its trial budget; usually a wrong weak-convexity
    modulus or a model whose gradient is not Lipschitz on the feasible set."""

    def __init__(self, message: str, *, n: int, mu: float, gamma_last: float, trials: int):
        super().__init__(message)
        self.n = n
        self.mu = mu
        self.gamma_last = gamma_last
        self.trials = trials


class DivergenceError(RuntimeError):
    """The objective became non-finite; the model is misconfigured."""


@dataclass(frozen=True)
class SmoothingSchedule:
    """Smoothing indices mu_n = scale * n^(-1/alpha).

    ``scale`` defaults to 1/(2 eta) and must not exceed it, so every index
    stays inside the range where the penalty's prox is single-valued.  Any
    alpha >= 1 keeps the sequence non-summable; alpha = 3 is the customary
    trade-off between smoothing bias and stepsize decay.
    """

    eta: float
    alpha: float = 3.0
    scale: Optional[float] = None

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.alpha < 1:
            raise ValueError("alpha must be >= 1")
        cap = 1.0 / (2.0 * self.eta)
        if self.scale is None:
            object.__setattr__(self, "scale", cap)
        elif not 0 < self.scale <= cap:
            raise ValueError(f"scale must lie in (0, {cap}], got {self.scale}")


def mu_at(schedule: SmoothingSchedule, n: int) -> float:
    """n-th smoothing index, n >= 1."""
    if n < 1:
        raise ValueError(f"iteration index must be >= 1, got {n}")
    return schedule.scale * float(n) ** (-1.0 / schedule.alpha)


@dataclass(frozen=True)
class SolverConfig:
    armijo_c: float = 2.0**-13
    stepsize_mode: str = "backtracking"  # "backtracking" | "fixed"
    gamma_initial: float = 1.0
    rho: float = 0.5
    max_iterations: int = 1000
    time_budget_s: Optional[float] = None
    x_change_tolerance: float = 0.0
    backtrack_cap: int = 60
    keep_iterates: bool = False
    log_records: bool = True  # False skips per-iteration diagnostics entirely

    def __post_init__(self):
        if not 0 < self.armijo_c < 1:
            raise ValueError("armijo_c must lie in (0, 1)")
        if self.stepsize_mode not in ("backtracking", "fixed"):
            raise ValueError(f"unknown stepsize_mode {self.stepsize_mode!r}")
        if self.gamma_initial <= 0:
            raise ValueError("gamma_initial must be positive")
        if not 0 < self.rho < 1:
            raise ValueError("rho must lie in (0, 1)")
        if self.backtrack_cap < 1:
            raise ValueError("backtrack_cap must be >= 1")
        if self.x_change_tolerance < 0:
            raise ValueError("x_change_tolerance must be nonnegative")


@dataclass(frozen=True)
class IterationRecord:
    n: int
    mu: float
    gamma: float
    cost_surrogate: float
    cost_true: float
    measure: float
    x_change: float
    elapsed_s: float
    backtrack_count: int


@dataclass
class Trajectory:
    """Per-iteration log of one solver run."""

    records: List[IterationRecord] = field(default_factory=list)
    final_x: Optional[Array] = None
    gamma_max: float = 0.0
    min_measure: float = math.inf
    method_tag: str = "pvs"
    iterates: Optional[List[Array]] = None

    def to_csv(self, path, metadata: Optional[dict] = None) -> None:
        write_trajectory_csv(path, self.records, metadata)


def format_float(x: float) -> str:
    return f"{x:.17g}"


def write_trajectory_csv(path, records, metadata: Optional[dict] = None) -> None:
    """One row per iteration; optional '# key=value' metadata lines on top."""
    with open(path, "w", newline="") as fh:
        for key, value in (metadata or {}).items():
            fh.write(f"# {key}={value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.n,
                    format_float(r.mu),
                    format_float(r.gamma),
                    format_float(r.cost_surrogate),
                    format_float(r.cost_true),
                    format_float(r.measure),
                    format_float(r.x_change),
                    format_float(r.elapsed_s),
                    r.backtrack_count,
                ]
            )


# ---------------------------------------------------------------------------
# stepsize rules
# ---------------------------------------------------------------------------

def _surrogate_total(P: CompositeProblem, mu: float, x: Array) -> float:
    return float(
        P.h.eval(x) + moreau_value(P.g, mu, P.inner_map.eval(x)) + P.phi.eval(x)
    )


def armijo_holds(P: CompositeProblem, mu: float, x, gamma: float, c: float) -> bool:
    """Sufficient-decrease test for the prox-gradient step of size gamma.

    Accepts gamma iff the smoothed total objective drops by at least
    c * gamma * measure^2, where measure is the scaled step residual.
    """
    x = np.asarray(x, dtype=float)
    grad = surrogate_grad(P, mu, x)
    x_next = P.phi.prox(x - gamma * grad, gamma)
    measure = np.linalg.norm(x - x_next) / gamma
    lhs = _surrogate_total(P, mu, x_next)
    rhs = _surrogate_total(P, mu, x) - c * gamma * measure**2
    return bool(lhs <= rhs)


def backtrack_stepsize(
    P: CompositeProblem,
    mu: float,
    x,
    gamma_initial: float,
    rho: float,
    c: float,
    cap: int,
    *,
    grad: Optional[Array] = None,
    f_total_x: Optional[float] = None,
):
    """Largest gamma_initial * rho^k passing the sufficient-decrease test.

    Returns (gamma, accepted next iterate, number of trials).  ``grad`` and
    ``f_total_x`` may be passed in to avoid recomputation; they must equal
    surrogate_grad(P, mu, x) and the smoothed total objective at x.
    """
    x = np.asarray(x, dtype=float)
    if grad is None:
        grad = surrogate_grad(P, mu, x)
    if f_total_x is None:
        f_total_x = _surrogate_total(P, mu, x)
    gamma = gamma_initial
    for trial in range(1, cap + 1):
        x_next = P.phi.prox(x - gamma * grad, gamma)
        measure = np.linalg.norm(x - x_next) / gamma
        lhs = _surrogate_total(P, mu, x_next)
        if lhs <= f_total_x - c * gamma * measure**2:
            return gamma, x_next, trial
        gamma *= rho
    raise StepsizeError(
        f"no stepsize in {cap} trials (last gamma {gamma / rho:.3e}) satisfied "
        "the sufficient-decrease test; check the weak-convexity modulus and "
        "the Lipschitz structure of the model",
        n=-1,
        mu=mu,
        gamma_last=gamma / rho,
        trials=cap,
    )


def fixed_stepsize(lip_const: float, lip_mu_coeff: float, mu: float, c: float) -> float:
    """Stepsize 2(1-c) / (lip_const + lip_mu_coeff / mu)."""
    if lip_const < 0 or lip_mu_coeff < 0:
        raise ValueError("Lipschitz constants must be nonnegative")
    if mu <= 0:
        raise ValueError("mu must be positive")
    if not 0 < c < 1:
        raise ValueError("c must lie in (0, 1)")
    denom = lip_const + lip_mu_coeff / mu
    if denom <= 0:
        raise ValueError("Lipschitz bound is zero; no finite stepsize rule")
    return 2.0 * (1.0 - c) / denom


# ---------------------------------------------------------------------------
# main loop
# ---------------------------------------------------------------------------

def run(
    P: CompositeProblem,
    x1,
    schedule: SmoothingSchedule,
    config: SolverConfig = SolverConfig(),
) -> Trajectory:
    """Iterate the variable-smoothing prox-gradient scheme from x1.

    Stops on max_iterations, the optional time budget, or when the iterate
    change drops to x_change_tolerance.  The record for iteration n refers
    to the iterate *before* the n-th update; its measure is evaluated at the
    running maximum of all accepted stepsizes, whose running minimum is the
    convergence diagnostic.  Timing covers the algorithmic work only, not
    the diagnostics.
    """
    x = np.asarray(x1, dtype=float).copy()
    if not P.phi.domain_membership(x):
        raise ValueError("x1 must belong to the domain of phi")
    if P.g.eta > 0 and schedule.scale > 1.0 / (2.0 * P.g.eta) + 1e-12:
        raise ValueError(
            "schedule scale exceeds 1/(2 eta) for this penalty; smoothing "
            "indices would leave the admissible range"
        )
    traj = Trajectory(method_tag="pvs")
    if config.keep_iterates:
        traj.iterates = [x.copy()]
    work_s = 0.0
    for n in range(1, config.max_iterations + 1):
        mu = mu_at(schedule, n)
        tic = time.perf_counter()
        grad = surrogate_grad(P, mu, x)
        if config.stepsize_mode == "fixed":
            gamma = 2.0 * (1.0 - config.armijo_c) / grad_lipschitz(P, mu)
            x_next = P.phi.prox(x - gamma * grad, gamma)
            trials = 0
            work_s += time.perf_counter() - tic
            f_total_x = (
                _surrogate_total(P, mu, x) if config.log_records else math.nan
            )  # diagnostic only here
        else:
            f_total_x = _surrogate_total(P, mu, x)
            try:
                gamma, x_next, trials = backtrack_stepsize(
                    P,
                    mu,
                    x,
                    config.gamma_initial,
                    config.rho,
                    config.armijo_c,
                    config.backtrack_cap,
                    grad=grad,
                    f_total_x=f_total_x,
                )
            except StepsizeError as err:
                raise StepsizeError(
                    str(err), n=n, mu=mu, gamma_last=err.gamma_last, trials=err.trials
                ) from None
            work_s += time.perf_counter() - tic

        traj.gamma_max = max(traj.gamma_max, gamma)
        x_change = float(np.linalg.norm(x_next - x))
        if config.log_records:
            measure = stationarity_measure(P, mu, traj.gamma_max, x)
            cost_true = true_value(P, x)
            traj.records.append(
                IterationRecord(
                    n=n,
                    mu=mu,
                    gamma=gamma,
                    cost_surrogate=f_total_x,
                    cost_true=cost_true,
                    measure=measure,
                    x_change=x_change,
                    elapsed_s=work_s,
                    backtrack_count=trials,
                )
            )
            if not (math.isfinite(f_total_x) and math.isfinite(cost_true)):
                raise DivergenceError(
                    f"objective became non-finite at iteration {n}; "
                    "the model is misconfigured"
                )
            traj.min_measure = min(traj.min_measure, measure)
        elif not math.isfinite(x_change) or f_total_x == -math.inf or f_total_x == math.inf:
            # without logs, f_total_x may legitimately be nan (not computed)
            raise DivergenceError(
                f"iterates became non-finite at iteration {n}; "
                "the model is misconfigured"
            )
        x = x_next
        if config.keep_iterates:
            traj.iterates.append(x.copy())
        if x_change <= config.x_change_tolerance:
            break
        if config.time_budget_s is not None and work_s >= config.time_budget_s:
            break
    traj.final_x = x
    return traj
