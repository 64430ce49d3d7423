"""Reference detectors: LMMSE, modulus-constrained projected gradient,
SOAV primal-dual splitting, and the proximal subgradient method.

All iterative methods log the same per-iteration record type as the main
solver (surrogate-specific fields are nan) and honor the shared stopping
rule: iteration cap, iterate-change tolerance, or time budget.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.linalg

from .problem import Array, CompositeProblem, true_value
from .prox import project_regular_polygon, project_unit_modulus, prox_soav
from .solver import IterationRecord


@dataclass
class BaselineResult:
    estimate: Array
    trajectory: List[IterationRecord] = field(default_factory=list)
    method_tag: str = ""
    iterates: Optional[List[Array]] = None


def lmmse_detect(H, y, sigma2: float) -> Array:
    """Closed-form linear MMSE estimate (H'H + sigma2 I)^-1 H'y.

    Solved by Cholesky factorization of the symmetric normal matrix; a
    singular system at sigma2 = 0 raises LinAlgError.
    """
    H = np.asarray(H, dtype=float)
    y = np.asarray(y, dtype=float)
    if sigma2 < 0:
        raise ValueError("sigma2 must be nonnegative")
    A = H.T @ H + sigma2 * np.eye(H.shape[1])
    b = H.T @ y
    c, low = scipy.linalg.cho_factor(A)
    # a numerically singular matrix can slip through the factorization with a
    # rounding-noise pivot; the factor's diagonal exposes the rank deficiency
    diag = np.abs(np.diag(c))
    if diag.min() <= 1e-7 * diag.max():
        raise np.linalg.LinAlgError("normal equations are numerically singular")
    out = scipy.linalg.cho_solve((c, low), b)
    if np.linalg.norm(A @ out - b) > 1e-8 * (1.0 + np.linalg.norm(b)):
        raise np.linalg.LinAlgError(
            "normal equations too ill-conditioned for a reliable solve"
        )
    return out


def project_modulus_vector(s, U: int) -> Array:
    """Per-symbol projection of a lifted vector onto the unit circle."""
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    for u in range(U):
        out[[u, U + u]] = project_unit_modulus(s[[u, U + u]])
    return out


def project_polygon_vector(s, U: int, M: int) -> Array:
    """Per-symbol projection of a lifted vector onto the regular M-gon."""
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    for u in range(U):
        out[[u, U + u]] = project_regular_polygon(s[[u, U + u]], M)
    return out


def _baseline_record(n, gamma, cost, measure, x_change, elapsed):
    return IterationRecord(
        n=n,
        mu=math.nan,
        gamma=gamma,
        cost_surrogate=math.nan,
        cost_true=cost,
        measure=measure,
        x_change=x_change,
        elapsed_s=elapsed,
        backtrack_count=0,
    )


def modulus_pgd(
    H,
    y,
    x1,
    gamma: Optional[float] = None,
    iters: int = 2000,
    x_change_tol: float = 0.0,
    time_budget_s: Optional[float] = None,
    keep_iterates: bool = False,
) -> BaselineResult:
    """Projected gradient on the unit-modulus-constrained least squares model.

    Default stepsize is 1 / ||H'H||_op.  Every iterate has all symbol pairs
    exactly on the unit circle.
    """
    H = np.asarray(H, dtype=float)
    y = np.asarray(y, dtype=float)
    U = H.shape[1] // 2
    x = np.asarray(x1, dtype=float).copy()
    radii = np.hypot(x[:U], x[U:])
    if not np.allclose(radii, 1.0, atol=1e-9):
        raise ValueError("x1 must have unit-modulus symbol pairs")
    HtH = H.T @ H
    Hty = H.T @ y
    if gamma is None:
        gamma = 1.0 / float(np.linalg.norm(HtH, 2))
    elif gamma <= 0:
        raise ValueError("gamma must be positive")
    result = BaselineResult(estimate=x, method_tag="modulus")
    if keep_iterates:
        result.iterates = [x.copy()]
    work_s = 0.0
    for n in range(1, iters + 1):
        tic = time.perf_counter()
        x_next = project_modulus_vector(x - gamma * (HtH @ x - Hty), U)
        work_s += time.perf_counter() - tic
        resid = y - H @ x
        x_change = float(np.linalg.norm(x_next - x))
        result.trajectory.append(
            _baseline_record(
                n, gamma, 0.5 * float(resid @ resid), x_change / gamma, x_change, work_s
            )
        )
        x = x_next
        if keep_iterates:
            result.iterates.append(x.copy())
        if x_change <= x_change_tol:
            break
        if time_budget_s is not None and work_s >= time_budget_s:
            break
    result.estimate = x
    return result


@dataclass(frozen=True)
class PrimalDualConfig:
    sigma: float = 1.0
    tau: Optional[float] = None  # default 0.9 / (L/2 + sigma * ||K||^2)
    max_iters: int = 2000
    x_change_tol: float = 0.0
    time_budget_s: Optional[float] = None


def soav_primal_dual(
    H,
    y,
    lam: float,
    M: int,
    config: PrimalDualConfig = PrimalDualConfig(),
    x1=None,
    keep_iterates: bool = False,
) -> BaselineResult:
    """Primal-dual splitting for the polygon-constrained SOAV model.

    minimize 0.5 ||y - H s||^2 + lam * psi_soav(s) + indicator_C(s), where C
    is the per-symbol regular M-gon.  The smooth term enters by gradient,
    the constraint through the primal prox (so every iterate is feasible),
    and the SOAV term through its prox on the dual side with an identity
    coupling; stepsizes satisfy tau * (L/2 + sigma * ||K||_op^2) <= 1.
    """
    from .mimo import soav_shifts  # local import; mimo depends on prox only

    H = np.asarray(H, dtype=float)
    y = np.asarray(y, dtype=float)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if M < 2:
        raise ValueError("M must be >= 2")
    U = H.shape[1] // 2
    shifts = soav_shifts(U, M)
    HtH = H.T @ H
    Hty = H.T @ y
    lip = float(np.linalg.norm(HtH, 2))
    sigma = config.sigma
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    tau = config.tau if config.tau is not None else 0.9 / (0.5 * lip + sigma)
    if tau <= 0 or tau * (0.5 * lip + sigma) > 1.0 + 1e-12:
        raise ValueError(
            f"stepsizes tau={tau}, sigma={sigma} violate the convergence bound"
        )

    def soav_value(s: Array) -> float:
        return float(np.sum(np.abs(s[None, :] - shifts)) / M)

    start = np.zeros(2 * U) if x1 is None else np.asarray(x1, dtype=float)
    s = project_polygon_vector(start, U, M)
    u = np.zeros(2 * U)
    result = BaselineResult(estimate=s, method_tag="soav")
    if keep_iterates:
        result.iterates = [s.copy()]
    work_s = 0.0
    for n in range(1, config.max_iters + 1):
        tic = time.perf_counter()
        s_next = project_polygon_vector(s - tau * (HtH @ s - Hty + u), U, M)
        bar = u + sigma * (2.0 * s_next - s)
        if lam > 0:
            u = bar - sigma * prox_soav(bar / sigma, shifts, 1.0 / sigma, lam)
        else:
            u = np.zeros_like(bar)
        work_s += time.perf_counter() - tic
        resid = y - H @ s
        cost = 0.5 * float(resid @ resid) + lam * soav_value(s)
        x_change = float(np.linalg.norm(s_next - s))
        result.trajectory.append(
            _baseline_record(n, tau, cost, x_change / tau, x_change, work_s)
        )
        s = s_next
        if keep_iterates:
            result.iterates.append(s.copy())
        if x_change <= config.x_change_tol:
            break
        if config.time_budget_s is not None and work_s >= config.time_budget_s:
            break
    result.estimate = s
    return result


def prox_subgradient(
    P: CompositeProblem,
    x1,
    rule: str = "lipschitz",
    lip_const: Optional[float] = None,
    iters: int = 2000,
    x_change_tol: float = 0.0,
    time_budget_s: Optional[float] = None,
    keep_iterates: bool = False,
) -> BaselineResult:
    """Proximal subgradient iteration on the nonsmooth composite objective.

    The composite-term subgradient is the chain-rule selection through the
    penalty's documented subgradient choice.  Diminishing stepsizes:
    1/(2 L n) under rule "lipschitz" (L = lip_const, defaulting to the
    problem's own constant) or 1/(2 n) under rule "heuristic".
    """
    if rule not in ("lipschitz", "heuristic"):
        raise ValueError(f"unknown stepsize rule {rule!r}")
    if P.g.subgrad is None:
        raise ValueError("penalty provides no subgradient selection")
    if rule == "lipschitz":
        if lip_const is None:
            lip_const = P.lip_const
        if lip_const is None or lip_const <= 0:
            raise ValueError("rule 'lipschitz' needs a positive lip_const")
    x = np.asarray(x1, dtype=float).copy()
    if not P.phi.domain_membership(x):
        raise ValueError("x1 must belong to the domain of phi")
    tag = "sub_lipschitz" if rule == "lipschitz" else "sub_heuristic"
    result = BaselineResult(estimate=x, method_tag=tag)
    if keep_iterates:
        result.iterates = [x.copy()]
    work_s = 0.0
    for n in range(1, iters + 1):
        gamma = 1.0 / (2.0 * lip_const * n) if rule == "lipschitz" else 1.0 / (2.0 * n)
        tic = time.perf_counter()
        v = P.h.grad(x) + P.inner_map.jac_adjoint_apply(
            x, P.g.subgrad(P.inner_map.eval(x))
        )
        x_next = P.phi.prox(x - gamma * v, gamma)
        work_s += time.perf_counter() - tic
        cost = true_value(P, x)
        x_change = float(np.linalg.norm(x_next - x))
        result.trajectory.append(
            _baseline_record(n, gamma, cost, x_change / gamma, x_change, work_s)
        )
        x = x_next
        if keep_iterates:
            result.iterates.append(x.copy())
        if x_change <= x_change_tol:
            break
        if time_budget_s is not None and work_s >= time_budget_s:
            break
    result.estimate = x
    return result
