"""Composite problems h + g(inner_map(.)) + phi and their smoothed surrogates.

The surrogate of index mu replaces g by its Moreau envelope, which makes the
composite part differentiable; its gradient follows from the chain rule.
A CompositeProblem is immutable after construction, so all operations here
are reentrant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .prox import (
    Array,
    ProxFriendlyConvexFn,
    WeaklyConvexFn,
    moreau_grad,
    moreau_value,
)


@dataclass(frozen=True)
class SmoothFn:
    """A differentiable function with Lipschitz gradient on the feasible set."""

    eval: Callable[[Array], float]
    grad: Callable[[Array], Array]


@dataclass(frozen=True)
class SmoothMap:
    """A continuously differentiable map with Jacobian action and adjoint.

    ``jac_apply(x, v)`` is the derivative at x applied to v;
    ``jac_adjoint_apply(x, w)`` is its adjoint applied to w, so
    <jac_apply(x, v), w> == <v, jac_adjoint_apply(x, w)> for all v, w.
    """

    eval: Callable[[Array], Array]
    jac_apply: Callable[[Array, Array], Array]
    jac_adjoint_apply: Callable[[Array, Array], Array]


def identity_map() -> SmoothMap:
    return SmoothMap(
        eval=lambda x: np.asarray(x, dtype=float).copy(),
        jac_apply=lambda x, v: np.asarray(v, dtype=float).copy(),
        jac_adjoint_apply=lambda x, w: np.asarray(w, dtype=float).copy(),
    )


@dataclass(frozen=True)
class CompositeProblem:
    """The minimization target h(x) + g(inner_map(x)) + phi(x).

    ``lip_const`` and ``lip_mu_coeff`` bound the surrogate gradient's
    Lipschitz constant as lip_const + lip_mu_coeff / mu; they are required
    by the fixed stepsize rule and may be None in backtracking mode.
    """

    h: SmoothFn
    inner_map: SmoothMap
    g: WeaklyConvexFn
    phi: ProxFriendlyConvexFn
    lip_const: Optional[float] = None
    lip_mu_coeff: Optional[float] = None


def grad_lipschitz(P: CompositeProblem, mu: float) -> float:
    """Lipschitz bound lip_const + lip_mu_coeff / mu for the surrogate gradient."""
    if P.lip_const is None or P.lip_mu_coeff is None:
        raise ValueError("problem carries no Lipschitz constants")
    return P.lip_const + P.lip_mu_coeff / mu


def surrogate_value(P: CompositeProblem, mu: float, x, total: bool = False) -> float:
    """Smoothed objective h(x) + envelope_mu(g)(inner_map(x)), plus phi if total."""
    x = np.asarray(x, dtype=float)
    val = P.h.eval(x) + moreau_value(P.g, mu, P.inner_map.eval(x))
    if total:
        val += P.phi.eval(x)
    return float(val)


def true_value(P: CompositeProblem, x, total: bool = True) -> float:
    """Nonsmooth objective h(x) + g(inner_map(x)), plus phi if total."""
    x = np.asarray(x, dtype=float)
    val = P.h.eval(x) + P.g.eval(P.inner_map.eval(x))
    if total:
        val += P.phi.eval(x)
    return float(val)


def surrogate_grad(P: CompositeProblem, mu: float, x) -> Array:
    """Chain-rule gradient of the smoothed objective."""
    x = np.asarray(x, dtype=float)
    w = moreau_grad(P.g, mu, P.inner_map.eval(x))
    return P.h.grad(x) + P.inner_map.jac_adjoint_apply(x, w)


def prox_grad_step(P: CompositeProblem, mu: float, gamma: float, x) -> Array:
    """Forward step on the smoothed objective, backward step on phi."""
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    x = np.asarray(x, dtype=float)
    return P.phi.prox(x - gamma * surrogate_grad(P, mu, x), gamma)


def stationarity_measure(P: CompositeProblem, mu: float, gamma: float, x) -> float:
    """Scaled prox-gradient residual; zero exactly at fixed points.

    With phi == 0 this collapses to the surrogate gradient norm.
    """
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x - prox_grad_step(P, mu, gamma, x)) / gamma)


def finite_difference_grad(
    fun: Callable[[Array], float], x, step_scale: float = 1e-6
) -> Array:
    """Central finite differences with step step_scale * (1 + ||x||_inf)."""
    x = np.asarray(x, dtype=float)
    h = step_scale * (1.0 + np.max(np.abs(x), initial=0.0))
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        out[i] = (fun(x + e) - fun(x - e)) / (2.0 * h)
    return out
