"""Proximity operators, projections, and Moreau envelope calculus.

Everything here is a pure function of its inputs; instances of the two
function bundles are immutable, so the whole module is thread-safe.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

Array = np.ndarray


def _vec(z) -> Array:
    return np.atleast_1d(np.asarray(z, dtype=float))


def _check_index(mu: float, eta: float) -> None:
    if mu <= 0:
        raise ValueError(f"smoothing index mu must be positive, got {mu}")
    if eta > 0 and mu >= 1.0 / eta:
        raise ValueError(
            f"smoothing index mu={mu} is outside (0, {1.0 / eta}); the prox "
            "may be set-valued there (weak-convexity modulus eta={})".format(eta)
        )


@dataclass(frozen=True)
class WeaklyConvexFn:
    """A real-valued, Lipschitz, prox-friendly penalty.

    ``eta`` is the weak-convexity modulus: fn + (eta/2)||.||^2 is convex.
    ``prox(z, mu)`` is the unique minimizer of fn + (2 mu)^-1 ||. - z||^2,
    single-valued for 0 < mu < 1/eta (any mu > 0 when eta == 0).
    ``subgrad`` optionally returns one subdifferential element (used by
    subgradient-type baselines); None when no selection is implemented.
    """

    eval: Callable[[Array], float]
    prox: Callable[[Array, float], Array]
    eta: float
    subgrad: Optional[Callable[[Array], Array]] = None


@dataclass(frozen=True)
class ProxFriendlyConvexFn:
    """A proper lsc convex function with an exact prox map.

    ``eval`` may return +inf outside the domain.  ``prox(z, gamma)`` always
    lands inside the domain and is firmly nonexpansive.
    """

    eval: Callable[[Array], float]
    prox: Callable[[Array, float], Array]
    domain_membership: Callable[[Array], bool]


# ---------------------------------------------------------------------------
# scalar-separable proximity operators
# ---------------------------------------------------------------------------

def prox_l1(z, mu: float, weight: float = 1.0) -> Array:
    """Soft-thresholding: prox of weight*||.||_1 at index mu."""
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if weight <= 0:
        raise ValueError(f"weight must be positive, got {weight}")
    z = _vec(z)
    return np.sign(z) * np.maximum(np.abs(z) - mu * weight, 0.0)


def prox_mcp(z, mu: float, lam: float, theta_shape: float) -> Array:
    """Prox of the minimax concave penalty MCP(lam, theta) at index mu.

    MCP(x) = lam|x| - x^2/(2 theta) for |x| <= theta*lam, constant beyond.
    Requires mu < theta (= 1/eta), where the prox is single-valued.
    """
    if lam <= 0 or theta_shape <= 0:
        raise ValueError("lam and theta_shape must be positive")
    if mu <= 0 or mu >= theta_shape:
        raise ValueError(
            f"index mu={mu} outside (0, {theta_shape}); MCP prox is "
            "set-valued at and beyond the weak-convexity threshold"
        )
    z = _vec(z)
    a = np.abs(z)
    inner = theta_shape * np.maximum(a - mu * lam, 0.0) / (theta_shape - mu)
    return np.sign(z) * np.where(a <= theta_shape * lam, inner, a)


def prox_scad(z, mu: float, lam: float, a_shape: float) -> Array:
    """Prox of the SCAD penalty (lam, a) at index mu; needs mu < a - 1."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    if a_shape <= 2:
        raise ValueError(f"a_shape must exceed 2, got {a_shape}")
    if mu <= 0 or mu >= a_shape - 1.0:
        raise ValueError(
            f"index mu={mu} outside (0, {a_shape - 1.0}); SCAD prox is "
            "set-valued at and beyond the weak-convexity threshold"
        )
    z = _vec(z)
    a = np.abs(z)
    soft = np.maximum(a - mu * lam, 0.0)
    mid = ((a_shape - 1.0) * a - a_shape * mu * lam) / (a_shape - 1.0 - mu)
    mag = np.where(
        a <= lam * (1.0 + mu), soft, np.where(a <= a_shape * lam, mid, a)
    )
    return np.sign(z) * mag


def prox_box(z, lo, hi) -> Array:
    """Projection onto the box [lo, hi]; +-inf bounds leave a side free."""
    z, lo, hi = _vec(z), _vec(lo), _vec(hi)
    lo, hi = np.broadcast_to(lo, z.shape), np.broadcast_to(hi, z.shape)
    if np.any(lo > hi):
        raise ValueError("box is empty: lo > hi in some coordinate")
    return np.clip(z, lo, hi)


def prox_soav(z, shifts: Sequence, mu: float, weight: float = 1.0) -> Array:
    """Exact prox of weight * (1/M) sum_m ||. - shifts[m]||_1 at index mu.

    Separable; per coordinate the objective is piecewise linear plus a
    quadratic, so the minimizer is a breakpoint or the stationary point of
    one linear piece.  All 2M+1 candidates are evaluated and the best kept.
    """
    if mu <= 0 or weight <= 0:
        raise ValueError("mu and weight must be positive")
    shifts = np.atleast_2d(np.asarray(shifts, dtype=float))
    if shifts.shape[0] == 0:
        raise ValueError("shifts must be a nonempty list")
    z = _vec(z)
    if shifts.shape[1] != z.shape[0]:
        raise ValueError(
            f"shift dimension {shifts.shape[1]} != input dimension {z.shape[0]}"
        )
    m_count = shifts.shape[0]
    slopes = 2.0 * np.arange(m_count + 1) - m_count  # sum of signs per piece
    interior = z[None, :] - (mu * weight / m_count) * slopes[:, None]
    cand = np.concatenate([interior, shifts], axis=0)  # (2M+1, d)
    pen = (weight / m_count) * np.sum(
        np.abs(cand[:, None, :] - shifts[None, :, :]), axis=1
    )
    obj = pen + (cand - z[None, :]) ** 2 / (2.0 * mu)
    best = np.argmin(obj, axis=0)
    return cand[best, np.arange(z.shape[0])]


# ---------------------------------------------------------------------------
# Moreau envelope
# ---------------------------------------------------------------------------

def moreau_value(g: WeaklyConvexFn, mu: float, z) -> float:
    """Envelope value: min of g + (2 mu)^-1 ||. - z||^2, via the prox."""
    _check_index(mu, g.eta)
    z = _vec(z)
    p = g.prox(z, mu)
    return float(g.eval(p) + np.sum((p - z) ** 2) / (2.0 * mu))


def moreau_grad(g: WeaklyConvexFn, mu: float, z) -> Array:
    """Gradient of the Moreau envelope: (z - prox(z, mu)) / mu."""
    _check_index(mu, g.eta)
    z = _vec(z)
    return (z - g.prox(z, mu)) / mu


# ---------------------------------------------------------------------------
# projections used by the PSK detection models
# ---------------------------------------------------------------------------

def project_regular_polygon(point, M: int) -> Array:
    """Euclidean projection onto the regular M-gon inscribed in the unit circle.

    Vertices sit at angles 2*pi*m/M.  The point is rotated into the wedge of
    one edge, projected onto that edge (clamped, so vertex regions are
    handled), and rotated back; O(1) and exact.
    """
    if M < 3:
        raise ValueError(f"polygon needs M >= 3 vertices, got {M}")
    p = _vec(point)
    if p.shape != (2,):
        raise ValueError("point must be a 2-vector")
    sector = 2.0 * np.pi / M
    ang = np.mod(np.arctan2(p[1], p[0]), 2.0 * np.pi)
    k = int(ang // sector) % M
    c, s = np.cos(k * sector), np.sin(k * sector)
    q = np.array([c * p[0] + s * p[1], -s * p[0] + c * p[1]])  # rotate by -k*sector
    half = 0.5 * sector
    if q[0] * np.cos(half) + q[1] * np.sin(half) <= np.cos(half):
        return p.copy()  # inside the supporting half-plane of this edge
    v0 = np.array([1.0, 0.0])
    v1 = np.array([np.cos(sector), np.sin(sector)])
    d = v1 - v0
    t = np.clip(np.dot(q - v0, d) / np.dot(d, d), 0.0, 1.0)
    proj = v0 + t * d
    return np.array([c * proj[0] - s * proj[1], s * proj[0] + c * proj[1]])


def project_unit_modulus(point) -> Array:
    """Projection onto the unit circle; the origin maps to (1, 0)."""
    p = _vec(point)
    if p.shape != (2,):
        raise ValueError("point must be a 2-vector")
    r = np.hypot(p[0], p[1])
    if r == 0.0:
        return np.array([1.0, 0.0])
    return p / r


# ---------------------------------------------------------------------------
# penalty constructors
# ---------------------------------------------------------------------------

def l1_norm(weight: float = 1.0, eta: float = 0.0) -> WeaklyConvexFn:
    """weight * ||.||_1.  Convex; ``eta`` may be declared larger than 0 to
    restrict the admissible smoothing indices (some run configurations do)."""
    if weight <= 0:
        raise ValueError("weight must be positive")
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    return WeaklyConvexFn(
        eval=lambda z: float(weight * np.sum(np.abs(z))),
        prox=lambda z, mu: prox_l1(z, mu, weight),
        eta=eta,
        subgrad=lambda z: weight * np.sign(z),
    )


def mcp_penalty(lam: float, theta_shape: float) -> WeaklyConvexFn:
    """Minimax concave penalty; weak-convexity modulus 1/theta."""
    if lam <= 0 or theta_shape <= 0:
        raise ValueError("lam and theta_shape must be positive")

    def value(z):
        a = np.abs(_vec(z))
        per = np.where(
            a <= theta_shape * lam,
            lam * a - a**2 / (2.0 * theta_shape),
            0.5 * theta_shape * lam**2,
        )
        return float(np.sum(per))

    return WeaklyConvexFn(
        eval=value,
        prox=lambda z, mu: prox_mcp(z, mu, lam, theta_shape),
        eta=1.0 / theta_shape,
    )


def scad_penalty(lam: float, a_shape: float) -> WeaklyConvexFn:
    """Smoothly clipped absolute deviation; weak-convexity modulus 1/(a-1)."""
    if lam <= 0 or a_shape <= 2:
        raise ValueError("need lam > 0 and a_shape > 2")

    def value(z):
        a = np.abs(_vec(z))
        per = np.where(
            a <= lam,
            lam * a,
            np.where(
                a <= a_shape * lam,
                (2.0 * a_shape * lam * a - a**2 - lam**2) / (2.0 * (a_shape - 1.0)),
                0.5 * (a_shape + 1.0) * lam**2,
            ),
        )
        return float(np.sum(per))

    return WeaklyConvexFn(
        eval=value,
        prox=lambda z, mu: prox_scad(z, mu, lam, a_shape),
        eta=1.0 / (a_shape - 1.0),
    )


def soav_penalty(shifts: Sequence, weight: float = 1.0) -> WeaklyConvexFn:
    """Sum-of-absolute-values penalty weight * (1/M) sum_m ||. - shifts[m]||_1."""
    shifts = np.atleast_2d(np.asarray(shifts, dtype=float))
    if shifts.shape[0] == 0:
        raise ValueError("shifts must be a nonempty list")
    if weight <= 0:
        raise ValueError("weight must be positive")
    m_count = shifts.shape[0]

    def value(z):
        z = _vec(z)
        return float(
            (weight / m_count) * np.sum(np.abs(z[None, :] - shifts))
        )

    return WeaklyConvexFn(
        eval=value,
        prox=lambda z, mu: prox_soav(z, shifts, mu, weight),
        eta=0.0,
    )


def zero_penalty() -> WeaklyConvexFn:
    """The zero function; prox is the identity."""
    return WeaklyConvexFn(
        eval=lambda z: 0.0,
        prox=lambda z, mu: _vec(z).copy(),
        eta=0.0,
        subgrad=lambda z: np.zeros_like(_vec(z)),
    )


def box_indicator(lo, hi) -> ProxFriendlyConvexFn:
    """Indicator of the box [lo, hi]; prox is the clamp, for every gamma."""
    lo, hi = _vec(lo), _vec(hi)
    if np.any(lo > hi):
        raise ValueError("box is empty: lo > hi in some coordinate")

    def member(z):
        z = _vec(z)
        return bool(np.all(z >= lo) and np.all(z <= hi))

    return ProxFriendlyConvexFn(
        eval=lambda z: 0.0 if member(z) else float("inf"),
        prox=lambda z, gamma: prox_box(z, lo, hi),
        domain_membership=member,
    )


def zero_fn() -> ProxFriendlyConvexFn:
    """The zero function as a prox-friendly term (unconstrained problems)."""
    return ProxFriendlyConvexFn(
        eval=lambda z: 0.0,
        prox=lambda z, gamma: _vec(z).copy(),
        domain_membership=lambda z: True,
    )
