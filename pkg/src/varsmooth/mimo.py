"""PSK MU-MIMO detection: instance generation, the polar-coordinate model,
demodulation, and bit-error-rate scoring.

Channel model: y = H s + e with H = sqrt(R) G, G i.i.d. complex Gaussian of
per-entry variance 1/U, R the symmetric Toeplitz receive correlation with
entries 0.5^|j-k|, and e complex Gaussian noise of variance sigma^2 chosen
from the target SNR.  Everything is deterministic per seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from .problem import CompositeProblem, SmoothFn, SmoothMap
from .prox import Array, box_indicator, l1_norm


@dataclass(frozen=True)
class MimoInstance:
    """One realization of the detection task y = H s_star + e."""

    U: int
    B: int
    M: int
    snr_db: float
    sigma2: float
    H_complex: Array  # (B, U) complex
    s_star_indices: Array  # (U,) ints in 0..M-1
    y_complex: Array  # (B,) complex
    seed: int

    def s_star_complex(self) -> Array:
        return np.exp(2j * np.pi * self.s_star_indices / self.M)


def channel_correlation(B: int) -> Array:
    """Receive-side Toeplitz correlation with entries 0.5^|j-k|."""
    col = 0.5 ** np.arange(B)
    return toeplitz(col)


def _spd_sqrt(R: Array) -> Array:
    w, V = np.linalg.eigh(R)
    return (V * np.sqrt(np.maximum(w, 0.0))) @ V.T


def generate_instance(U: int, B: int, M: int, snr_db: float, seed: int) -> MimoInstance:
    """Draw symbols, channel, and noise for one trial, all from one seed."""
    if U < 1 or B < 1:
        raise ValueError("U and B must be >= 1")
    if M < 2:
        raise ValueError("M must be >= 2")
    rng = np.random.default_rng(seed)
    s_idx = rng.integers(0, M, size=U)
    s_star = np.exp(2j * np.pi * s_idx / M)
    g_scale = np.sqrt(1.0 / (2.0 * U))
    G = g_scale * (rng.standard_normal((B, U)) + 1j * rng.standard_normal((B, U)))
    H = _spd_sqrt(channel_correlation(B)) @ G
    sigma2 = float(10.0 ** (-snr_db / 10.0))
    e_scale = np.sqrt(sigma2 / 2.0)
    e = e_scale * (rng.standard_normal(B) + 1j * rng.standard_normal(B))
    y = H @ s_star + e
    return MimoInstance(
        U=U,
        B=B,
        M=M,
        snr_db=float(snr_db),
        sigma2=sigma2,
        H_complex=H,
        s_star_indices=s_idx,
        y_complex=y,
        seed=seed,
    )


def save_instance(instance: MimoInstance, path) -> None:
    """Self-describing container; loading reproduces bit-identical values."""
    np.savez(
        path,
        U=instance.U,
        B=instance.B,
        M=instance.M,
        snr_db=instance.snr_db,
        sigma2=instance.sigma2,
        seed=instance.seed,
        H_complex=instance.H_complex,
        s_star_indices=instance.s_star_indices,
        y_complex=instance.y_complex,
    )


def load_instance(path) -> MimoInstance:
    with np.load(path) as data:
        return MimoInstance(
            U=int(data["U"]),
            B=int(data["B"]),
            M=int(data["M"]),
            snr_db=float(data["snr_db"]),
            sigma2=float(data["sigma2"]),
            H_complex=data["H_complex"],
            s_star_indices=data["s_star_indices"],
            y_complex=data["y_complex"],
            seed=int(data["seed"]),
        )


# ---------------------------------------------------------------------------
# complex <-> real lifting
# ---------------------------------------------------------------------------

def realify_vector(z) -> Array:
    """Stack [real; imag]; an isometry."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    return np.concatenate([z.real, z.imag])


def realify_matrix(H) -> Array:
    """Block lifting [[re, -im], [im, re]]; commutes with matrix-vector products."""
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    return np.block([[H.real, -H.imag], [H.imag, H.real]])


def complexify_vector(s) -> Array:
    """Inverse of realify_vector."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if s.shape[0] % 2 != 0:
        raise ValueError("lifted vector must have even length")
    half = s.shape[0] // 2
    return s[:half] + 1j * s[half:]


def constellation_points(M: int) -> Array:
    """The M unit-modulus symbols at angles 2*pi*m/M."""
    return np.exp(2j * np.pi * np.arange(M) / M)


def soav_shifts(U: int, M: int) -> Array:
    """Lifted all-ones constellation vectors, one per symbol value: (M, 2U)."""
    pts = constellation_points(M)
    return np.stack([realify_vector(np.full(U, p)) for p in pts])


# ---------------------------------------------------------------------------
# the polar-coordinate detection model
# ---------------------------------------------------------------------------

def polar_map(r, theta) -> Array:
    """Stacked [r*sin(theta); r*cos(theta)] of length 2U."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if r.shape != theta.shape:
        raise ValueError("r and theta must have the same length")
    return np.concatenate([r * np.sin(theta), r * np.cos(theta)])


def split_polar(x) -> tuple[Array, Array]:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    half = x.shape[0] // 2
    return x[:half], x[half:]


def polar_from_lifted(s_real, r_lower: float) -> Array:
    """Polar coordinates (radius clamped into [r_lower, 1]) of a lifted estimate.

    Reading the polar image back through the same lifting convention returns
    the symbol with its original phase, so this is the natural warm start.
    """
    c = complexify_vector(s_real)
    r = np.clip(np.abs(c), r_lower, 1.0)
    theta = 0.5 * np.pi - np.angle(c)
    return np.concatenate([r, theta])


def regularizer_value(r, theta, lambda_r: float, lambda_theta: float, M: int) -> float:
    """Contrast regularizer: lambda_r * sum(1/r) + lambda_theta * ||sin(M theta/2)||_1.

    Over radii in (0, 1] it is minimized exactly on the constellation grid
    (unit radius, angles at multiples of 2*pi/M), with value lambda_r * U.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if np.any(r <= 0):
        raise ValueError("radii must be positive")
    return float(
        lambda_r * np.sum(1.0 / r)
        + lambda_theta * np.sum(np.abs(np.sin(0.5 * M * theta)))
    )


def build_polar_problem(
    instance: MimoInstance,
    lambda_r: float,
    lambda_theta: float,
    r_lower: float,
) -> CompositeProblem:
    """Assemble the polar detection model as a composite problem on (r, theta).

    Smooth part: data fit through the polar map plus the inverse-radius
    penalty.  Composite part: l1 of sin(M theta / 2), handled through its
    Moreau envelope by the solver.  Constraint: radii boxed into [r_lower, 1].
    The attached Lipschitz constants are analytic bounds valid on the box.
    """
    if not 0 < r_lower <= 1:
        raise ValueError("r_lower must lie in (0, 1]")
    if lambda_r <= 0 or lambda_theta <= 0:
        raise ValueError("weights must be positive")
    U, M = instance.U, instance.M
    Hhat = realify_matrix(instance.H_complex)
    yhat = realify_vector(instance.y_complex)
    Hty = Hhat.T @ yhat

    def h_eval(x: Array) -> float:
        r, theta = x[:U], x[U:]
        resid = yhat - Hhat @ polar_map(r, theta)
        return float(0.5 * np.dot(resid, resid) + lambda_r * np.sum(1.0 / r))

    def h_grad(x: Array) -> Array:
        r, theta = x[:U], x[U:]
        sin_t, cos_t = np.sin(theta), np.cos(theta)
        s = np.concatenate([r * sin_t, r * cos_t])
        back = Hhat.T @ (Hhat @ s) - Hty
        grad_r = sin_t * back[:U] + cos_t * back[U:] - lambda_r / r**2
        grad_theta = r * (cos_t * back[:U] - sin_t * back[U:])
        return np.concatenate([grad_r, grad_theta])

    def map_eval(x: Array) -> Array:
        return np.sin(0.5 * M * x[U:])

    def map_jac(x: Array, v: Array) -> Array:
        return 0.5 * M * np.cos(0.5 * M * x[U:]) * v[U:]

    def map_jac_adj(x: Array, w: Array) -> Array:
        out = np.zeros(2 * U)
        out[U:] = 0.5 * M * np.cos(0.5 * M * x[U:]) * w
        return out

    op_norm = float(np.linalg.norm(Hhat, 2))
    sqrt_u = float(np.sqrt(U))
    lip_const = (
        4.0 * ((2.0 + sqrt_u) * op_norm**2 + float(np.linalg.norm(Hty)))
        + 2.0 * sqrt_u * lambda_r / r_lower**4
        + 0.5 * sqrt_u * lambda_theta * M
    )
    lip_mu_coeff = 0.25 * M**2

    lo = np.concatenate([np.full(U, r_lower), np.full(U, -np.inf)])
    hi = np.concatenate([np.ones(U), np.full(U, np.inf)])
    return CompositeProblem(
        h=SmoothFn(eval=h_eval, grad=h_grad),
        inner_map=SmoothMap(
            eval=map_eval, jac_apply=map_jac, jac_adjoint_apply=map_jac_adj
        ),
        g=l1_norm(weight=lambda_theta, eta=1.0),
        phi=box_indicator(lo, hi),
        lip_const=lip_const,
        lip_mu_coeff=lip_mu_coeff,
    )


# ---------------------------------------------------------------------------
# demodulation and scoring
# ---------------------------------------------------------------------------

def _require_power_of_two(M: int) -> int:
    bits = int(M).bit_length() - 1
    if M < 2 or (1 << bits) != M:
        raise ValueError(f"M must be a power of two for the bit mapping, got {M}")
    return bits


def psk_demodulate(s_real, M: int) -> Array:
    """Nearest-angle symbol indices of a lifted estimate [real; imag].

    Angles exactly on a decision boundary resolve to the smaller index.
    """
    _require_power_of_two(M)
    c = complexify_vector(s_real)
    a = np.mod(np.angle(c), 2.0 * np.pi)
    k = a / (2.0 * np.pi / M)
    return (np.ceil(k - 0.5).astype(int)) % M


def gray_encode(m) -> Array:
    m = np.asarray(m, dtype=int)
    return m ^ (m >> 1)


def bit_error_rate(est_indices, true_indices, M: int) -> float:
    """Fraction of differing bits under the Gray symbol-to-bit mapping."""
    bits = _require_power_of_two(M)
    est = np.atleast_1d(np.asarray(est_indices, dtype=int))
    true = np.atleast_1d(np.asarray(true_indices, dtype=int))
    if est.shape != true.shape:
        raise ValueError("index vectors must have equal length")
    diff = gray_encode(est) ^ gray_encode(true)
    errors = sum(int(np.sum((diff >> b) & 1)) for b in range(bits))
    return errors / (est.shape[0] * bits)
