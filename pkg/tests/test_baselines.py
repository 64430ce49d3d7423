import numpy as np
import pytest

from varsmooth import (
    PrimalDualConfig,
    build_polar_problem,
    generate_instance,
    lmmse_detect,
    modulus_pgd,
    prox_subgradient,
    realify_matrix,
    realify_vector,
    soav_primal_dual,
    soav_shifts,
)
from varsmooth.baselines import project_modulus_vector, project_polygon_vector
from varsmooth.problem import (
    CompositeProblem,
    SmoothFn,
    identity_map,
)
from varsmooth.prox import l1_norm, zero_fn, zero_penalty

import oracles


# ---------------------------------------------------------------------------
# LMMSE
# ---------------------------------------------------------------------------

def test_lmmse_identity_channel_no_noise():
    assert np.allclose(lmmse_detect(np.eye(2), [1.0, 2.0], 0.0), [1.0, 2.0])


def test_lmmse_identity_channel_unit_noise():
    assert np.allclose(lmmse_detect(np.eye(2), [1.0, 0.0], 1.0), [0.5, 0.0])


def test_lmmse_matches_conjugate_gradient_oracle():
    rng = np.random.default_rng(20)
    H = rng.standard_normal((8, 8)) + 2.0 * np.eye(8)
    y = rng.standard_normal(8)
    sigma2 = 0.1
    est = lmmse_detect(H, y, sigma2)
    A = H.T @ H + sigma2 * np.eye(8)
    ref = oracles.conjugate_gradient(A, H.T @ y)
    assert np.linalg.norm(est - ref) < 1e-8
    resid = np.linalg.norm(A @ est - H.T @ y)
    assert resid <= 1e-8 * (1.0 + np.linalg.norm(H.T @ y))


def test_lmmse_residual_bound_on_detection_sizes():
    rng = np.random.default_rng(21)
    for _ in range(5):
        inst = generate_instance(U=8, B=8, M=8, snr_db=15, seed=int(rng.integers(1e6)))
        H = realify_matrix(inst.H_complex)
        y = realify_vector(inst.y_complex)
        est = lmmse_detect(H, y, inst.sigma2)
        A = H.T @ H + inst.sigma2 * np.eye(16)
        b = H.T @ y
        assert np.linalg.norm(A @ est - b) <= 1e-8 * (1.0 + np.linalg.norm(b))


def test_lmmse_singular_system_raises():
    H = np.array([[1.0, 1.0], [1.0, 1.0]])  # rank one
    with pytest.raises(np.linalg.LinAlgError):
        lmmse_detect(H, [1.0, 0.0], 0.0)


def test_lmmse_rejects_negative_noise():
    with pytest.raises(ValueError):
        lmmse_detect(np.eye(2), [1.0, 0.0], -0.1)


# ---------------------------------------------------------------------------
# modulus-constrained projected gradient
# ---------------------------------------------------------------------------

def test_modulus_feasible_consistent_start_is_fixed():
    rng = np.random.default_rng(22)
    U = 3
    angles = rng.uniform(-np.pi, np.pi, U)
    x1 = realify_vector(np.exp(1j * angles))
    H = np.eye(2 * U)
    y = H @ x1
    res = modulus_pgd(H, y, x1, iters=20)
    assert np.allclose(res.estimate, x1, atol=1e-14)
    assert res.trajectory[0].x_change == 0.0


def test_modulus_single_symbol_recovers_phase():
    phase = 2.0
    y = realify_vector([0.5 * np.exp(1j * phase)])
    x1 = realify_vector([1.0 + 0.0j])
    res = modulus_pgd(np.eye(2), y, x1, gamma=1.0, iters=5)
    # one exact gradient step lands on y, projection restores unit radius
    est_phase = np.angle(res.estimate[0] + 1j * res.estimate[1])
    assert np.isclose(est_phase, phase, atol=1e-12)


def test_modulus_zero_preprojection_uses_tie_break():
    x1 = np.array([1.0, 0.0])
    res = modulus_pgd(np.eye(2), np.zeros(2), x1, gamma=1.0, iters=3)
    # the pre-projection point is the origin; the documented tie-break keeps
    # the run going and the estimate lands on (1, 0), a fixed point
    assert np.allclose(res.estimate, [1.0, 0.0])
    assert len(res.trajectory) >= 1
    assert res.trajectory[-1].x_change == 0.0


def test_modulus_iterates_stay_on_circle():
    inst = generate_instance(U=6, B=6, M=8, snr_db=10, seed=3)
    H = realify_matrix(inst.H_complex)
    y = realify_vector(inst.y_complex)
    x1 = project_modulus_vector(lmmse_detect(H, y, inst.sigma2), 6)
    res = modulus_pgd(H, y, x1, iters=100, keep_iterates=True)
    for x in res.iterates:
        radii = np.hypot(x[:6], x[6:])
        assert np.allclose(radii, 1.0, atol=1e-12)


def test_modulus_rejects_infeasible_start():
    with pytest.raises(ValueError):
        modulus_pgd(np.eye(2), np.zeros(2), np.array([0.5, 0.0]))


# ---------------------------------------------------------------------------
# SOAV primal-dual splitting
# ---------------------------------------------------------------------------

def test_soav_without_penalty_solves_constrained_least_squares():
    rng = np.random.default_rng(23)
    U, M = 3, 8
    idx = rng.integers(0, M, U)
    s_true = realify_vector(np.exp(2j * np.pi * idx / M))
    H = np.eye(2 * U)
    res = soav_primal_dual(
        H, H @ s_true, 0.0, M,
        PrimalDualConfig(max_iters=5000, x_change_tol=0.0),
    )
    assert np.linalg.norm(res.estimate - s_true) < 1e-5


def _soav_objective_terms(H, y, lam, M, U):
    shifts = soav_shifts(U, M)

    def objective(s):
        r = y - H @ s
        return 0.5 * float(r @ r) + lam * float(np.sum(np.abs(s - shifts))) / M

    return shifts, objective


def test_soav_large_weight_pulls_to_constellation_kink():
    M, U = 4, 1
    y = realify_vector([0.55 + 0.35j])
    H = np.eye(2)
    lam = 2.0
    res = soav_primal_dual(H, y, lam, M, PrimalDualConfig(max_iters=4000))
    shifts, objective = _soav_objective_terms(H, y, lam, M, U)
    # 2D grid oracle over the polygon
    step = 1e-3
    axis = np.arange(-1.05, 1.05 + step, step)
    best = np.inf
    for xv in axis:
        pts = np.stack([np.full_like(axis, xv), axis], axis=1)
        inside = oracles.polygon_contains(pts, M, tol=1e-12)
        if not np.any(inside):
            continue
        pts = pts[inside]
        r = y[None, :] - pts
        vals = 0.5 * np.sum(r**2, axis=1) + (lam / M) * np.sum(
            np.abs(pts[:, None, :] - shifts[None, :, :]), axis=(1, 2)
        )
        best = min(best, float(vals.min()))
    assert objective(res.estimate) <= best + 1e-2
    # the estimate snaps to the penalty's kink lattice (per-coordinate
    # breakpoint values); for a convex sum-of-shifted-l1 that lattice also
    # contains interior points such as the origin, not just the symbols
    breakpoints = np.unique(np.round(shifts, 12))
    for coord in res.estimate:
        assert np.min(np.abs(coord - breakpoints)) < 0.05


def test_soav_solution_satisfies_first_order_conditions():
    rng = np.random.default_rng(24)
    M, U = 8, 4
    inst = generate_instance(U=U, B=U, M=M, snr_db=20, seed=11)
    H = realify_matrix(inst.H_complex)
    y = realify_vector(inst.y_complex)
    lam = 0.3
    res = soav_primal_dual(
        H, y, lam, M, PrimalDualConfig(max_iters=20000, x_change_tol=0.0)
    )
    s = res.estimate
    shifts = soav_shifts(U, M)
    grad_data = H.T @ (H @ s - y)

    def directional_derivative(d):
        # one-sided derivative of the convex objective; coordinates within
        # 1e-9 of a breakpoint count as active (the iterate converged there)
        val = float(grad_data @ d)
        diff = s[None, :] - shifts
        signs = np.sign(diff)
        active = np.abs(diff) <= 1e-9
        per = np.where(active, np.abs(d)[None, :], signs * d[None, :])
        return val + lam * float(np.sum(per)) / M

    for _ in range(200):
        p = project_polygon_vector(rng.uniform(-1, 1, 2 * U), U, M)
        d = p - s
        norm = np.linalg.norm(d)
        if norm < 1e-12:
            continue
        assert directional_derivative(d / norm) >= -1e-4


def test_soav_iterates_stay_in_polygon():
    inst = generate_instance(U=4, B=4, M=8, snr_db=15, seed=7)
    H = realify_matrix(inst.H_complex)
    y = realify_vector(inst.y_complex)
    res = soav_primal_dual(
        H, y, 0.2, 8, PrimalDualConfig(max_iters=150), keep_iterates=True
    )
    for s in res.iterates:
        pairs = np.stack([s[:4], s[4:]], axis=1)
        assert np.all(oracles.polygon_contains(pairs, 8, tol=1e-9))


def test_soav_windowed_objective_trend_is_nonincreasing():
    inst = generate_instance(U=4, B=4, M=8, snr_db=15, seed=9)
    H = realify_matrix(inst.H_complex)
    y = realify_vector(inst.y_complex)
    lam = 0.2
    res = soav_primal_dual(
        H, y, lam, 8, PrimalDualConfig(max_iters=600, x_change_tol=0.0),
        keep_iterates=True,
    )
    _, objective = _soav_objective_terms(H, y, lam, 8, 4)
    iterates = res.iterates[1:]
    window_means = [
        np.mean(iterates[50 * j : 50 * (j + 1)], axis=0) for j in range(12)
    ]
    vals = [objective(w) for w in window_means]
    assert all(b <= a + 1e-8 for a, b in zip(vals, vals[1:]))


def test_soav_stepsize_validation():
    with pytest.raises(ValueError):
        soav_primal_dual(
            np.eye(2), np.zeros(2), 0.1, 4, PrimalDualConfig(tau=10.0, sigma=1.0)
        )
    with pytest.raises(ValueError):
        soav_primal_dual(np.eye(2), np.zeros(2), -0.1, 4)


# ---------------------------------------------------------------------------
# proximal subgradient
# ---------------------------------------------------------------------------

def abs_problem():
    h = SmoothFn(eval=lambda x: 0.0, grad=lambda x: np.zeros_like(x))
    return CompositeProblem(
        h=h,
        inner_map=identity_map(),
        g=l1_norm(1.0, eta=1.0),
        phi=zero_fn(),
        lip_const=1.0,
        lip_mu_coeff=1.0,
    )


def test_sub_heuristic_one_step_arithmetic():
    res = prox_subgradient(abs_problem(), np.array([1.0]), "heuristic", iters=1)
    assert np.allclose(res.estimate, [0.5])


def test_sub_lipschitz_gamma_sequence():
    inst = generate_instance(U=4, B=4, M=8, snr_db=20, seed=2)
    P = build_polar_problem(inst, 0.1, 0.1, 0.1)
    x1 = np.concatenate([np.full(4, 0.5), np.zeros(4)])
    res = prox_subgradient(P, x1, "lipschitz", iters=3)
    expected = [1.0 / (2.0 * P.lip_const * n) for n in (1, 2, 3)]
    assert np.allclose([r.gamma for r in res.trajectory], expected, rtol=1e-15)
    assert res.method_tag == "sub_lipschitz"


def test_sub_without_penalty_is_projected_gradient():
    h = SmoothFn(eval=lambda x: 0.5 * float(x @ x), grad=lambda x: x.copy())
    P = CompositeProblem(
        h=h, inner_map=identity_map(), g=zero_penalty(), phi=zero_fn(),
        lip_const=1.0, lip_mu_coeff=0.0,
    )
    res = prox_subgradient(P, np.array([1.0]), "heuristic", iters=4, keep_iterates=True)
    x = 1.0
    manual = [x]
    for n in range(1, 5):
        x = x - (1.0 / (2 * n)) * x
        manual.append(x)
    assert np.allclose([it[0] for it in res.iterates], manual, rtol=1e-15)


def test_sub_keeps_iterates_feasible_on_detection_model():
    inst = generate_instance(U=4, B=4, M=8, snr_db=20, seed=4)
    P = build_polar_problem(inst, 0.1, 0.1, 0.1)
    x1 = np.concatenate([np.full(4, 0.5), np.zeros(4)])
    res = prox_subgradient(P, x1, "heuristic", iters=50, keep_iterates=True)
    for x in res.iterates:
        assert P.phi.domain_membership(x)


def test_sub_validation():
    P = abs_problem()
    with pytest.raises(ValueError):
        prox_subgradient(P, np.array([1.0]), "unknown")
    no_const = CompositeProblem(
        h=P.h, inner_map=P.inner_map, g=P.g, phi=P.phi
    )
    with pytest.raises(ValueError):
        prox_subgradient(no_const, np.array([1.0]), "lipschitz")
    from varsmooth.prox import mcp_penalty

    no_subgrad = CompositeProblem(
        h=P.h, inner_map=P.inner_map, g=mcp_penalty(1.0, 2.0), phi=P.phi,
        lip_const=1.0, lip_mu_coeff=1.0,
    )
    with pytest.raises(ValueError):
        prox_subgradient(no_subgrad, np.array([1.0]), "heuristic")
