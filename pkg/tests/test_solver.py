import csv
import math

import numpy as np
import pytest

from varsmooth import (
    CompositeProblem,
    DivergenceError,
    SmoothFn,
    SmoothingSchedule,
    SolverConfig,
    StepsizeError,
    armijo_holds,
    backtrack_stepsize,
    build_polar_problem,
    fixed_stepsize,
    generate_instance,
    grad_lipschitz,
    identity_map,
    l1_norm,
    lmmse_detect,
    mu_at,
    polar_from_lifted,
    prox_l1,
    realify_matrix,
    realify_vector,
    run,
    zero_fn,
    zero_penalty,
)
from varsmooth.problem import surrogate_grad, surrogate_value
from varsmooth.solver import write_trajectory_csv


def quadratic_problem(curvature=1.0):
    h = SmoothFn(
        eval=lambda x: 0.5 * curvature * float(x @ x),
        grad=lambda x: curvature * x,
    )
    return CompositeProblem(
        h=h,
        inner_map=identity_map(),
        g=zero_penalty(),
        phi=zero_fn(),
        lip_const=curvature,
        lip_mu_coeff=0.0,
    )


def abs_problem():
    h = SmoothFn(eval=lambda x: 0.0, grad=lambda x: np.zeros_like(x))
    return CompositeProblem(
        h=h,
        inner_map=identity_map(),
        g=l1_norm(1.0, eta=1.0),
        phi=zero_fn(),
        lip_const=0.0,
        lip_mu_coeff=1.0,
    )


def detection_setup(U=16, B=16, seed=5, snr_db=20):
    inst = generate_instance(U=U, B=B, M=8, snr_db=snr_db, seed=seed)
    P = build_polar_problem(inst, 0.1, 0.1, 0.1)
    H = realify_matrix(inst.H_complex)
    y = realify_vector(inst.y_complex)
    x1 = polar_from_lifted(lmmse_detect(H, y, inst.sigma2), 0.1)
    return inst, P, x1


# ---------------------------------------------------------------------------
# smoothing schedule
# ---------------------------------------------------------------------------

def test_schedule_values():
    assert mu_at(SmoothingSchedule(eta=1.0, alpha=3.0), 1) == 0.5
    assert np.isclose(mu_at(SmoothingSchedule(eta=1.0, alpha=3.0), 8), 0.25)
    assert np.isclose(mu_at(SmoothingSchedule(eta=2.0, alpha=1.0), 10), 0.025)


def test_schedule_rejects_bad_inputs():
    with pytest.raises(ValueError):
        mu_at(SmoothingSchedule(eta=1.0), 0)
    with pytest.raises(ValueError):
        SmoothingSchedule(eta=1.0, scale=0.6)  # above 1/(2 eta)
    with pytest.raises(ValueError):
        SmoothingSchedule(eta=1.0, alpha=0.5)
    with pytest.raises(ValueError):
        SmoothingSchedule(eta=0.0)


@pytest.mark.parametrize("alpha", [1.0, 2.0, 3.0])
def test_schedule_monotone_bounded_with_ratio_band(alpha):
    sched = SmoothingSchedule(eta=1.0, alpha=alpha)
    mus = np.array([mu_at(sched, n) for n in range(1, 2001)])
    assert np.all(mus <= 0.5 + 1e-15)
    assert np.all(np.diff(mus) < 0)
    ratios = mus[1:] / mus[:-1]
    assert np.all(ratios <= 1.0)
    assert np.all(ratios >= 2.0 ** (-1.0 / alpha) - 1e-15)


# ---------------------------------------------------------------------------
# stepsize rules
# ---------------------------------------------------------------------------

def test_armijo_exact_equality_on_quadratic():
    P = quadratic_problem()
    assert armijo_holds(P, 0.5, np.array([1.0]), 1.0, 0.5)
    assert not armijo_holds(P, 0.5, np.array([1.0]), 1.0, 0.99)


def test_armijo_trivially_true_at_stationary_point():
    P = quadratic_problem()
    for gamma in (0.1, 1.0, 10.0):
        assert armijo_holds(P, 0.5, np.array([0.0]), gamma, 0.9)


def test_backtracking_accepts_valid_initial_step():
    P = quadratic_problem()
    gamma, x_next, trials = backtrack_stepsize(
        P, 0.5, np.array([1.0]), gamma_initial=1.0, rho=0.5, c=0.5, cap=30
    )
    assert gamma == 1.0 and trials == 1
    assert np.allclose(x_next, [0.0])


def test_backtracking_accepts_stationary_point_immediately():
    P = quadratic_problem()
    gamma, x_next, trials = backtrack_stepsize(
        P, 0.5, np.array([0.0]), gamma_initial=2.0, rho=0.5, c=0.5, cap=30
    )
    assert gamma == 2.0 and trials == 1 and np.allclose(x_next, [0.0])


def test_backtracking_matches_direct_search_over_exponents():
    curvature = 4.0
    c, rho = 0.25, 0.5
    P = quadratic_problem(curvature)
    gamma_init = 2.0 / curvature * (1.0 - c) * 4.0
    x = np.array([1.0])
    gamma, _, trials = backtrack_stepsize(P, 0.5, x, gamma_init, rho, c, cap=60)
    # independent search: first exponent k whose stepsize passes the test
    k = 0
    while not armijo_holds(P, 0.5, x, gamma_init * rho**k, c):
        k += 1
    assert gamma == gamma_init * rho**k
    assert trials == k + 1
    assert trials > 1


def test_backtracking_cap_failure_carries_diagnostics():
    # gradient of |x|^4 is not Lipschitz; far from 0 with a tiny cap the
    # sufficient decrease test keeps failing at gamma_initial
    h = SmoothFn(
        eval=lambda x: float(np.sum(x**4)), grad=lambda x: 4.0 * x**3
    )
    P = CompositeProblem(
        h=h, inner_map=identity_map(), g=zero_penalty(), phi=zero_fn()
    )
    with pytest.raises(StepsizeError) as err:
        backtrack_stepsize(P, 0.5, np.array([1e6]), 1.0, 0.5, 0.5, cap=2)
    assert err.value.trials == 2
    assert err.value.gamma_last > 0


def test_fixed_stepsize_values():
    assert fixed_stepsize(1.0, 1.0, 1.0, 0.5) == 0.5
    assert fixed_stepsize(0.0, 1.0, 0.25, 0.5) == 0.25
    c = 2.0**-13
    assert np.isclose(
        fixed_stepsize(2016.4, 16.0, 0.5, c), 2.0 * (1.0 - c) / 2048.4
    )


def test_fixed_stepsize_validation():
    with pytest.raises(ValueError):
        fixed_stepsize(-1.0, 1.0, 0.5, 0.5)
    with pytest.raises(ValueError):
        fixed_stepsize(1.0, 1.0, 0.5, 1.5)
    with pytest.raises(ValueError):
        fixed_stepsize(0.0, 0.0, 0.5, 0.5)


# ---------------------------------------------------------------------------
# full runs
# ---------------------------------------------------------------------------

def test_run_gradient_descent_on_quadratic():
    P = quadratic_problem()
    sched = SmoothingSchedule(eta=1.0)
    cfg = SolverConfig(stepsize_mode="fixed", armijo_c=0.25, max_iterations=50)
    traj = run(P, np.array([1.0]), sched, cfg)
    xs = np.array([r.cost_true for r in traj.records])
    assert np.all(np.diff(xs) <= 0)
    assert abs(traj.final_x[0]) < 1e-6
    assert traj.min_measure < 1e-6
    # contraction factor is exactly 1 - gamma with gamma = 2(1 - c)/1
    gamma = 2.0 * (1.0 - 0.25)
    assert np.isclose(traj.records[0].gamma, gamma)


def test_run_matches_independent_soft_threshold_recursion():
    P = abs_problem()
    sched = SmoothingSchedule(eta=1.0, alpha=3.0)
    cfg = SolverConfig(
        stepsize_mode="fixed", armijo_c=0.5, max_iterations=3000, keep_iterates=True
    )
    traj = run(P, np.array([2.0]), sched, cfg)
    # independent dynamics: envelope gradient steps with the same stepsizes
    x = 2.0
    for n in range(1, len(traj.records) + 1):
        mu = 0.5 * n ** (-1.0 / 3.0)
        gamma = 2.0 * (1.0 - 0.5) / (1.0 / mu)
        x = x - gamma * (x - float(prox_l1([x], mu, 1.0)[0])) / mu
    assert np.isclose(traj.final_x[0], x, atol=1e-12)
    assert abs(traj.final_x[0]) < 1e-3
    assert traj.min_measure < 1e-3


def test_run_backtracking_on_detection_model_keeps_guarantees():
    _, P, x1 = detection_setup()
    sched = SmoothingSchedule(eta=1.0, alpha=3.0)
    cfg = SolverConfig(
        armijo_c=2.0**-13,
        gamma_initial=1.0,
        rho=0.5,
        max_iterations=300,
        keep_iterates=True,
    )
    traj = run(P, x1, sched, cfg)
    assert len(traj.records) == 300
    for rec, x in zip(traj.records, traj.iterates):
        assert P.phi.domain_membership(x)
        assert armijo_holds(P, rec.mu, x, rec.gamma, 2.0**-13)
        assert rec.measure >= 0
        assert rec.gamma > 0
    # running minimum of the measure is what the records already report
    mins = np.minimum.accumulate([r.measure for r in traj.records])
    assert traj.min_measure == mins[-1]
    assert traj.gamma_max == max(r.gamma for r in traj.records)


def test_run_fixed_mode_hits_stepsize_identity_on_detection_model():
    _, P, x1 = detection_setup(U=8, B=8)
    sched = SmoothingSchedule(eta=1.0, alpha=3.0)
    cfg = SolverConfig(stepsize_mode="fixed", armijo_c=2.0**-13, max_iterations=50)
    traj = run(P, x1, sched, cfg)
    c = 2.0**-13
    for rec in traj.records:
        assert np.isclose(rec.gamma * grad_lipschitz(P, rec.mu), 2.0 * (1.0 - c))


def test_run_backtracking_stepsize_lower_bound_on_detection_model():
    _, P, x1 = detection_setup(U=8, B=8)
    sched = SmoothingSchedule(eta=1.0, alpha=3.0)
    c, rho = 2.0**-13, 0.5
    cfg = SolverConfig(armijo_c=c, gamma_initial=1.0, rho=rho, max_iterations=200)
    traj = run(P, x1, sched, cfg)
    for rec in traj.records:
        lower = rho * 2.0 * (1.0 - c) / grad_lipschitz(P, rec.mu)
        assert rec.gamma >= min(lower, 1.0) - 1e-15


def test_run_rejects_infeasible_start():
    _, P, x1 = detection_setup(U=4, B=4)
    bad = x1.copy()
    bad[0] = 2.0  # radius above the box
    with pytest.raises(ValueError):
        run(P, bad, SmoothingSchedule(eta=1.0), SolverConfig(max_iterations=5))


def test_run_rejects_schedule_exceeding_penalty_range():
    P = abs_problem()  # eta = 1
    sched = SmoothingSchedule(eta=0.5)  # scale 1.0 > 1/(2*1)
    with pytest.raises(ValueError):
        run(P, np.array([1.0]), sched, SolverConfig(max_iterations=5))


@pytest.mark.filterwarnings("ignore:overflow encountered")
def test_run_raises_divergence_on_wrong_lipschitz_constant():
    P = quadratic_problem(curvature=100.0)
    lying = CompositeProblem(
        h=P.h,
        inner_map=P.inner_map,
        g=P.g,
        phi=P.phi,
        lip_const=0.01,  # far below the true curvature: steps overshoot
        lip_mu_coeff=0.0,
    )
    cfg = SolverConfig(stepsize_mode="fixed", armijo_c=0.5, max_iterations=5000)
    with pytest.raises(DivergenceError):
        run(lying, np.array([1.0]), SmoothingSchedule(eta=1.0), cfg)


def test_run_stops_on_x_change_tolerance():
    P = quadratic_problem()
    cfg = SolverConfig(
        stepsize_mode="fixed", armijo_c=0.25, max_iterations=10_000,
        x_change_tolerance=1e-8,
    )
    traj = run(P, np.array([1.0]), SmoothingSchedule(eta=1.0), cfg)
    assert len(traj.records) < 10_000
    assert traj.records[-1].x_change <= 1e-8


def test_run_respects_time_budget():
    _, P, x1 = detection_setup(U=8, B=8)
    cfg = SolverConfig(max_iterations=10**6, time_budget_s=0.05)
    traj = run(P, x1, SmoothingSchedule(eta=1.0), cfg)
    assert len(traj.records) < 10**6
    assert traj.records[-1].elapsed_s >= 0.05


# ---------------------------------------------------------------------------
# trajectory serialization
# ---------------------------------------------------------------------------

def test_trajectory_csv_roundtrip(tmp_path):
    _, P, x1 = detection_setup(U=4, B=4)
    traj = run(P, x1, SmoothingSchedule(eta=1.0), SolverConfig(max_iterations=7))
    path = tmp_path / "traj.csv"
    traj.to_csv(path, metadata={"seed": 5, "method": "pvs"})
    lines = path.read_text().splitlines()
    assert lines[0] == "# seed=5"
    assert lines[1] == "# method=pvs"
    header = lines[2].split(",")
    assert header == [
        "n", "mu", "gamma", "cost_surrogate", "cost_true",
        "measure", "x_change", "elapsed_s", "backtracks",
    ]
    rows = list(csv.reader(lines[3:]))
    assert len(rows) == 7
    assert int(rows[0][0]) == 1
    assert float(rows[0][1]) == traj.records[0].mu
    assert float(rows[-1][4]) == traj.records[-1].cost_true


def test_write_trajectory_csv_handles_nan_fields(tmp_path):
    from varsmooth.solver import IterationRecord

    rec = IterationRecord(
        n=1, mu=math.nan, gamma=0.5, cost_surrogate=math.nan, cost_true=1.0,
        measure=0.0, x_change=0.0, elapsed_s=0.0, backtrack_count=0,
    )
    path = tmp_path / "t.csv"
    write_trajectory_csv(path, [rec])
    row = path.read_text().splitlines()[1].split(",")
    assert row[1] == "nan" and row[3] == "nan"
