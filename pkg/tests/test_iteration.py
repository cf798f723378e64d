import io

import numpy as np
import pytest

from hidden_basis import (
    ExactBef,
    adaptive_ascent_step,
    class_distance,
    estimate_convergence_order,
    fixed_point_for_support,
    gi_loop,
    gi_step,
    make_contrast_monomial,
    matrix_oracle,
    progress_measure,
    random_orthogonal,
    run_to_convergence,
    sign_symmetric_residual,
    to_oracle,
)


def quartic(d, weights=None, basis=None):
    weights = weights or [1.0] * d
    b = np.eye(d)[: len(weights)] if basis is None else basis
    return ExactBef(basis=b, contrasts=tuple(make_contrast_monomial(w, 4) for w in weights), dimension=d)


def test_gi_step_quartic_value():
    o = to_oracle(quartic(2))
    out = gi_step(o, np.array([0.8, 0.6]))
    expected = np.array([0.512, 0.216]) / np.linalg.norm([0.512, 0.216])
    np.testing.assert_allclose(out, expected, atol=1e-15)


def test_gi_step_fixed_point_at_basis():
    o = to_oracle(quartic(3, weights=[1.0, 2.0, 0.5]))
    z = np.eye(3)[1]
    out = gi_step(o, z)
    assert min(np.linalg.norm(out - z), np.linalg.norm(out + z)) <= 1e-15


def test_gi_step_matches_power_method():
    a = np.diag([3.0, 1.0])
    o = matrix_oracle(a)
    u = np.array([1.0, 1.0]) / np.sqrt(2.0)
    out = gi_step(o, u)
    np.testing.assert_allclose(out, a @ u / np.linalg.norm(a @ u), atol=1e-15)
    np.testing.assert_allclose(out, [0.9486832980505138, 0.31622776601683794], atol=1e-12)


def test_gi_step_zero_gradient_returns_input():
    g = make_contrast_monomial(1, 4)
    bef = ExactBef(basis=np.eye(3)[:1], contrasts=(g,), dimension=3)
    o = to_oracle(bef)
    u = np.array([0.0, 0.6, 0.8])  # orthogonal to the encoded direction
    np.testing.assert_array_equal(gi_step(o, u), u)


def test_gi_step_norm_preservation():
    rng = np.random.default_rng(0)
    o = to_oracle(quartic(5))
    for _ in range(100):
        u = rng.standard_normal(5)
        u /= np.linalg.norm(u)
        assert abs(np.linalg.norm(gi_step(o, u)) - 1.0) <= 1e-12


def test_orthant_preservation_positive_weights():
    rng = np.random.default_rng(1)
    o = to_oracle(quartic(4, weights=[1.0, 2.0, 0.5, 1.5]))
    for _ in range(100):
        u = rng.standard_normal(4)
        u /= np.linalg.norm(u)
        v = gi_step(o, u)
        mask = u != 0
        assert np.all(np.sign(v[mask]) * np.sign(u[mask]) >= 0)


def test_sign_class_consistency():
    rng = np.random.default_rng(2)
    o = to_oracle(quartic(4, weights=[1.0, 2.0, 0.5, 1.5]))
    for _ in range(50):
        u = rng.standard_normal(4)
        u /= np.linalg.norm(u)
        flips = rng.choice([-1.0, 1.0], size=4)
        assert class_distance(gi_step(o, u), gi_step(o, flips * u)) <= 1e-10


def test_gi_loop_zero_steps_and_trace():
    o = to_oracle(quartic(2))
    u0 = np.array([0.8, 0.6])
    u, trace = gi_loop(o, u0, 0)
    np.testing.assert_array_equal(u, u0)
    assert trace.steps == 0
    assert trace.states.shape == (1, 2)


def test_gi_loop_ratio_cubes_each_step():
    o = to_oracle(quartic(2))
    u, trace = gi_loop(o, np.array([0.8, 0.6]), 3)
    ratios = trace.states[:, 1] / trace.states[:, 0]
    expected = [0.75]
    for _ in range(3):
        expected.append(expected[-1] ** 3)
    np.testing.assert_allclose(ratios, expected, rtol=1e-12)


def test_gi_loop_constant_at_fixed_point():
    o = to_oracle(quartic(3))
    z = np.eye(3)[2]
    u, trace = gi_loop(o, z, 5)
    for state in trace.states:
        assert min(np.linalg.norm(state - z), np.linalg.norm(state + z)) <= 1e-15


def test_trace_csv_roundtrip():
    o = to_oracle(quartic(2))
    _, trace = gi_loop(o, np.array([0.8, 0.6]), 4)
    buf = io.StringIO()
    trace.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "step,u_0,u_1,grad_norm"
    assert len(lines) == 6
    parsed = [float(x) for x in lines[1].split(",")]
    assert parsed[1] == 0.8


def test_run_to_convergence_immediate():
    o = to_oracle(quartic(4))
    rep = run_to_convergence(o, np.eye(4)[0], tol=1e-10)
    assert rep.converged and rep.steps <= 1
    assert rep.final_residual <= 1e-10


def test_run_to_convergence_random_starts():
    rng = np.random.default_rng(3)
    o = to_oracle(quartic(8))
    for _ in range(20):
        u0 = rng.standard_normal(8)
        u0 /= np.linalg.norm(u0)
        rep = run_to_convergence(o, u0, tol=1e-10, max_steps=100)
        assert rep.converged and rep.steps <= 20
        dists = [min(np.linalg.norm(rep.limit - z), np.linalg.norm(rep.limit + z)) for z in np.eye(8)]
        assert min(dists) <= 1e-8


def test_run_to_convergence_at_unstable_fixed_point():
    o = to_oracle(quartic(2))
    u0 = np.array([1.0, 1.0]) / np.sqrt(2.0)
    rep = run_to_convergence(o, u0, tol=1e-10)
    assert rep.converged
    np.testing.assert_allclose(rep.limit, u0, atol=1e-12)


def test_run_to_convergence_exhaustion():
    # A matrix with a tiny spectral gap converges too slowly for the budget.
    a = np.diag([1.0, 0.999999])
    o = matrix_oracle(a)
    u0 = np.array([0.1, np.sqrt(1 - 0.01)])
    rep = run_to_convergence(o, u0, tol=1e-14, max_steps=5)
    assert not rep.converged
    assert rep.steps == 5


def test_monotone_progress_along_traces():
    rng = np.random.default_rng(4)
    bef = quartic(6, weights=[1.0, 0.5, 2.0, 1.5, 0.8, 1.2])
    o = to_oracle(bef)
    for _ in range(20):
        u = rng.standard_normal(6)
        u /= np.linalg.norm(u)
        values = []
        for _ in range(15):
            values.append(progress_measure(bef, u))
            u = gi_step(o, u)
        diffs = np.diff(values)
        assert np.all(diffs >= -1e-12)


def test_fixed_point_symmetric_pair():
    bef = quartic(2)
    v = fixed_point_for_support(bef, [0, 1])
    np.testing.assert_allclose(v, [1.0 / np.sqrt(2.0)] * 2, atol=1e-10)


def test_fixed_point_unequal_weights():
    bef = quartic(2, weights=[1.0, 2.0])
    v = fixed_point_for_support(bef, [0, 1])
    np.testing.assert_allclose(v, [np.sqrt(2.0 / 3.0), np.sqrt(1.0 / 3.0)], atol=1e-8)


def test_fixed_point_singleton_is_basis_vector():
    bef = quartic(3, weights=[1.0, 2.0, 0.5])
    np.testing.assert_array_equal(fixed_point_for_support(bef, [2]), np.eye(3)[2])


def test_fixed_point_is_gi_fixed():
    rng = np.random.default_rng(5)
    basis = random_orthogonal(5, rng)
    bef = quartic(5, weights=[1.0, 2.0, 0.5, 1.5, 0.7], basis=basis)
    o = to_oracle(bef)
    tol = 1e-12
    for support in ([0, 1], [1, 3, 4], [0, 1, 2, 3, 4]):
        v = fixed_point_for_support(bef, support, tol=tol)
        assert sign_symmetric_residual(gi_step(o, v), v) <= 10 * max(tol, 1e-12) + 1e-12


def test_fixed_point_mixed_powers():
    contrasts = (make_contrast_monomial(1, 4), make_contrast_monomial(1, 3))
    bef = ExactBef(basis=np.eye(2), contrasts=contrasts, dimension=2)
    o = to_oracle(bef)
    v = fixed_point_for_support(bef, [0, 1])
    assert sign_symmetric_residual(gi_step(o, v), v) <= 1e-10


def test_fixed_point_requires_certificate():
    contrasts = (make_contrast_monomial(1, 4), make_contrast_monomial(1, 2))
    bef = ExactBef(basis=np.eye(2), contrasts=contrasts, dimension=2)
    with pytest.raises(ValueError):
        fixed_point_for_support(bef, [0, 1])
    with pytest.raises(ValueError):
        fixed_point_for_support(bef, [])


def test_order_estimate_cubic_sequence():
    e = [0.5 ** (3**n) for n in range(4)]
    assert estimate_convergence_order(e) == pytest.approx(3.0, abs=0.01)


def test_order_estimate_linear_sequence():
    e = [0.5 * 0.5**n for n in range(10)]
    assert estimate_convergence_order(e) == pytest.approx(1.0, abs=1e-6)


def test_order_estimate_guards():
    with pytest.raises(ValueError):
        estimate_convergence_order([0.5, 0.1, 0.01])  # too few
    with pytest.raises(ValueError):
        estimate_convergence_order([0.5, -0.1, 0.01, 0.001])
    with pytest.raises(ValueError):
        estimate_convergence_order([1e-14, 1e-15, 1e-16, 1e-17])  # all at noise floor


def test_measured_order_quartic_run():
    rng = np.random.default_rng(6)
    bef = quartic(4)
    o = to_oracle(bef)
    orders = []
    for _ in range(10):
        u = rng.standard_normal(4)
        u /= np.linalg.norm(u)
        states = [u.copy()]
        for _ in range(40):
            u = gi_step(o, u)
            states.append(u.copy())
        limit = states[-1]
        errs = [class_distance(s, limit) for s in states[:-1]]
        try:
            orders.append(estimate_convergence_order(errs))
        except ValueError:
            continue
    assert np.median(orders) >= 2.5


def test_adaptive_ascent_equals_gi_step():
    rng = np.random.default_rng(7)
    o = to_oracle(quartic(4, weights=[1.0, 2.0, 0.5, 1.5]))
    for _ in range(30):
        u = rng.standard_normal(4)
        u /= np.linalg.norm(u)
        np.testing.assert_allclose(adaptive_ascent_step(o, u), gi_step(o, u), atol=1e-12)


def test_adaptive_ascent_quartic_value():
    o = to_oracle(quartic(2))
    out = adaptive_ascent_step(o, np.array([0.8, 0.6]))
    expected = np.array([0.512, 0.216]) / np.linalg.norm([0.512, 0.216])
    np.testing.assert_allclose(out, expected, atol=1e-12)


def test_adaptive_ascent_fixed_point_and_zero_grad():
    o = to_oracle(quartic(2))
    z = np.eye(2)[0]
    np.testing.assert_allclose(adaptive_ascent_step(o, z), z, atol=1e-15)
    g = make_contrast_monomial(1, 4)
    bef = ExactBef(basis=np.eye(3)[:1], contrasts=(g,), dimension=3)
    u = np.array([0.0, 1.0, 0.0])
    np.testing.assert_array_equal(adaptive_ascent_step(to_oracle(bef), u), u)
