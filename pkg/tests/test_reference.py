import numpy as np
import pytest

from hidden_basis import (
    ExactBef,
    FiniteDiffSpec,
    class_distance,
    enumerate_fixed_points,
    eval_f,
    eval_grad,
    finite_diff_grad,
    gi_step,
    grid_maxima_scan,
    make_contrast_monomial,
    random_orthogonal,
    sign_symmetric_residual,
    to_oracle,
)


def test_finite_diff_quadratic_exact():
    out = finite_diff_grad(lambda u: float(u @ u), np.array([1.0, 2.0]))
    np.testing.assert_allclose(out, [2.0, 4.0], atol=1e-9)


def test_finite_diff_constant_zero():
    out = finite_diff_grad(lambda u: 3.5, np.array([0.3, -0.2, 0.9]))
    np.testing.assert_array_equal(out, np.zeros(3))


def test_finite_diff_spec_bounds():
    with pytest.raises(ValueError):
        FiniteDiffSpec(step=1e-2)
    with pytest.raises(ValueError):
        FiniteDiffSpec(scheme="forward")


def test_finite_diff_validates_bef_gradient():
    rng = np.random.default_rng(0)
    basis = random_orthogonal(4, rng)[:3]
    contrasts = tuple(make_contrast_monomial(w, p) for w, p in [(1, 4), (2, 3), (-1, 4)])
    bef = ExactBef(basis=basis, contrasts=contrasts, dimension=4)
    for _ in range(20):
        u = rng.standard_normal(4)
        u /= np.linalg.norm(u) * 1.3
        fd = finite_diff_grad(lambda v: eval_f(bef, v), u)
        g = eval_grad(bef, u)
        assert np.linalg.norm(fd - g) <= 1e-5 * (1 + np.linalg.norm(g))


def quartic(d, weights):
    return ExactBef(
        basis=np.eye(d), contrasts=tuple(make_contrast_monomial(w, 4) for w in weights), dimension=d
    )


def test_enumeration_count_and_examples():
    bef = quartic(2, [1.0, 1.0])
    points = enumerate_fixed_points(bef)
    assert len(points) == 3
    by_support = {s: v for s, v in points}
    np.testing.assert_allclose(by_support[(0,)], [1, 0], atol=1e-12)
    np.testing.assert_allclose(by_support[(1,)], [0, 1], atol=1e-12)
    np.testing.assert_allclose(by_support[(0, 1)], [np.sqrt(0.5)] * 2, atol=1e-10)


def test_enumeration_single_direction():
    g = make_contrast_monomial(1, 4)
    bef = ExactBef(basis=np.eye(3)[:1], contrasts=(g,), dimension=3)
    points = enumerate_fixed_points(bef)
    assert len(points) == 1
    np.testing.assert_array_equal(points[0][1], np.eye(3)[0])


def test_enumeration_residuals_and_distinctness():
    bef = quartic(4, [1.0, 2.0, 0.5, 1.5])
    oracle = to_oracle(bef)
    tol = 1e-12
    points = enumerate_fixed_points(bef, tol=tol)
    assert len(points) == 15
    for _, v in points:
        assert sign_symmetric_residual(gi_step(oracle, v), v) <= 10 * tol + 1e-12
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            assert class_distance(points[i][1], points[j][1]) >= 0.05


def test_enumeration_size_guard():
    bef = quartic(13, [1.0] * 13)
    with pytest.raises(ValueError):
        enumerate_fixed_points(bef)


def test_circle_scan_equal_quartic():
    bef = quartic(2, [1.0, 1.0])
    maxima = grid_maxima_scan(bef, resolution=10_000)
    angles = sorted(np.mod(np.arctan2([m[1] for m in maxima], [m[0] for m in maxima]), 2 * np.pi))
    expected = [0.0, np.pi / 2, np.pi, 3 * np.pi / 2]
    assert len(angles) == 4
    for a, e in zip(angles, expected):
        assert abs(a - e) <= 2 * np.pi / 10_000 + 1e-12


def test_circle_scan_single_direction():
    g = make_contrast_monomial(1, 4)
    bef = ExactBef(basis=np.eye(2)[:1], contrasts=(g,), dimension=2)
    maxima = grid_maxima_scan(bef, resolution=5_000)
    assert len(maxima) == 2  # +-Z_1 only


def test_circle_scan_mixed_weights():
    bef = quartic(2, [1.0, 3.0])
    maxima = grid_maxima_scan(bef, resolution=10_000)
    assert len(maxima) == 4


def test_circle_scan_rotated_basis():
    rng = np.random.default_rng(1)
    basis = random_orthogonal(2, rng)
    bef = ExactBef(
        basis=basis,
        contrasts=(make_contrast_monomial(1, 4), make_contrast_monomial(2, 3)),
        dimension=2,
    )
    maxima = grid_maxima_scan(bef, resolution=8_000)
    assert len(maxima) == 4


def test_sphere_scan_canonical_quartic():
    bef = quartic(3, [1.0, 2.0, 0.5])
    maxima = grid_maxima_scan(bef, resolution=300)
    # 6 signed copies of the three directions, poles included
    assert len(maxima) == 6


def test_sphere_scan_rotated_mixed_contrasts():
    rng = np.random.default_rng(2)
    basis = random_orthogonal(3, rng)
    contrasts = (
        make_contrast_monomial(1, 4),
        make_contrast_monomial(2, 3),
        make_contrast_monomial(0.5, 4),
    )
    bef = ExactBef(basis=basis, contrasts=contrasts, dimension=3)
    maxima = grid_maxima_scan(bef, resolution=300)
    assert 3 <= len(maxima) <= 6  # odd contrasts can shade one sign copy near ties
    for m in maxima:
        assert min(np.arccos(np.clip(np.abs(basis @ m), 0, 1))) <= 2 * np.pi / 300


def test_scan_guards():
    bef = quartic(2, [1.0, 1.0])
    with pytest.raises(ValueError):
        grid_maxima_scan(bef, resolution=10)
    bef4 = quartic(4, [1.0] * 4)
    with pytest.raises(ValueError):
        grid_maxima_scan(bef4, resolution=100)


def test_scan_flags_maxima_away_from_basis():
    import hidden_basis.reference as ref

    bef = ExactBef(
        basis=np.array([[np.sqrt(0.5), np.sqrt(0.5)], [np.sqrt(0.5), -np.sqrt(0.5)]]),
        contrasts=(make_contrast_monomial(1, 4), make_contrast_monomial(1, 4)),
        dimension=2,
    )
    # e_1 sits 45 degrees from both basis directions: a spurious maximum.
    with pytest.raises(ValueError):
        ref._check_maxima([np.array([1.0, 0.0])], bef, 1e-3)
