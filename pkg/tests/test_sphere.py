import numpy as np
import pytest

from hidden_basis import (
    class_distance,
    exp_map,
    orthonormal_complement,
    project_coords,
    random_orthogonal,
    sample_tangent_sphere,
)


def test_exp_map_quarter_turn():
    p = np.array([1.0, 0.0])
    out = exp_map(p, np.array([0.0, np.pi / 2]))
    np.testing.assert_allclose(out, [0.0, 1.0], atol=1e-12)


def test_exp_map_zero_is_identity():
    p = np.array([0.6, 0.8])
    np.testing.assert_array_equal(exp_map(p, np.zeros(2)), p)


def test_exp_map_small_step():
    out = exp_map(np.array([1.0, 0.0]), np.array([0.0, 0.1]))
    np.testing.assert_allclose(out, [np.cos(0.1), np.sin(0.1)], atol=1e-14)


def test_exp_map_unit_norm_and_tangency_guard():
    rng = np.random.default_rng(0)
    for _ in range(100):
        p = rng.standard_normal(5)
        p /= np.linalg.norm(p)
        x = sample_tangent_sphere(p, rng.uniform(0.01, 2.0), rng)
        out = exp_map(p, x)
        assert abs(np.linalg.norm(out) - 1.0) <= 1e-12
    with pytest.raises(ValueError):
        exp_map(np.array([1.0, 0.0]), np.array([0.5, 0.5]))


def test_tangent_sample_norm_and_orthogonality():
    rng = np.random.default_rng(1)
    p = np.array([0.6, 0.0, 0.8])
    for _ in range(50):
        t = sample_tangent_sphere(p, 0.3, rng)
        assert np.linalg.norm(t) == pytest.approx(0.3, abs=1e-12)
        assert abs(t @ p) <= 1e-10


def test_tangent_sample_symmetry():
    rng = np.random.default_rng(2)
    p = np.zeros(4)
    p[0] = 1.0
    acc = np.zeros(4)
    n = 100_000
    for _ in range(n):
        acc += sample_tangent_sphere(p, 1.0, rng)
    np.testing.assert_array_less(np.abs(acc / n), 0.02)


def test_tangent_sample_guards():
    rng = np.random.default_rng(3)
    with pytest.raises(ValueError):
        sample_tangent_sphere(np.array([1.0]), 1.0, rng)
    with pytest.raises(ValueError):
        sample_tangent_sphere(np.array([1.0, 0.0]), 0.0, rng)


def test_project_coords():
    basis = np.eye(3)
    u = np.array([0.8, 0.6, 0.0])
    np.testing.assert_array_equal(project_coords(u, [0, 1, 2], basis), u)
    np.testing.assert_array_equal(project_coords(u, [], basis), np.zeros(3))
    np.testing.assert_allclose(project_coords(u, [1], basis), [0.0, 0.6, 0.0], atol=1e-15)
    with pytest.raises(ValueError):
        project_coords(u, [3], basis)


def test_complement_of_e1():
    comp = orthonormal_complement([np.eye(3)[0]], dim=3)
    assert comp.shape == (2, 3)
    span = np.vstack([np.eye(3)[:1], comp])
    np.testing.assert_allclose(span @ span.T, np.eye(3), atol=1e-12)


def test_complement_of_nothing_is_full_basis():
    comp = orthonormal_complement([], dim=4)
    assert comp.shape == (4, 4)
    np.testing.assert_allclose(comp @ comp.T, np.eye(4), atol=1e-12)


def test_complement_random_pair_in_r4():
    rng = np.random.default_rng(4)
    q = random_orthogonal(4, rng)
    comp = orthonormal_complement([q[0], q[1]], dim=4)
    assert comp.shape == (2, 4)
    all_vecs = np.vstack([q[:2], comp])
    gram = all_vecs @ all_vecs.T
    assert np.max(np.abs(gram - np.eye(4))) <= 1e-9


def test_complement_spans_with_input():
    rng = np.random.default_rng(5)
    vecs = [v / np.linalg.norm(v) for v in rng.standard_normal((2, 6))]
    comp = orthonormal_complement(vecs, dim=6)
    # Combined projector reconstructs arbitrary vectors.
    q, _ = np.linalg.qr(np.array(vecs).T)
    proj = q @ q.T + comp.T @ comp
    for _ in range(100):
        x = rng.standard_normal(6)
        np.testing.assert_allclose(proj @ x, x, atol=1e-8)


def test_complement_rejects_rank_deficiency():
    v = np.array([1.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        orthonormal_complement([v, v], dim=3)


def test_class_distance_basics():
    e = np.eye(3)
    assert class_distance(e[0], e[1]) == pytest.approx(np.sqrt(2.0))
    u = np.array([0.6, -0.8, 0.0])
    assert class_distance(u, -u) == 0.0


def test_class_distance_same_orthant_is_euclidean():
    rng = np.random.default_rng(6)
    for _ in range(50):
        u = np.abs(rng.standard_normal(4))
        u /= np.linalg.norm(u)
        v = np.abs(rng.standard_normal(4))
        v /= np.linalg.norm(v)
        s = rng.choice([-1.0, 1.0], size=4)
        assert class_distance(s * u, s * v) == pytest.approx(np.linalg.norm(u - v), abs=1e-12)


def test_class_distance_pseudometric_properties():
    rng = np.random.default_rng(7)
    for _ in range(200):
        u, v, w = rng.standard_normal((3, 4))
        u /= np.linalg.norm(u)
        v /= np.linalg.norm(v)
        w /= np.linalg.norm(w)
        duv = class_distance(u, v)
        assert duv == pytest.approx(class_distance(v, u), abs=1e-15)
        assert duv <= class_distance(u, w) + class_distance(w, v) + 1e-12
    # vanishes exactly on sign-flip classes
    u = rng.standard_normal(4)
    u /= np.linalg.norm(u)
    flips = rng.choice([-1.0, 1.0], size=4)
    assert class_distance(u, flips * u) <= 1e-15
    v = u.copy()
    v[0] += 1e-3
    v /= np.linalg.norm(v)
    assert class_distance(u, v) > 1e-4


def test_class_distance_with_rotated_basis():
    rng = np.random.default_rng(8)
    q = random_orthogonal(3, rng)
    u = q[0]
    v = q[1]
    assert class_distance(u, v, basis=q) == pytest.approx(np.sqrt(2.0))
    # partial basis completes deterministically
    assert class_distance(u, -u, basis=q[:2]) == pytest.approx(0.0, abs=1e-12)
