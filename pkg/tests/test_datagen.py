import numpy as np
import pytest

from hidden_basis.datagen import (
    generate,
    load_samples_csv,
    make_ica_samples,
    make_spectral_points,
    sample_sources,
    save_samples_csv,
    source_kurtosis,
)


def test_sources_unit_variance_zero_mean():
    rng = np.random.default_rng(0)
    s = sample_sources(["uniform", "laplace", "rademacher"], 200_000, rng)
    np.testing.assert_allclose(s.mean(axis=0), 0.0, atol=0.02)
    np.testing.assert_allclose(s.var(axis=0), 1.0, atol=0.02)


def test_sources_empirical_kurtosis():
    rng = np.random.default_rng(1)
    s = sample_sources(["uniform", "laplace"], 400_000, rng)
    for j, name in enumerate(["uniform", "laplace"]):
        k4 = np.mean(s[:, j] ** 4) - 3 * np.mean(s[:, j] ** 2) ** 2
        assert k4 == pytest.approx(source_kurtosis(name), abs=0.1)


def test_unknown_source_rejected():
    with pytest.raises(ValueError):
        sample_sources(["cauchy"], 10, np.random.default_rng(0))


def test_ica_mixing_fixed_by_seed():
    rng1 = np.random.default_rng(0)
    rng2 = np.random.default_rng(99)
    _, a1 = make_ica_samples(["uniform"] * 3, 10, mixing_seed=5, sample_rng=rng1)
    _, a2 = make_ica_samples(["uniform"] * 3, 10, mixing_seed=5, sample_rng=rng2)
    np.testing.assert_array_equal(a1, a2)
    np.testing.assert_allclose(a1 @ a1.T, np.eye(3), atol=1e-12)


def test_spectral_points_structure():
    rng = np.random.default_rng(2)
    pts, basis = make_spectral_points([3, 2], [0.5, 1.0], 4, rng)
    assert pts.data.shape == (5, 4)
    np.testing.assert_allclose(pts.data[0], 0.5 * basis[0], atol=1e-15)
    np.testing.assert_allclose(pts.data[4], basis[1], atol=1e-15)


def test_generate_dispatch_and_determinism():
    spec = {"kind": "ica", "sources": ["uniform", "laplace"], "mixing_seed": 1, "n": 100}
    a = generate(spec, data_seed=7)
    b = generate(spec, data_seed=7)
    np.testing.assert_array_equal(a.samples.data, b.samples.data)
    c = generate(spec, data_seed=8)
    assert not np.array_equal(a.samples.data, c.samples.data)
    np.testing.assert_array_equal(a.truth, c.truth)  # mixing survives the repeat

    gm = generate({"kind": "gmm", "weights": [0.5, 0.5], "means": [[3, 0], [0, 3]], "sigma": 1.0, "n": 50}, 0)
    assert gm.samples.data.shape == (50, 2)
    od = generate({"kind": "odeco", "d": 4, "m": 3, "order": 3, "seed": 5}, 0)
    assert od.tensor.directions.shape == (3, 4)
    sp = generate({"kind": "spectral_ideal", "counts": [2, 3], "scales": [1, 1], "d": 2}, 0)
    assert sp.samples.data.shape == (5, 2)
    with pytest.raises(ValueError):
        generate({"kind": "mystery"}, 0)


def test_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    spec = {"kind": "gmm", "weights": [1.0], "means": [[1.0, -2.0]], "sigma": 0.3, "n": 17}
    prob = generate(spec, 0)
    path = tmp_path / "samples.csv"
    save_samples_csv(path, prob.samples)
    back = load_samples_csv(path)
    np.testing.assert_array_equal(back.data, prob.samples.data)
    text = path.read_text()
    assert "," in text and "\r" not in text
