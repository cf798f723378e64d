"""Seeded synthetic data generators and delimited sample IO.

Generator specs mirror the JSON documents accepted by the CLI, e.g.
{"kind": "ica", "sources": ["uniform", "laplace"], "mixing_seed": 3, "n": 10000}.
Every generator separates the structural randomness (mixing matrix, cluster
directions) from the sampling randomness so repeated draws share a ground
truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .applications import OdecoTensor, SampleMatrix
from .sphere import random_orthogonal

SOURCE_KINDS = ("uniform", "laplace", "rademacher")


def sample_sources(names: Sequence[str], n: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-variance zero-mean independent sources, one column per name."""
    cols = []
    for name in names:
        if name == "uniform":
            cols.append(rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size=n))
        elif name == "laplace":
            cols.append(rng.laplace(0.0, 1.0 / math.sqrt(2.0), size=n))
        elif name == "rademacher":
            cols.append(rng.choice([-1.0, 1.0], size=n))
        else:
            raise ValueError(f"unknown source kind {name!r}; expected one of {SOURCE_KINDS}")
    return np.column_stack(cols)


def source_kurtosis(name: str) -> float:
    """Population excess kurtosis of the unit-variance source."""
    return {"uniform": -1.2, "laplace": 3.0, "rademacher": -2.0}[name]


def make_ica_samples(
    sources: Sequence[str],
    n: int,
    mixing_seed: int,
    sample_rng: np.random.Generator,
) -> tuple[SampleMatrix, np.ndarray]:
    """Observations x = A s with A orthogonal; returns (samples, A)."""
    d = len(sources)
    a = random_orthogonal(d, np.random.default_rng(mixing_seed))
    s = sample_sources(sources, n, sample_rng)
    return SampleMatrix(s @ a.T), a


def make_gmm_samples(
    weights: Sequence[float],
    means: np.ndarray,
    sigma: float,
    n: int,
    rng: np.random.Generator,
) -> SampleMatrix:
    w = np.asarray(weights, dtype=float)
    mu = np.asarray(means, dtype=float)
    comp = rng.choice(len(w), p=w / w.sum(), size=n)
    x = mu[comp] + sigma * rng.standard_normal((n, mu.shape[1]))
    return SampleMatrix(x)


def make_odeco(
    d: int,
    m: int,
    order: int,
    rng: np.random.Generator,
    weights: Optional[Sequence[float]] = None,
) -> OdecoTensor:
    directions = random_orthogonal(d, rng)[:m]
    if weights is None:
        w = rng.uniform(0.5, 2.0, size=m)
    else:
        w = np.asarray(weights, dtype=float)
    return OdecoTensor(weights=w, directions=directions, order=order)


def make_spectral_points(
    counts: Sequence[int],
    scales: Sequence[float],
    d: int,
    rng: np.random.Generator,
    noise: float = 0.0,
    basis: Optional[np.ndarray] = None,
    basis_seed: Optional[int] = None,
) -> tuple[SampleMatrix, np.ndarray]:
    """Ideal clustered embedding: count_j copies of scale_j * Z_j, plus
    optional per-point Gaussian noise.  Returns (points, cluster basis)."""
    k = len(counts)
    if len(scales) != k:
        raise ValueError("counts and scales must have equal length")
    if basis is None:
        if basis_seed is None:
            basis = np.eye(d)[:k]
        else:
            basis = random_orthogonal(d, np.random.default_rng(basis_seed))[:k]
    rows = []
    for j, (c, b) in enumerate(zip(counts, scales)):
        block = np.tile(b * basis[j], (int(c), 1))
        rows.append(block)
    pts = np.vstack(rows)
    if noise > 0:
        pts = pts + noise * rng.standard_normal(pts.shape)
    return SampleMatrix(pts), basis


@dataclass(frozen=True)
class GeneratedProblem:
    """A generated instance: data plus the ground-truth directions (rows)."""

    kind: str
    truth: np.ndarray
    samples: Optional[SampleMatrix] = None
    tensor: Optional[OdecoTensor] = None
    meta: dict = field(default_factory=dict)


def generate(spec: dict, data_seed: int) -> GeneratedProblem:
    """Dispatch a generator spec; ``data_seed`` drives the sampling randomness."""
    kind = spec.get("kind")
    rng = np.random.default_rng(data_seed)
    if kind == "ica":
        samples, a = make_ica_samples(
            sources=spec["sources"],
            n=int(spec["n"]),
            mixing_seed=int(spec.get("mixing_seed", 0)),
            sample_rng=rng,
        )
        return GeneratedProblem(kind=kind, truth=a.T, samples=samples, meta={"mixing": a.tolist()})
    if kind == "gmm":
        means = np.asarray(spec["means"], dtype=float)
        samples = make_gmm_samples(
            weights=spec["weights"],
            means=means,
            sigma=float(spec["sigma"]),
            n=int(spec["n"]),
            rng=rng,
        )
        truth = means / np.linalg.norm(means, axis=1, keepdims=True)
        return GeneratedProblem(
            kind=kind,
            truth=truth,
            samples=samples,
            meta={"weights": list(map(float, spec["weights"])), "means": means.tolist(), "sigma": float(spec["sigma"])},
        )
    if kind == "odeco":
        t = make_odeco(
            d=int(spec["d"]),
            m=int(spec.get("m", spec["d"])),
            order=int(spec.get("order", 3)),
            rng=np.random.default_rng(int(spec.get("seed", data_seed))),
            weights=spec.get("weights"),
        )
        return GeneratedProblem(kind=kind, truth=t.directions, tensor=t, meta={"weights": t.weights.tolist(), "order": t.order})
    if kind == "spectral_ideal":
        samples, basis = make_spectral_points(
            counts=spec["counts"],
            scales=spec["scales"],
            d=int(spec["d"]),
            rng=rng,
            noise=float(spec.get("noise", 0.0)),
            basis_seed=spec.get("basis_seed"),
        )
        return GeneratedProblem(kind=kind, truth=basis, samples=samples, meta={"counts": list(spec["counts"])})
    raise ValueError(f"unknown generator kind {kind!r}")


def save_samples_csv(path, samples: SampleMatrix) -> None:
    """One sample per row, no header, '.' decimal, LF line endings."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for row in samples.data:
            fh.write(",".join(repr(float(x)) for x in row))
            fh.write("\n")


def load_samples_csv(path) -> SampleMatrix:
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    return SampleMatrix(data)
