"""Basis encoding functions over a known hidden basis, and gradient oracles.

An exact encoding F(u) = sum_i g_i(<u, Z_i>) over orthonormal directions
Z_1..Z_m exposes its value and gradient on the closed unit ball.  Recovery
algorithms only ever see a :class:`GradientOracle`, so sample-based and
perturbed oracles plug into the same machinery.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .contrasts import ContrastFunction, RobustnessCertificate, h_transform, make_contrast_monomial

_ORTHO_TOL = 1e-10
_BALL_TOL = 1e-9


@dataclass(frozen=True)
class GradientOracle:
    """Evaluation access to an (approximate) gradient field on the unit ball.

    ``epsilon`` is the declared sup-norm bound on the gradient error; exact
    oracles declare 0.  Oracles are immutable and safe for concurrent reads.
    """

    grad: Callable[[np.ndarray], np.ndarray]
    dimension: int
    epsilon: float = 0.0
    value: Optional[Callable[[np.ndarray], float]] = None

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("oracle dimension must be >= 1")
        if not (self.epsilon >= 0.0):
            raise ValueError("declared epsilon must be >= 0")


@dataclass(frozen=True)
class ExactBef:
    """Known-basis encoding: orthonormal rows ``basis`` and one contrast per row."""

    basis: np.ndarray
    contrasts: tuple[ContrastFunction, ...]
    dimension: int

    def __post_init__(self):
        b = np.array(self.basis, dtype=float)
        if b.ndim != 2:
            raise ValueError("basis must be a 2d array of row vectors")
        m, d = b.shape
        if m < 1 or d < 2 or m > d:
            raise ValueError(f"need 1 <= m <= d and d >= 2, got m={m}, d={d}")
        if d != self.dimension:
            raise ValueError(f"dimension mismatch: basis has d={d}, declared {self.dimension}")
        if len(self.contrasts) != m:
            raise ValueError(f"need one contrast per basis vector, got {len(self.contrasts)} for m={m}")
        gram_err = np.max(np.abs(b @ b.T - np.eye(m)))
        if gram_err > _ORTHO_TOL:
            raise ValueError(f"basis rows are not orthonormal: max Gram deviation {gram_err:.3e}")
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "contrasts", tuple(self.contrasts))
        # Monomial fast path: vectorize over coordinates when every contrast
        # is a monomial.
        monos = [c.monomial for c in self.contrasts]
        if all(mo is not None for mo in monos):
            w = np.array([mo[0] for mo in monos])
            p = np.array([mo[1] for mo in monos])
            odd = np.array([c.symmetry == "odd" for c in self.contrasts])
            object.__setattr__(self, "_mono", (w, p, odd))
        else:
            object.__setattr__(self, "_mono", None)

    @property
    def num_directions(self) -> int:
        return self.basis.shape[0]

    @property
    def certificate(self) -> Optional[RobustnessCertificate]:
        """Combined robustness certificate, or None if any contrast lacks one."""
        certs = [c.certificate for c in self.contrasts]
        if any(c is None for c in certs):
            return None
        return RobustnessCertificate(
            alpha=max(c.alpha for c in certs),
            beta=min(c.beta for c in certs),
            gamma=min(c.gamma for c in certs),
            delta=max(c.delta for c in certs),
        )


def _check_query(bef: ExactBef, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (bef.dimension,):
        raise ValueError(f"query has shape {u.shape}, expected ({bef.dimension},)")
    n = np.linalg.norm(u)
    if n > 1.0 + _BALL_TOL:
        raise ValueError(f"query lies outside the closed unit ball: norm {n!r}")
    return u


def eval_f(bef: ExactBef, u: np.ndarray) -> float:
    """F(u) = sum_i g_i(<u, Z_i>)."""
    u = _check_query(bef, u)
    c = bef.basis @ u
    mono = bef._mono
    if mono is not None:
        w, p, odd = mono
        a = np.abs(c)
        vals = w * np.where(odd, np.sign(c), 1.0) * a**p
        return float(vals.sum())
    return float(sum(ci.g(x) for ci, x in zip(bef.contrasts, c)))


def eval_grad(bef: ExactBef, u: np.ndarray) -> np.ndarray:
    """grad F(u) = sum_i g_i'(<u, Z_i>) Z_i."""
    u = _check_query(bef, u)
    c = bef.basis @ u
    mono = bef._mono
    if mono is not None:
        w, p, odd = mono
        a = np.abs(c)
        coeff = w * p * np.where(odd, 1.0, np.sign(c)) * a ** (p - 1.0)
    else:
        coeff = np.array([float(ci.g_prime(x)) for ci, x in zip(bef.contrasts, c)])
    return bef.basis.T @ coeff


def eval_f_many(bef: ExactBef, us: np.ndarray) -> np.ndarray:
    """Vectorized F over rows of ``us``; used by grid scans."""
    us = np.asarray(us, dtype=float)
    c = us @ bef.basis.T  # (n, m)
    total = np.zeros(us.shape[0])
    for i, ci in enumerate(bef.contrasts):
        total += np.asarray(ci.g(c[:, i]), dtype=float)
    return total


def progress_measure(bef: ExactBef, u: np.ndarray) -> float:
    """max_i |h_i'(u_i^2)| in hidden coordinates; non-decreasing along exact traces."""
    c = bef.basis @ np.asarray(u, dtype=float)
    best = 0.0
    for ci, x in zip(bef.contrasts, c):
        ht = h_transform(ci, validate=False)
        best = max(best, abs(float(ht.h_prime(x * x))))
    return best


def to_oracle(bef: ExactBef) -> GradientOracle:
    """Exact oracle (declared epsilon = 0) backed by the known basis."""
    return GradientOracle(
        grad=lambda u: eval_grad(bef, u),
        value=lambda u: eval_f(bef, u),
        dimension=bef.dimension,
        epsilon=0.0,
    )


# ---------------------------------------------------------------------------
# Perturbations
# ---------------------------------------------------------------------------

PERTURBATION_MODES = ("deterministic-adversarial", "seeded-random")


def _adversarial_field(dimension: int, seed: int):
    rng = np.random.default_rng(seed)
    mix = rng.standard_normal((dimension, dimension))
    phase = rng.uniform(0.0, 2.0 * np.pi, size=dimension)
    scale = 1.0 / np.sqrt(dimension)

    def field(u: np.ndarray) -> np.ndarray:
        return np.sin(mix @ u + phase) * scale

    return field


def _hashed_direction(u: np.ndarray, seed: int) -> np.ndarray:
    payload = u.tobytes() + str(int(seed)).encode()
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "little"))
    v = rng.standard_normal(u.shape[0])
    return v / np.linalg.norm(v)


def perturb_oracle(
    oracle: GradientOracle,
    epsilon: float,
    mode: str = "deterministic-adversarial",
    seed: int = 0,
) -> GradientOracle:
    """Wrap an oracle with a gradient perturbation of norm <= epsilon.

    deterministic-adversarial: a fixed smooth field (seeded trigonometric
    coordinate mixing) so the perturbed gradient is still a deterministic
    smooth function of u.  seeded-random: a query-deterministic direction
    drawn by hashing the query bytes together with the seed; repeated
    queries at the same point give identical output.
    """
    if epsilon < 0:
        raise ValueError("perturbation epsilon must be >= 0")
    if mode not in PERTURBATION_MODES:
        raise ValueError(f"unknown perturbation mode {mode!r}; expected one of {PERTURBATION_MODES}")
    if epsilon == 0.0:
        return oracle

    base_grad = oracle.grad
    if mode == "deterministic-adversarial":
        field = _adversarial_field(oracle.dimension, seed)

        def grad(u: np.ndarray) -> np.ndarray:
            u = np.asarray(u, dtype=float)
            return base_grad(u) + epsilon * field(u)

    else:

        def grad(u: np.ndarray) -> np.ndarray:
            u = np.asarray(u, dtype=float)
            return base_grad(u) + epsilon * _hashed_direction(u, seed)

    return replace(oracle, grad=grad, epsilon=oracle.epsilon + epsilon)


# ---------------------------------------------------------------------------
# JSON specification of contrast/basis setups
# ---------------------------------------------------------------------------


def contrast_from_dict(spec: dict) -> ContrastFunction:
    kind = spec.get("kind", "monomial")
    if kind != "monomial":
        raise ValueError(f"unknown contrast kind {kind!r}")
    return make_contrast_monomial(weight=spec["weight"], power=spec["power"])


def bef_from_dict(spec: dict) -> ExactBef:
    """Build an exact encoding from its JSON document form.

    Schema: {"dimension": d,
             "basis": [[...], ...] | "canonical" | {"random_rotation_seed": s},
             "contrasts": [{"kind": "monomial", "weight": w, "power": r}, ...]}
    """
    d = int(spec["dimension"])
    contrasts = tuple(contrast_from_dict(c) for c in spec["contrasts"])
    m = len(contrasts)
    basis_spec = spec.get("basis", "canonical")
    if basis_spec == "canonical":
        basis = np.eye(d)[:m]
    elif isinstance(basis_spec, dict) and "random_rotation_seed" in basis_spec:
        from .sphere import random_orthogonal

        rng = np.random.default_rng(int(basis_spec["random_rotation_seed"]))
        basis = random_orthogonal(d, rng)[:m]
    else:
        basis = np.array(basis_spec, dtype=float)
    return ExactBef(basis=basis, contrasts=contrasts, dimension=d)


def load_bef_json(path) -> ExactBef:
    with open(path, "r", encoding="utf-8") as fh:
        return bef_from_dict(json.load(fh))
