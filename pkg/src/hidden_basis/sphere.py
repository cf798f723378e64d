"""Unit-sphere utilities: exponential map, tangent sampling, projections,
orthonormal complements, and the sign-class metric.

Vectors are plain float ndarrays; functions validate the unit-norm and
tangency contracts at their boundaries instead of wrapping arrays in types.
All functions are pure; callers supply their own RNG streams.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

UNIT_TOL = 1e-9
TANGENT_TOL = 1e-9
_COMPLEMENT_ORTHO_TOL = 1e-10
_RESIDUAL_KEEP = 1e-6


def check_unit(u: np.ndarray, tol: float = UNIT_TOL) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    n = np.linalg.norm(u)
    if abs(n - 1.0) > tol:
        raise ValueError(f"vector is not unit norm: |norm - 1| = {abs(n - 1.0):.3e}")
    return u


def exp_map(p: np.ndarray, x: np.ndarray) -> np.ndarray:
    """exp_p(x) = p cos||x|| + (x/||x||) sin||x||, with exp_p(0) = p."""
    p = check_unit(p)
    x = np.asarray(x, dtype=float)
    if x.shape != p.shape:
        raise ValueError("tangent vector dimension mismatch")
    nx = np.linalg.norm(x)
    if nx == 0.0:
        return p.copy()
    if abs(float(p @ x)) > TANGENT_TOL * nx:
        raise ValueError(f"vector is not tangent at p: |<p, x>| = {abs(float(p @ x)):.3e}")
    w = p * np.cos(nx) + (x / nx) * np.sin(nx)
    return w / np.linalg.norm(w)


def sample_tangent_sphere(p: np.ndarray, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample from the radius-``radius`` sphere in the tangent space p^perp."""
    p = check_unit(p)
    d = p.shape[0]
    if d < 2:
        raise ValueError("tangent sampling needs dimension >= 2")
    if not radius > 0:
        raise ValueError("radius must be positive")
    while True:
        g = rng.standard_normal(d)
        t = g - (g @ p) * p
        t -= (t @ p) * p  # second pass tightens tangency to machine precision
        nt = np.linalg.norm(t)
        if nt > 1e-12:
            return (radius / nt) * t


def project_coords(u: np.ndarray, index_set: Sequence[int], basis: np.ndarray) -> np.ndarray:
    """sum_{i in S} <u, Z_i> Z_i over the selected basis rows (0-based indices)."""
    u = np.asarray(u, dtype=float)
    basis = np.asarray(basis, dtype=float)
    idx = list(index_set)
    if not idx:
        return np.zeros_like(u)
    k = basis.shape[0]
    for i in idx:
        if not 0 <= i < k:
            raise ValueError(f"index {i} out of range for {k} basis vectors")
    sub = basis[idx]
    return sub.T @ (sub @ u)


def orthonormal_complement(vectors: Sequence[np.ndarray], dim: Optional[int] = None) -> np.ndarray:
    """Orthonormal vectors spanning the orthogonal complement of ``vectors``.

    Modified Gram-Schmidt against the inputs plus canonical seed vectors,
    with a re-orthogonalization pass; near-zero residual seeds are discarded.
    Returns a (d - k, d) array.  Raises when the inputs are (numerically)
    rank deficient.
    """
    vecs = [np.asarray(v, dtype=float) for v in vectors]
    if dim is None:
        if not vecs:
            raise ValueError("dim is required when no vectors are given")
        dim = vecs[0].shape[0]
    k = len(vecs)
    if k >= dim and k > 0:
        raise ValueError(f"need fewer input vectors than the dimension, got k={k}, d={dim}")

    q: list[np.ndarray] = []
    for v in vecs:
        if v.shape != (dim,):
            raise ValueError("input vector dimension mismatch")
        w = v.copy()
        for b in q:
            w -= (b @ w) * b
        for b in q:
            w -= (b @ w) * b
        nw = np.linalg.norm(w)
        if nw < 1e-8 * max(np.linalg.norm(v), 1e-300):
            raise ValueError("input vectors are rank deficient within tolerance")
        q.append(w / nw)

    out: list[np.ndarray] = []
    for i in range(dim):
        if len(out) == dim - k:
            break
        w = np.zeros(dim)
        w[i] = 1.0
        for b in q:
            w -= (b @ w) * b
        for b in q:
            w -= (b @ w) * b
        nw = np.linalg.norm(w)
        if nw < _RESIDUAL_KEEP:
            continue
        w /= nw
        out.append(w)
        q.append(w)
    if len(out) != dim - k:
        raise ValueError("failed to construct a full orthogonal complement")
    comp = np.array(out)
    gram = np.abs(comp @ comp.T - np.eye(dim - k))
    assert np.max(gram) <= _COMPLEMENT_ORTHO_TOL if comp.size else True
    return comp


def class_distance(u: np.ndarray, v: np.ndarray, basis: Optional[np.ndarray] = None) -> float:
    """Distance between sign classes: || sum_i (|v_i| - |u_i|) Z_i ||.

    With ``basis`` None the canonical coordinates are used.  A partial basis
    (m < d rows) is completed deterministically with its orthonormal
    complement so the metric acts on full coordinate vectors.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if basis is None:
        cu, cv = u, v
    else:
        basis = np.asarray(basis, dtype=float)
        d = u.shape[0]
        if basis.shape[0] < d:
            basis = np.vstack([basis, orthonormal_complement(list(basis), dim=d)])
        cu = basis @ u
        cv = basis @ v
    return float(np.linalg.norm(np.abs(cv) - np.abs(cu)))


def random_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-ish random orthogonal matrix via QR with a deterministic sign fix."""
    a = rng.standard_normal((d, d))
    q, r = np.linalg.qr(a)
    return q * np.sign(np.diag(r))
