"""Independent reference computations used to validate the fast paths:
finite-difference gradients, exhaustive fixed-point enumeration, and dense
grid scans for sphere maxima.  Nothing here calls the code it checks except
where the contract says so (fixed-point enumeration reuses the per-support
solver and validates the iteration map against it)."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .bef import ExactBef, eval_f_many
from .iteration import fixed_point_for_support


@dataclass(frozen=True)
class FiniteDiffSpec:
    step: float = 1e-5
    scheme: str = "central"

    def __post_init__(self):
        if not 1e-8 <= self.step <= 1e-3:
            raise ValueError("finite-difference step must lie in [1e-8, 1e-3]")
        if self.scheme != "central":
            raise ValueError("only the central scheme is supported")


def finite_diff_grad(f: Callable[[np.ndarray], float], u: np.ndarray, spec: FiniteDiffSpec = FiniteDiffSpec()) -> np.ndarray:
    """Central differences per coordinate."""
    u = np.asarray(u, dtype=float)
    h = spec.step
    out = np.empty_like(u)
    for i in range(u.shape[0]):
        up = u.copy()
        um = u.copy()
        up[i] += h
        um[i] -= h
        out[i] = (f(up) - f(um)) / (2.0 * h)
    return out


def enumerate_fixed_points(bef: ExactBef, tol: float = 1e-12) -> list[tuple[tuple[int, ...], np.ndarray]]:
    """One fixed point per non-empty support subset: 2^m - 1 classes total."""
    m = bef.num_directions
    if m > 12:
        raise ValueError("exhaustive enumeration is limited to m <= 12")
    out = []
    for size in range(1, m + 1):
        for support in itertools.combinations(range(m), size):
            v = fixed_point_for_support(bef, support, tol=tol)
            out.append((support, v))
    return out


def _sphere_grid(resolution: int) -> tuple[np.ndarray, np.ndarray]:
    """Latitude-longitude grid: thetas (rows, poles included), phis (columns)."""
    thetas = np.linspace(0.0, np.pi, resolution + 1)
    phis = np.linspace(0.0, 2.0 * np.pi, 2 * resolution, endpoint=False)
    return thetas, phis


def grid_maxima_scan(bef: ExactBef, resolution: int) -> list[np.ndarray]:
    """Locate local maxima of |F| on a dense geodesic grid (d = 2 or 3 only).

    Verifies the maxima structure: every detected maximum must lie within
    one grid cell of some +-Z_i (measured as twice the grid spacing, i.e.
    the cell diagonal plus margin), otherwise a ValueError reports the
    spurious location.  Returns the maxima found.
    """
    if resolution < 50:
        raise ValueError("resolution must be at least 50")
    d = bef.dimension
    if d == 2:
        return _scan_circle(bef, resolution)
    if d == 3:
        return _scan_sphere(bef, resolution)
    raise ValueError("grid scans are implemented for d in {2, 3} only")


def _nearest_basis_angle(u: np.ndarray, basis: np.ndarray) -> float:
    cos = np.clip(np.abs(basis @ u), 0.0, 1.0)
    return float(np.min(np.arccos(cos)))


def _check_maxima(maxima: Sequence[np.ndarray], bef: ExactBef, cell: float) -> list[np.ndarray]:
    spurious = [u for u in maxima if _nearest_basis_angle(u, bef.basis) > cell]
    if spurious:
        raise ValueError(
            f"{len(spurious)} grid maxima lie farther than one grid cell from every "
            f"+-basis direction; first offender {spurious[0]}"
        )
    return list(maxima)


def _scan_circle(bef: ExactBef, resolution: int) -> list[np.ndarray]:
    angles = np.linspace(0.0, 2.0 * np.pi, resolution, endpoint=False)
    pts = np.column_stack([np.cos(angles), np.sin(angles)])
    vals = np.abs(eval_f_many(bef, pts))
    left = np.roll(vals, 1)
    right = np.roll(vals, -1)
    is_max = (vals > left) & (vals > right)
    maxima = [pts[i] for i in np.nonzero(is_max)[0]]
    cell = 2.0 * (2.0 * np.pi / resolution)
    return _check_maxima(maxima, bef, cell)


def _scan_sphere(bef: ExactBef, resolution: int) -> list[np.ndarray]:
    thetas, phis = _sphere_grid(resolution)
    n_t, n_p = len(thetas), len(phis)
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    pts = np.stack(
        [np.sin(tt) * np.cos(pp), np.sin(tt) * np.sin(pp), np.cos(tt)],
        axis=-1,
    )
    vals = np.abs(eval_f_many(bef, pts.reshape(-1, 3))).reshape(n_t, n_p)

    north = float(vals[0, 0])
    south = float(vals[-1, 0])
    interior = vals[1:-1, :]

    # 8-neighborhood with wraparound in phi; rows adjacent to a pole compare
    # against the single pole value.
    neighbors = []
    for dp in (-1, 0, 1):
        shifted = np.roll(vals, dp, axis=1)
        for dt in (-1, 0, 1):
            if dt == 0 and dp == 0:
                continue
            neighbors.append(shifted[1 + dt : n_t - 1 + dt, :])
    stacked = np.stack(neighbors, axis=0)
    is_max = np.all(interior > stacked, axis=0)

    maxima = []
    ti, pi_ = np.nonzero(is_max)
    for i, j in zip(ti + 1, pi_):
        maxima.append(pts[i, j])
    if north > np.max(vals[1, :]):
        maxima.append(np.array([0.0, 0.0, 1.0]))
    if south > np.max(vals[-2, :]):
        maxima.append(np.array([0.0, 0.0, -1.0]))

    cell = 2.0 * max(np.pi / resolution, 2.0 * np.pi / n_p)
    return _check_maxima(maxima, bef, cell)
