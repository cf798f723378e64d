"""The gradient iteration G(u) = grad F(u) / ||grad F(u)|| and its analysis.

Includes the plain iteration loop, sign-symmetric convergence detection,
closed-support fixed point solving, convergence-order estimation from error
sequences, and the adaptive projected-ascent cross-check.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bef import ExactBef, GradientOracle
from .contrasts import h_transform
from .sphere import check_unit

ZERO_GRAD_TOL = 1e-14


@dataclass(frozen=True)
class IterationTrace:
    """States u(0..n), per-state gradient norms, and optional distances to the limit."""

    states: np.ndarray
    grad_norms: np.ndarray
    steps: int
    class_dists_to_limit: Optional[np.ndarray] = None

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        norms = np.asarray(self.grad_norms, dtype=float)
        if states.shape[0] != self.steps + 1 or norms.shape[0] != self.steps + 1:
            raise ValueError("trace lengths are inconsistent with the step count")
        if np.any(norms < 0):
            raise ValueError("gradient norms must be nonnegative")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "grad_norms", norms)

    def to_csv(self, path_or_file) -> None:
        """Write rows (step, u_0..u_{d-1}, grad_norm)."""
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            writer = csv.writer(fh, lineterminator="\n")
            d = self.states.shape[1]
            writer.writerow(["step"] + [f"u_{i}" for i in range(d)] + ["grad_norm"])
            for k in range(self.steps + 1):
                writer.writerow([k] + [repr(float(x)) for x in self.states[k]] + [repr(float(self.grad_norms[k]))])
        finally:
            if own:
                fh.close()


@dataclass(frozen=True)
class ConvergenceReport:
    converged: bool
    limit: np.ndarray
    steps: int
    final_residual: float
    estimated_order: Optional[float] = None


def gi_step(oracle: GradientOracle, u: np.ndarray, zero_grad_tol: float = ZERO_GRAD_TOL) -> np.ndarray:
    """One gradient-iteration step; returns u unchanged on a (numerically) zero gradient."""
    u = check_unit(u)
    g = oracle.grad(u)
    n = np.linalg.norm(g)
    if n <= zero_grad_tol:
        return u.copy()
    return g / n


def _iterate(oracle: GradientOracle, u: np.ndarray, n: int, zero_grad_tol: float = ZERO_GRAD_TOL) -> np.ndarray:
    """Lean fixed-count loop without trace bookkeeping (shared by the recovery stack)."""
    grad = oracle.grad
    for _ in range(n):
        g = grad(u)
        nn = np.linalg.norm(g)
        if nn > zero_grad_tol:
            u = g / nn
    return u


def gi_loop(oracle: GradientOracle, u0: np.ndarray, n: int) -> tuple[np.ndarray, IterationTrace]:
    """Run the iteration for a fixed number of steps, recording every state."""
    if n < 0:
        raise ValueError("step count must be >= 0")
    u = check_unit(u0)
    d = u.shape[0]
    states = np.empty((n + 1, d))
    norms = np.empty(n + 1)
    states[0] = u
    for k in range(n):
        g = oracle.grad(u)
        gn = float(np.linalg.norm(g))
        norms[k] = gn
        if gn > ZERO_GRAD_TOL:
            u = g / gn
        states[k + 1] = u
    norms[n] = float(np.linalg.norm(oracle.grad(u)))
    return u, IterationTrace(states=states, grad_norms=norms, steps=n)


def sign_symmetric_residual(v: np.ndarray, u: np.ndarray) -> float:
    """min(||v - u||, ||-v - u||): the practical convergence threshold quantity."""
    return float(min(np.linalg.norm(v - u), np.linalg.norm(v + u)))


def run_to_convergence(
    oracle: GradientOracle,
    u0: np.ndarray,
    tol: float = 1e-10,
    max_steps: int = 200,
) -> ConvergenceReport:
    """Iterate until the sign-symmetric residual drops below ``tol``.

    Exhausting ``max_steps`` reports converged=False rather than raising.
    When the run converges with enough usable history, the empirical order
    of convergence is estimated from the distances to the limit.
    """
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    u = check_unit(u0)
    history = [u.copy()]
    residual = np.inf
    converged = False
    steps = 0
    for k in range(max_steps):
        v = gi_step(oracle, u)
        residual = sign_symmetric_residual(v, u)
        u = v
        history.append(u.copy())
        steps = k + 1
        if residual <= tol:
            converged = True
            break

    order = None
    if converged and len(history) >= 5:
        limit = history[-1]
        errs = [sign_symmetric_residual(h, limit) for h in history[:-1]]
        try:
            order = estimate_convergence_order(errs)
        except ValueError:
            order = None
    return ConvergenceReport(
        converged=converged,
        limit=u,
        steps=steps,
        final_residual=residual,
        estimated_order=order,
    )


# ---------------------------------------------------------------------------
# Fixed points with a prescribed support
# ---------------------------------------------------------------------------


def _approx_fix_pt(mags, size: int, n: int) -> np.ndarray:
    """Greedy mass allocation: repeatedly grow the coordinate whose |h'| level lags."""
    t = np.zeros(size)
    levels = np.zeros(size)
    for _ in range(n):
        j = int(np.argmin(levels))
        t[j] += 1.0 / n
        levels[j] = mags[j](t[j])
    return t


def _invert_increasing(f, target: float, lo: float = 0.0, hi: float = 1.0) -> float:
    """Solve f(t) = target for increasing f on [lo, hi] by safeguarded bisection."""
    flo, fhi = f(lo), f(hi)
    if target <= flo:
        return lo
    if target >= fhi:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo < 1e-17:
            return mid
        fm = f(mid)
        if fm < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fixed_point_for_support(bef: ExactBef, support: Sequence[int], tol: float = 1e-12) -> np.ndarray:
    """The unique positive-orthant fixed point supported exactly on ``support``.

    Solves for the common level lambda of the |h_i'| at the squared
    coordinates, seeded by the greedy allocation and finished by bisection
    on lambda.  Requires certified contrasts (monotone |h'|).
    """
    idx = sorted(set(int(i) for i in support))
    m = bef.num_directions
    if not idx:
        raise ValueError("support must be non-empty")
    if idx[0] < 0 or idx[-1] >= m:
        raise ValueError(f"support indices out of range for m={m}")
    for i in idx:
        if bef.contrasts[i].certificate is None:
            raise ValueError(
                f"contrast {bef.contrasts[i].name!r} carries no robustness certificate; "
                "monotonicity of h' is not guaranteed"
            )
    if len(idx) == 1:
        return bef.basis[idx[0]].copy()

    transforms = [h_transform(bef.contrasts[i], validate=False) for i in idx]
    mags = [lambda t, _h=ht: abs(float(_h.h_prime(t))) for ht in transforms]
    s = len(idx)

    # Greedy construction gives a coarse allocation and a level bracket.
    t0 = _approx_fix_pt(mags, s, 1024)
    lam0 = float(np.mean([mags[i](t0[i]) for i in range(s)]))
    lam_hi = min(mags[i](1.0) for i in range(s))

    def mass(lam: float) -> float:
        return sum(_invert_increasing(mags[i], lam) for i in range(s))

    lo, hi = 0.0, lam_hi
    if 0.0 < lam0 < lam_hi:
        if mass(lam0) < 1.0:
            lo = lam0
        else:
            hi = lam0
    for _ in range(200):
        lam = 0.5 * (lo + hi)
        if hi - lo < 1e-16 * max(1.0, lam_hi):
            break
        if mass(lam) < 1.0:
            lo = lam
        else:
            hi = lam
    lam = 0.5 * (lo + hi)
    t = np.array([_invert_increasing(mags[i], lam) for i in range(s)])
    t /= t.sum()  # renormalize onto the sphere
    levels = np.array([mags[i](t[i]) for i in range(s)])
    residual = float(levels.max() - levels.min())
    if residual > tol * max(1.0, abs(lam)):
        raise ValueError(f"fixed point solve stalled: level spread {residual:.3e} exceeds tol")
    v = np.sqrt(t)
    return bef.basis[idx].T @ v


# ---------------------------------------------------------------------------
# Convergence-order estimation
# ---------------------------------------------------------------------------


def estimate_convergence_order(
    errors: Sequence[float],
    noise_floor: float = 1e-13,
    head: float = 0.9,
) -> float:
    """Least-squares slope of log e_{n+1} against log e_n over the usable tail.

    Entries at or below the noise floor (and everything after the first
    such entry) are discarded, as are leading entries >= ``head`` where the
    asymptotic regime has not set in.
    """
    e = [float(x) for x in errors]
    if any(not np.isfinite(x) or x < 0 for x in e):
        raise ValueError("errors must be finite and nonnegative")
    cut = len(e)
    for i, x in enumerate(e):
        if x <= noise_floor:
            cut = i
            break
    e = e[:cut]
    while e and e[0] >= head:
        e.pop(0)
    if len(e) < 4:
        raise ValueError("too few usable points to estimate an order of convergence")
    if any(b >= a for a, b in zip(e, e[1:])):
        raise ValueError("errors must be strictly decreasing over the usable range")
    x = np.log(np.asarray(e[:-1]))
    y = np.log(np.asarray(e[1:]))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def adaptive_ascent_step(oracle: GradientOracle, u: np.ndarray, zero_grad_tol: float = ZERO_GRAD_TOL) -> np.ndarray:
    """Projected gradient ascent with step 1/<u, grad F(u)>; equals gi_step for
    positive encodings and is used as a cross-check of the fixed-point map."""
    u = check_unit(u)
    g = oracle.grad(u)
    if np.linalg.norm(g) <= zero_grad_tol:
        return u.copy()
    ip = float(u @ g)
    if abs(ip) <= zero_grad_tol:
        raise ValueError("gradient has zero projection onto u; adaptive step undefined")
    w = u + (g - ip * u) / ip
    return w / np.linalg.norm(w)
