"""Scalar contrast functions and their hidden-convexity transform.

A contrast g maps [-1, 1] -> R and must be even or odd, vanish at 0, and be
strictly convex (or concave) after the substitution x -> sqrt(x).  The
substitution produces the transform h(x) = g(sign(x) sqrt|x|), whose second
derivative carries the quantitative convexity bounds used by the robust
recovery analysis.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

ScalarFn = Callable[[np.ndarray], np.ndarray]

_SYM_TOL = 1e-12
_A3_PROBE = 1e-10
_HPP_IDENTITY_FLOOR = 1e-6  # below this the g-based h'' identity divides by ~0


@dataclass(frozen=True)
class RobustnessCertificate:
    """Bound pair beta*x^(delta-1) <= |h''(x)| <= alpha*x^(gamma-1) on (0, 1].

    alpha/beta and delta/gamma act as condition numbers; both are >= 1 for
    any valid certificate.
    """

    alpha: float
    beta: float
    gamma: float
    delta: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"certificate parameter {name} must be a positive real, got {v!r}")
        if self.alpha < self.beta * (1.0 - 1e-12):
            raise ValueError(f"certificate requires alpha >= beta, got alpha={self.alpha}, beta={self.beta}")
        if self.gamma > self.delta * (1.0 + 1e-12):
            raise ValueError(f"certificate requires gamma <= delta, got gamma={self.gamma}, delta={self.delta}")


@dataclass(frozen=True)
class ContrastFunction:
    """A scalar contrast with analytic derivatives.

    The callables must be vectorized (accept and return ndarrays).  g is
    shifted at construction so that g(0) = 0.  ``borderline`` marks the
    quadratic border case (power-2 monomials), which violates strict hidden
    convexity and is admitted only for the matrix power-method reduction.
    """

    g: ScalarFn
    g_prime: ScalarFn
    g_double_prime: ScalarFn
    symmetry: str
    name: str = "contrast"
    certificate: Optional[RobustnessCertificate] = None
    analytic_h: Optional[tuple[ScalarFn, ScalarFn, ScalarFn]] = None
    monomial: Optional[tuple[float, float]] = None  # (weight, power) fast path
    borderline: bool = False

    def __post_init__(self):
        if self.symmetry not in ("even", "odd"):
            raise ValueError(f"symmetry must be 'even' or 'odd', got {self.symmetry!r}")
        g0 = float(self.g(np.float64(0.0)))
        if g0 != 0.0:
            base = self.g
            object.__setattr__(self, "g", lambda x, _b=base, _c=g0: _b(x) - _c)
        self._validate()

    def _validate(self):
        xs = np.linspace(0.0, 1.0, 33)
        scale = max(1.0, float(np.max(np.abs(self.g(xs)))))
        s = 1.0 if self.symmetry == "even" else -1.0
        sym_err = np.max(np.abs(self.g(xs) - s * self.g(-xs)))
        if sym_err > _SYM_TOL * scale:
            raise ValueError(f"contrast {self.name!r} is not numerically {self.symmetry}: max deviation {sym_err:.3e}")
        if not self.borderline:
            # A3: right derivative of g(sqrt(x)) at 0+ must vanish.  The probe
            # cannot distinguish a slowly vanishing derivative from a constant
            # one perfectly; the threshold is calibrated to reject the
            # quadratic case (finite difference equal to g(1)) at any weight.
            fd = float(self.g(np.sqrt(_A3_PROBE)) - self.g(np.float64(0.0))) / _A3_PROBE
            g1 = max(abs(float(self.g(np.float64(1.0)))), 1e-300)
            if abs(fd) > 0.45 * g1:
                raise ValueError(
                    f"contrast {self.name!r} violates the vanishing right derivative of g(sqrt(x)) "
                    f"at 0 (finite difference {fd:.3e} at x={_A3_PROBE:g})"
                )


def make_contrast_monomial(weight: float, power: float) -> ContrastFunction:
    """Monomial contrast weight * x^power.

    Odd integer powers give odd contrasts; every other power >= 2 gives the
    even sign-symmetric form weight * |x|^power.  Powers above 2 carry the
    tight robustness certificate with alpha = beta = |w| p (p - 2) / 4 and
    gamma = delta = (p - 2) / 2.  Power exactly 2 is the borderline
    (matrix) case and carries no certificate.
    """
    w = float(weight)
    p = float(power)
    if w == 0.0 or not math.isfinite(w):
        raise ValueError("monomial weight must be nonzero and finite")
    if not (math.isfinite(p) and p >= 2.0):
        raise ValueError(f"monomial power must be >= 2, got {p}")

    is_int = abs(p - round(p)) < 1e-12
    odd = is_int and int(round(p)) % 2 == 1
    symmetry = "odd" if odd else "even"
    q = p / 2.0

    if odd:
        g = lambda x: w * np.sign(x) * np.abs(x) ** p
        gp = lambda x: w * p * np.abs(x) ** (p - 1.0)
        gpp = lambda x: w * p * (p - 1.0) * np.sign(x) * np.abs(x) ** (p - 2.0)
        h = lambda t: w * np.sign(t) * np.abs(t) ** q
        hp = lambda t: w * q * np.abs(t) ** (q - 1.0)
        hpp = lambda t: w * q * (q - 1.0) * np.sign(t) * np.abs(t) ** (q - 2.0)
    else:
        g = lambda x: w * np.abs(x) ** p
        gp = lambda x: w * p * np.sign(x) * np.abs(x) ** (p - 1.0)
        gpp = lambda x: w * p * (p - 1.0) * np.abs(x) ** (p - 2.0)
        h = lambda t: w * np.abs(t) ** q
        hp = lambda t: w * q * np.sign(t) * np.abs(t) ** (q - 1.0)
        hpp = lambda t: w * q * (q - 1.0) * np.abs(t) ** (q - 2.0)

    cert = None
    if p > 2.0:
        c = abs(w) * p * (p - 2.0) / 4.0
        e = (p - 2.0) / 2.0
        cert = RobustnessCertificate(alpha=c, beta=c, gamma=e, delta=e)

    return ContrastFunction(
        g=g,
        g_prime=gp,
        g_double_prime=gpp,
        symmetry=symmetry,
        name=f"{w:g}*x^{p:g}",
        certificate=cert,
        analytic_h=(h, hp, hpp),
        monomial=(w, p),
        borderline=(p == 2.0),
    )


@dataclass(frozen=True)
class HTransform:
    """h(x) = g(sign(x) sqrt|x|) together with its first two derivatives.

    h'' is only defined away from 0; evaluating it at exactly 0 raises.
    When no closed form is attached to the source contrast, h'' falls back
    to the identity h''(x^2) = [g''(x)/x^2 - g'(x)/x^3] / 4, which is
    reliable only for |argument| >= 1e-6.
    """

    h: ScalarFn
    h_prime: ScalarFn
    h_double_prime: ScalarFn
    source: ContrastFunction


def _h_from_g(g: ContrastFunction) -> tuple[ScalarFn, ScalarFn, ScalarFn]:
    def h(t):
        t = np.asarray(t, dtype=float)
        x = np.sign(t) * np.sqrt(np.abs(t))
        return g.g(x)

    def hp(t):
        t = np.asarray(t, dtype=float)
        a = np.abs(t)
        x = np.sign(t) * np.sqrt(a)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = 0.5 * g.g_prime(x) / np.sqrt(a)
        return np.where(a == 0.0, 0.0, out)

    def hpp(t):
        t = np.asarray(t, dtype=float)
        a = np.abs(t)
        if np.any(a < _HPP_IDENTITY_FLOOR):
            raise ValueError(
                f"h'' via the g-based identity is only evaluated for |x| >= {_HPP_IDENTITY_FLOOR:g}"
            )
        x = np.sign(t) * np.sqrt(a)
        return 0.25 * (g.g_double_prime(x) / x**2 - g.g_prime(x) / x**3)

    return h, hp, hpp


def h_transform(g: ContrastFunction, validate: bool = True) -> HTransform:
    """Build the hidden-convexity transform of a contrast."""
    if g.analytic_h is not None:
        h, hp, hpp_raw = g.analytic_h
    else:
        h, hp, hpp_raw = _h_from_g(g)

    def hpp(t, _f=hpp_raw):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr == 0.0):
            raise ValueError("h'' is undefined at 0; evaluate on (0, 1] only")
        return _f(t)

    ht = HTransform(h=h, h_prime=hp, h_double_prime=hpp, source=g)
    if validate:
        _validate_h(ht)
    return ht


def _validate_h(ht: HTransform):
    g = ht.source
    xs = np.linspace(-1.0, 1.0, 41)
    scale = max(1.0, float(np.max(np.abs(g.g(xs)))))
    err = np.max(np.abs(ht.h(np.sign(xs) * xs**2) - g.g(xs)))
    if err > _SYM_TOL * scale:
        raise ValueError(f"h(x^2) != g(x) for contrast {g.name!r}: max deviation {err:.3e}")
    if g.borderline:
        return
    if abs(float(ht.h_prime(np.float64(0.0)))) > 1e-10 * scale:
        raise ValueError(f"h'(0) != 0 for contrast {g.name!r}")
    ts = np.linspace(0.0, 1.0, 65)
    mags = np.abs(ht.h_prime(ts))
    if np.any(np.diff(mags) <= 0):
        raise ValueError(f"|h'| is not strictly increasing on [0, 1] for contrast {g.name!r}")


def certify_robustness(g: ContrastFunction, cert: RobustnessCertificate, grid_size: int = 1000) -> bool:
    """Check the certificate bounds on a log-spaced grid of (0, 1].

    Returns False (with a warning naming an offending point) rather than
    raising when a bound fails.  Sample verification only; no proof.
    """
    if grid_size < 100:
        raise ValueError("grid_size must be at least 100")
    ht = h_transform(g, validate=False)
    xs = np.logspace(-6, 0, grid_size)
    hh = np.abs(np.asarray(ht.h_double_prime(xs), dtype=float))
    lower = cert.beta * xs ** (cert.delta - 1.0)
    upper = cert.alpha * xs ** (cert.gamma - 1.0)
    slack = 1e-9
    bad_low = hh < lower * (1.0 - slack) - 1e-300
    bad_high = hh > upper * (1.0 + slack) + 1e-300
    bad = bad_low | bad_high
    if np.any(bad):
        x0 = float(xs[np.argmax(bad)])
        warnings.warn(
            f"robustness certificate fails for {g.name!r} at x={x0:.6e}: "
            f"|h''|={float(hh[np.argmax(bad)]):.6e} outside "
            f"[{float(lower[np.argmax(bad)]):.6e}, {float(upper[np.argmax(bad)]):.6e}]",
            stacklevel=2,
        )
        return False
    return True
