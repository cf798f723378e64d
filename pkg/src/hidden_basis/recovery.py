"""Perturbation-robust recovery of all hidden basis directions.

The single-direction search warm-starts inside the orthogonal complement of
the directions found so far, then alternates random tangent jumps of radius
sigma with fixed-length gradient-iteration bursts.  Jumps break stagnation
near unstable fixed points; the iteration bursts let large coordinates
compete and drive small ones to zero.  Repeating the search recovers the
whole basis up to signs and a permutation.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .bef import GradientOracle
from .contrasts import RobustnessCertificate
from .iteration import ZERO_GRAD_TOL, sign_symmetric_residual
from .sphere import exp_map, orthonormal_complement, sample_tangent_sphere

DUPLICATE_INNER_THRESHOLD = 0.5
_EARLY_EXIT_ROUNDS = 3


@dataclass(frozen=True)
class RecoveryConfig:
    """Parameters of the jump-augmented recovery loop."""

    sigma: float
    n1: int
    n2: int
    i_max: int
    m_hat: int
    tol: float
    seed: int

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.n1 < 0 or self.n2 < 1 or self.i_max < 1:
            raise ValueError("need n1 >= 0, n2 >= 1, i_max >= 1")
        if self.m_hat < 1:
            raise ValueError("m_hat must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RecoveryConfig":
        return cls(**json.loads(text))


def default_config(m_hat: int, seed: int = 0, tol: float = 1e-10) -> RecoveryConfig:
    """Practical desk-scale defaults; the theoretical bounds are far too
    conservative to run directly."""
    return RecoveryConfig(sigma=0.05, n1=50, n2=100, i_max=10 * m_hat, m_hat=m_hat, tol=tol, seed=seed)


@dataclass(frozen=True)
class DirectionDiagnostics:
    jumps_used: int
    final_residual: float
    grad_norm: float


class FindResult(NamedTuple):
    direction: np.ndarray
    jumps_used: int
    final_residual: float


@dataclass(frozen=True)
class RecoveredBasis:
    """Recovered directions in discovery order with per-direction diagnostics.

    Healthy runs produce near-orthogonal directions; indices whose direction
    nearly repeats an earlier one (|inner| above 0.5) are flagged in
    ``duplicates`` rather than rejected, since recovery is approximate.
    """

    directions: np.ndarray
    diagnostics: tuple[DirectionDiagnostics, ...]
    duplicates: tuple[int, ...] = ()

    def max_cross_inner(self) -> float:
        d = self.directions
        if d.shape[0] < 2:
            return 0.0
        g = np.abs(d @ d.T)
        np.fill_diagonal(g, 0.0)
        return float(g.max())


def find_basis_element(
    oracle: GradientOracle,
    found: Sequence[np.ndarray],
    config: RecoveryConfig,
    rng: Optional[np.random.Generator] = None,
    strict: bool = False,
) -> FindResult:
    """Recover one hidden direction not already represented in ``found``.

    The search proceeds as: (a) orthonormal complement of the found
    directions, (b) start from the complement vector with the largest
    estimated gradient, (c) one step plus an n1-step warm start, (d) i_max
    rounds of a random tangent jump of radius sigma followed by an n2-step
    iteration burst.  Unless ``strict`` is set the round loop exits early
    after three consecutive rounds with sign-symmetric residual below tol.

    The whole search is confined to the orthogonal complement of ``found``
    (the dynamics run in complement coordinates).  For an exact oracle with
    unfound directions remaining this changes nothing: the gradient of a
    point in the complement already lies in the complement.  It prevents
    jump leakage from re-amplifying an already-found direction, which
    otherwise makes every surplus search (more searches than encoded
    directions) collapse back onto a found direction instead of returning a
    small-gradient residual vector.
    """
    d = oracle.dimension
    if len(found) >= d:
        raise ValueError("cannot search for more directions than the ambient dimension")
    if rng is None:
        rng = np.random.default_rng(config.seed)

    comp = orthonormal_complement(list(found), dim=d)  # rows span the search space
    k = comp.shape[0]

    def reduced_grad(y: np.ndarray) -> np.ndarray:
        return comp @ oracle.grad(comp.T @ y)

    # Step (b): the complement vector with the largest estimated gradient;
    # complement rows are the canonical directions in reduced coordinates.
    norms = [float(np.linalg.norm(oracle.grad(x))) for x in comp]
    y = np.eye(k)[int(np.argmax(norms))]

    g = reduced_grad(y)
    gn = np.linalg.norm(g)
    if gn > ZERO_GRAD_TOL:
        y = g / gn
    for _ in range(config.n1):
        g = reduced_grad(y)
        gn = np.linalg.norm(g)
        if gn > ZERO_GRAD_TOL:
            y = g / gn

    residual = np.inf
    quiet_rounds = 0
    jumps = 0
    for _ in range(config.i_max):
        if k >= 2:
            x = sample_tangent_sphere(y, config.sigma, rng)
            w = exp_map(y, x)
        else:
            w = y
        jumps += 1
        prev = w
        for _ in range(config.n2):
            g = reduced_grad(prev)
            gn = np.linalg.norm(g)
            nxt = g / gn if gn > ZERO_GRAD_TOL else prev
            residual = sign_symmetric_residual(nxt, prev)
            prev = nxt
        y = prev
        if not strict:
            quiet_rounds = quiet_rounds + 1 if residual <= config.tol else 0
            if quiet_rounds >= _EARLY_EXIT_ROUNDS:
                break
    return FindResult(direction=comp.T @ y, jumps_used=jumps, final_residual=float(residual))


def robust_gi_recovery(
    oracle: GradientOracle,
    config: RecoveryConfig,
    strict: bool = False,
) -> RecoveredBasis:
    """Recover ``config.m_hat`` directions by repeated single-direction search.

    Deterministic for a fixed config: one seeded generator is threaded
    through the sequential searches.  With m_hat above the true number of
    encoded directions, the surplus returns carry small gradient norms and
    can be thresholded by the caller via the diagnostics.
    """
    if config.m_hat > oracle.dimension:
        raise ValueError("m_hat cannot exceed the oracle dimension")
    rng = np.random.default_rng(config.seed)
    found: list[np.ndarray] = []
    diags: list[DirectionDiagnostics] = []
    for _ in range(config.m_hat):
        res = find_basis_element(oracle, found, config, rng=rng, strict=strict)
        found.append(res.direction)
        diags.append(
            DirectionDiagnostics(
                jumps_used=res.jumps_used,
                final_residual=res.final_residual,
                grad_norm=float(np.linalg.norm(oracle.grad(res.direction))),
            )
        )
    directions = np.array(found)
    dupes = []
    for j in range(1, len(found)):
        inners = np.abs(directions[:j] @ directions[j])
        if inners.size and float(inners.max()) > DUPLICATE_INNER_THRESHOLD:
            dupes.append(j)
    return RecoveredBasis(directions=directions, diagnostics=tuple(diags), duplicates=tuple(dupes))


# ---------------------------------------------------------------------------
# Theoretical parameter derivation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TheoreticalParams:
    """Guarantee-regime parameters derived from a robustness certificate.

    ``in_guarantee_regime`` is False when the requested perturbation level
    exceeds the admissible bound; the config is still returned.  The
    universal constants left unspecified by the analysis default to 1,
    except the jump-count constant which defaults to 8.
    ``n2_alternative`` carries the looser closed form stated alongside the
    main bound.
    """

    config: RecoveryConfig
    tau: float
    eta: float
    n_small: int
    epsilon_max: float
    in_guarantee_regime: bool
    n2_alternative: int


JUMP_COUNT_CONSTANT = 8


def small_coordinate_steps(cert: RobustnessCertificate, epsilon: float) -> int:
    """Iterations to drive sub-threshold coordinates to the epsilon floor;
    grows double-logarithmically in 1/epsilon."""
    a, b, g, dl = cert.alpha, cert.beta, cert.gamma, cert.delta
    eps = max(float(epsilon), 2.0**-52)
    arg = math.log2(b * g / (8.0 * a * dl)) + 2.0 * g * math.log2(b / (4.0 * dl * eps))
    arg = max(arg, 2.0)
    return int(math.ceil(math.log(arg) / math.log(1.0 + 2.0 * g)))


def coordinate_threshold(cert: RobustnessCertificate, m: int) -> float:
    """Magnitude separating small (decaying) from large (competing) coordinates."""
    a, b, g, dl = cert.alpha, cert.beta, cert.gamma, cert.delta
    return (b * g / (16.0 * a * dl) * m ** (-dl)) ** (1.0 / (2.0 * g))


def theoretical_params(
    cert: RobustnessCertificate,
    m: int,
    d: int,
    epsilon: float,
    p: float,
    seed: int = 0,
    tol: float = 1e-10,
) -> TheoreticalParams:
    """Transcribe the guarantee-regime parameter bounds into a config.

    tau = [beta gamma / (16 alpha delta) * m^-delta]^(1/(2 gamma));
    sigma = tau^2 / (6 sqrt(2 d (1 + 2 delta)));  n1 doubles the
    small-coordinate step count; n2 adds the spread bound for the large
    coordinates; the jump count is 8 m ceil(log(m / p)).
    """
    if m < 1 or d < 2 or m > d:
        raise ValueError("need 1 <= m <= d and d >= 2")
    if not 0 < p < 1:
        raise ValueError("failure probability p must lie in (0, 1)")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    a, b, g, dl = cert.alpha, cert.beta, cert.gamma, cert.delta

    tau = coordinate_threshold(cert, m)
    sigma = tau**2 / (6.0 * math.sqrt(2.0 * d * (1.0 + 2.0 * dl)))
    n_small = small_coordinate_steps(cert, epsilon)
    n1 = 2 * n_small

    eta = min(1.0, (sigma / math.sqrt(d)) * (b * g / (a * dl * m**dl)) ** (1.0 / g) * tau**2)
    spread = (
        math.ceil(
            1.5
            / eta
            * (a * dl / (b * g)) ** (dl / g)
            * m ** ((dl / g) * (dl - g))
            * ((1.0 / g) * math.log(4.0 * a * dl / (b * g)) + (dl / g) * math.log(max(m, 1)))
        )
        + 2 * n_small
    )
    n2 = 2 * n_small + spread

    i_max = JUMP_COUNT_CONSTANT * m * max(1, math.ceil(math.log(m / p)))

    eps_div = (
        (9.0 / 256.0)
        * (b / dl)
        * (b * g / (a * dl)) ** ((2.0 * dl + 1.0) / (2.0 * g))
        * m ** (-(dl / g) * (0.5 + dl - g) - dl)
        * tau ** (2.0 + 2.0 * dl)
        * eta
    )
    epsilon_max = eps_div * d ** (-dl)

    # Looser alternative n2 bound in fully closed form.
    ratio = a * dl / (b * g)
    n2_alt = (
        math.ceil(
            4.0 ** (2.0 / g)
            * math.sqrt(d)
            / sigma
            * ratio ** ((dl + 2.0) / g)
            * m ** ((dl / g) * (dl - g + 2.0))
            * ((1.0 / g) * math.log(max(ratio, 1.0)) + (dl / g) * math.log(max(m, 1)))
        )
        + n_small
    )

    config = RecoveryConfig(sigma=sigma, n1=n1, n2=n2, i_max=i_max, m_hat=m, tol=tol, seed=seed)
    return TheoreticalParams(
        config=config,
        tau=tau,
        eta=eta,
        n_small=n_small,
        epsilon_max=epsilon_max,
        in_guarantee_regime=bool(epsilon <= epsilon_max),
        n2_alternative=n2_alt,
    )


# ---------------------------------------------------------------------------
# Matching recovered directions against a ground-truth basis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MatchReport:
    """Sign/permutation-aware alignment of recovered directions with truth.

    ``assignment[i]`` is the truth index matched to recovered direction i
    (None when more directions were recovered than exist in the truth set);
    signs make the matched inner products positive.
    """

    assignment: tuple[Optional[int], ...]
    signs: tuple[int, ...]
    errors: tuple[float, ...]
    max_error: float
    unmatched: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            "assignment": [None if a is None else int(a) for a in self.assignment],
            "signs": [int(s) for s in self.signs],
            "errors": [float(e) for e in self.errors],
            "max_error": float(self.max_error),
            "unmatched": [int(i) for i in self.unmatched],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def csv_row(self, seed: int, m: int, d: int, epsilon: float, jumps_used: int) -> list:
        return [seed, m, d, repr(float(epsilon)), repr(float(self.max_error)), jumps_used]


MATCH_CSV_HEADER = ["seed", "m", "d", "epsilon", "max_error", "jumps_used"]


def match_basis(recovered: Union[RecoveredBasis, np.ndarray], truth: np.ndarray) -> MatchReport:
    """Greedy maximum-|inner-product| assignment (ties broken by index)."""
    if isinstance(recovered, RecoveredBasis):
        rec = recovered.directions
    else:
        rec = np.asarray(recovered, dtype=float)
    truth = np.asarray(truth, dtype=float)
    k, mt = rec.shape[0], truth.shape[0]
    if k < 1:
        raise ValueError("need at least one recovered direction")

    scores = np.abs(rec @ truth.T)  # (k, mt)
    assignment: list[Optional[int]] = [None] * k
    rows_left = set(range(k))
    cols_left = set(range(mt))
    while rows_left and cols_left:
        best = (-1.0, None, None)
        for i in sorted(rows_left):
            for j in sorted(cols_left):
                if scores[i, j] > best[0]:
                    best = (float(scores[i, j]), i, j)
        _, i, j = best
        assignment[i] = j
        rows_left.remove(i)
        cols_left.remove(j)

    signs = []
    errors = []
    max_error = 0.0
    for i in range(k):
        j = assignment[i]
        if j is None:
            signs.append(1)
            errors.append(float("nan"))
            continue
        s = 1 if float(rec[i] @ truth[j]) >= 0 else -1
        err = float(np.linalg.norm(s * rec[i] - truth[j]))
        signs.append(s)
        errors.append(err)
        max_error = max(max_error, err)
    unmatched = tuple(i for i in range(k) if assignment[i] is None)
    return MatchReport(
        assignment=tuple(assignment),
        signs=tuple(signs),
        errors=tuple(errors),
        max_error=max_error,
        unmatched=unmatched,
    )
