"""Fisher information of number-resolved readout after a phase-randomised displacement."""

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .channels import (
    Regime,
    SmallTimeConfig,
    apply_decoherence,
    channel_probabilities,
    channel_terms,
)
from .fock import DEFAULT_TAIL, diagonal_of

__all__ = [
    "PROB_FLOOR",
    "NUM_FLOOR",
    "SUPPORT_ZERO",
    "COHERENT_FISHER",
    "FisherResult",
    "ExpansionReport",
    "SmallAlphaResult",
    "prob_derivative",
    "fisher_information",
    "gain",
    "occupation_bound",
    "small_alpha_fisher",
    "detect_spacing",
    "expansion_spacing",
    "parity_deviation",
    "perturbative_gain_loss",
    "perturbative_gain_fixed_tau",
    "dynamical_range",
]

PROB_FLOOR = 1e-14
NUM_FLOOR = 1e-20
SUPPORT_ZERO = 1e-14
COHERENT_FISHER = 4.0


@dataclass(frozen=True)
class FisherResult:
    fisher: float
    gain: float
    alpha: float
    # (n, P_n, dP_n) for dropped terms whose numerator was not negligible
    diagnostics: tuple = field(default=(), compare=False)


@dataclass(frozen=True)
class ExpansionReport:
    leading: float
    correction: float | None
    spacing: int
    offset: int = 0
    order: int | None = None


@dataclass(frozen=True)
class SmallAlphaResult:
    value: float
    diverged: bool
    gaps: tuple = ()


def _check_alpha(alpha):
    if not alpha > 0:
        raise ValueError("alpha must be > 0; the alpha -> 0 limit is probed at small finite alpha")


def prob_derivative(rho, alpha, tail_budget=DEFAULT_TAIL):
    """dP_n/d alpha of the phase-randomised output distribution."""
    _check_alpha(alpha)
    _, dP = channel_probabilities(diagonal_of(rho), alpha, tail_budget)
    return dP


def _fisher_from(P, dP, S):
    num = dP * dP
    keep = P > PROB_FLOOR
    F = float(np.sum(num[keep] / P[keep]))
    # Below the floor (dP)^2/P is a removable 0/0 (e.g. alpha^2 at a Laguerre
    # root); it is bounded by 4 S_n and equals it when one level feeds n.
    low = ~keep
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(P[low] > 0.0, num[low] / P[low], np.inf)
    F += float(np.sum(np.minimum(ratio, 4.0 * S[low])))
    bad = np.nonzero(low & (num >= NUM_FLOOR))[0]
    diag = tuple((int(n), float(P[n]), float(dP[n])) for n in bad)
    return F, diag


def fisher_information(rho, alpha, tail_budget=DEFAULT_TAIL):
    """Fisher information about ``alpha`` and the gain over the coherent value 4."""
    _check_alpha(alpha)
    F, diag = _fisher_from(*channel_terms(diagonal_of(rho), alpha, tail_budget))
    return FisherResult(F, F / COHERENT_FISHER, float(alpha), diag)


def gain(rho, alpha, decoherence=None, tail_budget=DEFAULT_TAIL):
    """Metrological gain after optional decoherence (see ``apply_decoherence``)."""
    return fisher_information(apply_decoherence(rho, decoherence), alpha, tail_budget).gain


def _moments(p):
    n = np.arange(p.size, dtype=float)
    return float(n @ p), float((n * n) @ p)


def occupation_bound(rho):
    """1 + 2<N>, the largest achievable gain."""
    mean, _ = _moments(diagonal_of(rho))
    return 1.0 + 2.0 * mean


def small_alpha_fisher(rho):
    """Coefficient S in F ~ 4 alpha^2 S for fully supported distributions.

    S = (p0 - p1)^2/p0 + sum_n [n p_{n-1} - (2n+1) p_n + (n+1) p_{n+1}]^2 / p_n.
    Terms whose occupation vanishes while the bracket does not are gaps: the
    expansion does not apply there (F stays O(1)) and ``diverged`` is set.
    """
    p = np.append(diagonal_of(rho), 0.0)
    n = np.arange(p.size, dtype=float)
    br = -(2.0 * n + 1.0) * p
    br[1:] += n[1:] * p[:-1]
    br[:-1] += n[1:] * p[1:]
    num = br * br
    keep = p > SUPPORT_ZERO
    gaps = tuple(int(i) for i in np.nonzero(~keep & (num > NUM_FLOOR))[0])
    value = float(np.sum(num[keep] / p[keep]))
    return SmallAlphaResult(value, bool(gaps), gaps)


def detect_spacing(rho, zero=SUPPORT_ZERO):
    """(spacing, offset) of the diagonal support; single points report the dimension."""
    p = diagonal_of(rho)
    support = np.nonzero(p > zero)[0]
    if support.size == 0:
        raise ValueError("state has no support above the zero threshold")
    if support.size == 1:
        return p.size, int(support[0])
    spacing = int(reduce(math.gcd, (int(v) for v in np.diff(support))))
    return spacing, int(support[0] % spacing)


def expansion_spacing(rho, alpha):
    """Small-alpha expansion of the gain for an N-spaced state.

    leading = 1 + 2<N>; for N = 2 the correction is -2 alpha^2 (1 + <N> + <N^2>).
    For wider spacings only the order 2*floor(N/2) of the first correction is
    known and ``correction`` is None (0 for a single Fock level).
    """
    p = diagonal_of(rho)
    spacing, offset = detect_spacing(p)
    if spacing == 1:
        raise ValueError("state is 1-spaced; the spaced expansion does not apply (spacing=1)")
    mean, second = _moments(p)
    leading = 1.0 + 2.0 * mean
    support = np.count_nonzero(p > SUPPORT_ZERO)
    if support == 1:
        return ExpansionReport(leading, 0.0, spacing, offset, None)
    order = 2 * (spacing // 2)
    if spacing == 2:
        corr = -2.0 * alpha * alpha * (1.0 + mean + second)
        return ExpansionReport(leading, corr, spacing, offset, order)
    return ExpansionReport(leading, None, spacing, offset, order)


def parity_deviation(rho):
    """eta = 1 - |<(-1)^N>|."""
    p = diagonal_of(rho)
    sign = 1.0 - 2.0 * (np.arange(p.size) % 2)
    return 1.0 - abs(float(sign @ p))


def _require_spacing(p, minimum):
    spacing, _ = detect_spacing(p)
    if spacing < minimum:
        raise ValueError(f"expansion needs spacing >= {minimum}, state is {spacing}-spaced")


def perturbative_gain_loss(rho, alpha, tau, nbar=0.0, regime=Regime.LOSS):
    """Fixed-alpha expansion 1 + 2<N> - eta / (2 alpha^2).

    eta = 2<N> tau for loss and 2(2<N>+1) tau nbar for heating.
    """
    _check_alpha(alpha)
    regime = Regime(regime)
    p = diagonal_of(rho)
    mean, _ = _moments(p)
    if tau == 0:
        return 1.0 + 2.0 * mean
    _require_spacing(p, 2)
    if regime is Regime.LOSS:
        eta = 2.0 * mean * tau
    elif regime is Regime.HEATING:
        eta = 2.0 * (2.0 * mean + 1.0) * tau * nbar
    else:
        raise ValueError("use LOSS or HEATING")
    return 1.0 + 2.0 * mean - eta / (2.0 * alpha * alpha)


def perturbative_gain_fixed_tau(rho, alpha, tau):
    """Fixed-tau loss expansion 1 + <N> + <N> alpha^2 / tau (spacing >= 4)."""
    _check_alpha(alpha)
    if not tau > 0:
        raise ValueError("tau must be > 0")
    p = diagonal_of(rho)
    _require_spacing(p, 4)
    mean, _ = _moments(p)
    return 1.0 + mean + mean * alpha * alpha / tau


def dynamical_range(rho, decoherence, alpha_grid, tol=1e-4, threshold=1.0,
                    tail_budget=DEFAULT_TAIL, margin=1e-9):
    """Intervals of alpha on which the gain exceeds ``threshold``.

    The grid is scanned first; sign changes between neighbours are refined
    by bisection to ``tol``.  Gains within ``margin`` of the threshold count
    as no advantage, so round-off never opens an interval.  Returns a list of
    ``(lo, hi)`` pairs.
    """
    grid = np.asarray(alpha_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty alpha grid")
    if np.any(np.diff(grid) <= 0) or grid[0] <= 0:
        raise ValueError("alpha grid must be positive and strictly increasing")
    state = apply_decoherence(rho, decoherence)
    p = diagonal_of(state)

    def excess(a):
        F, _ = _fisher_from(*channel_terms(p, a, tail_budget))
        return F / COHERENT_FISHER - threshold - margin

    vals = np.array([excess(a) for a in grid])

    def edge(lo, hi, f_lo):
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if (excess(mid) > 0) == (f_lo > 0):
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    intervals = []
    start = grid[0] if vals[0] > 0 else None
    for i in range(1, grid.size):
        a, b = vals[i - 1] > 0, vals[i] > 0
        if a == b:
            continue
        x = edge(grid[i - 1], grid[i], vals[i - 1])
        if b:
            start = x
        else:
            intervals.append((float(start), float(x)))
            start = None
    if start is not None:
        intervals.append((float(start), float(grid[-1])))
    return intervals
