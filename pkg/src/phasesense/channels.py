"""State transformations: phase-randomised displacements and thermal decoherence."""

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .fock import (
    DEFAULT_TAIL,
    DensityMatrix,
    NumberDistribution,
    cached_tables,
    diagonal_of,
)
from .kernels import channel_full_sum

__all__ = [
    "ChannelVariant",
    "ChannelConfig",
    "ThermalBathConfig",
    "Regime",
    "SmallTimeConfig",
    "channel_output_dim",
    "channel_terms",
    "channel_probabilities",
    "phase_randomized_diagonals",
    "phase_randomized_full",
    "small_time_map",
    "small_time_diagonal",
    "exact_lindblad",
    "lindblad_rk4",
    "integrate_master",
    "apply_decoherence",
]


class ChannelVariant(enum.IntEnum):
    DISPLACE = 1  # D(alpha e^{i phi})
    ROTATED_DISPLACE = 2  # R^dag(phi) D(alpha) R(phi)
    DISPLACE_ROTATE = 3  # D(alpha) R(phi)


@dataclass(frozen=True)
class ChannelConfig:
    alpha: float
    variant: ChannelVariant = ChannelVariant.DISPLACE

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        object.__setattr__(self, "variant", ChannelVariant(self.variant))


@dataclass(frozen=True)
class ThermalBathConfig:
    gamma: float
    nbar: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        if self.gamma < 0 or self.nbar < 0:
            raise ValueError("gamma and nbar must be non-negative")


class Regime(str, enum.Enum):
    LOSS = "loss"
    HEATING = "heating"
    GENERAL = "general"


@dataclass(frozen=True)
class SmallTimeConfig:
    """First-order thermal decoherence with dimensionless time ``tau = gamma t``.

    In the HEATING regime the single knob is ``tau * nbar``; with the default
    ``nbar=1`` ``tau`` is that knob directly.
    """

    tau: float
    nbar: float = 0.0
    regime: Regime = Regime.LOSS

    def __post_init__(self):
        regime = Regime(self.regime)
        object.__setattr__(self, "regime", regime)
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        if self.nbar < 0:
            raise ValueError("nbar must be non-negative")
        if regime is Regime.LOSS and self.nbar != 0:
            raise ValueError("the loss regime has nbar = 0")

    @classmethod
    def loss(cls, tau):
        return cls(tau, 0.0, Regime.LOSS)

    @classmethod
    def heating(cls, tau_bar):
        return cls(tau_bar, 1.0, Regime.HEATING)

    @property
    def heating_rate(self):
        return self.tau * self.nbar

    def coefficients(self):
        """(uniform, anticommutator, a^dag rho a, a rho a^dag) weights."""
        eps = self.tau
        if self.regime is Regime.HEATING:
            eb = eps * self.nbar
            return -eb, eb, eb, eb
        nb = self.nbar
        return -eps * nb, eps * (nb + 0.5), eps * nb, eps * (nb + 1.0)


# ---------------------------------------------------------------------------
# phase-randomised displacement
# ---------------------------------------------------------------------------


def channel_output_dim(din, alpha):
    """Initial guess for the output cutoff of a displacement by ``alpha``."""
    return int(din + math.ceil(5.0 * alpha * math.sqrt(din) + 5.0 * alpha * alpha) + 4)


def channel_terms(probs, alpha, tail_budget=DEFAULT_TAIL, dim_out=None, grow=True):
    """``(P, dP, S)`` for input occupations ``probs``.

    P_n and dP_n/d alpha of the phase-randomised output, plus
    S_n = sum_k p_k (dc_kn/d alpha)^2, the limit of (dP_n)^2 / (4 P_n) where
    every contributing overlap vanishes.  The output cutoff grows until the
    mass lost past it is below ``tail_budget``.
    """
    probs = np.asarray(probs, dtype=float)
    din = probs.size
    dout = channel_output_dim(din, alpha) if dim_out is None else int(dim_out)
    total = probs.sum()
    while True:
        c, dc = cached_tables(alpha, dout, din)
        P = (c * c) @ probs
        if total - P.sum() <= tail_budget or not grow:
            break
        if dout > 20 * din + 2000:
            raise RuntimeError(f"channel output did not converge within {dout} levels")
        dout = int(dout * 1.5) + 8
    if total - P.sum() > tail_budget:
        raise ValueError(
            f"truncation loses {total - P.sum():.2e} > tail budget {tail_budget:g}; enlarge dim_out"
        )
    dP = 2.0 * (c * dc) @ probs
    S = (dc * dc) @ probs
    return P, dP, S


def channel_probabilities(probs, alpha, tail_budget=DEFAULT_TAIL, dim_out=None, grow=True):
    """Output probabilities P_n and their derivatives dP_n/d alpha."""
    P, dP, _ = channel_terms(probs, alpha, tail_budget, dim_out, grow)
    return P, dP


def phase_randomized_diagonals(rho, alpha, tail_budget=DEFAULT_TAIL, dim_out=None):
    """Occupation distribution after a phase-randomised displacement by ``alpha``.

    Identical for all three channel variants; only the diagonal of ``rho`` enters.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    P, _ = channel_probabilities(diagonal_of(rho), alpha, tail_budget, dim_out)
    return NumberDistribution(P, tail_budget)


def phase_randomized_full(rho, alpha, variant=ChannelVariant.DISPLACE, dim_out=None,
                          tail_budget=DEFAULT_TAIL):
    """Full output matrix of the phase-averaged channel ``variant``."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    variant = ChannelVariant(variant)
    mat = rho.elems if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)
    din = mat.shape[0]
    probs = mat.diagonal().real
    if dim_out is None:
        P, _ = channel_probabilities(probs, alpha, tail_budget)
        dim_out = P.size
    c, _ = cached_tables(alpha, dim_out, din)
    if variant is ChannelVariant.DISPLACE_ROTATE:
        out = (c * probs) @ c.T
        out = out.astype(np.complex128)
    else:
        out = channel_full_sum(c, mat)
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix(out, trace=float(np.trace(out).real), check=False)


# ---------------------------------------------------------------------------
# small-time thermal map
# ---------------------------------------------------------------------------


def _soft_check(cfg):
    scale = cfg.tau * (cfg.nbar + 1.0) if cfg.regime is not Regime.HEATING else cfg.heating_rate
    if scale > 0.1:
        warnings.warn(
            f"small-time map used outside its regime (rate*time = {scale:.3g} > 0.1)",
            RuntimeWarning,
            stacklevel=3,
        )


def small_time_diagonal(probs, cfg):
    """Diagonal update rules of the first-order map; output gains one level."""
    p = np.append(np.asarray(probs, dtype=float), 0.0)
    n = np.arange(p.size, dtype=float)
    uni, anti, up, down = cfg.coefficients()
    out = p * (1.0 + uni) - 2.0 * anti * n * p
    out[1:] += up * n[1:] * p[:-1]
    out[:-1] += down * n[1:] * p[1:]
    return out


def small_time_map(rho, cfg):
    """First-order thermal decoherence.

    rho (1 - eps n-) - eps nbar' (rho N + N rho) + eps n- a^dag rho a + eps n+ a rho a^dag,
    with ``n- = nbar``, ``nbar' = nbar + 1/2``, ``n+ = nbar + 1``.  A
    ``NumberDistribution`` input takes the diagonal-only path.  The output
    carries one extra level so ``a^dag rho a`` is not truncated.
    """
    _soft_check(cfg)
    if isinstance(rho, NumberDistribution) or np.asarray(getattr(rho, "elems", rho)).ndim == 1:
        probs = diagonal_of(rho)
        out = small_time_diagonal(probs, cfg)
        budget = rho.tail_budget if isinstance(rho, NumberDistribution) else DEFAULT_TAIL
        if abs(out.sum() - probs.sum()) > 1e-8:
            raise RuntimeError("small-time map drifted from its analytic trace")
        return NumberDistribution(out, budget)

    mat = rho.elems if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)
    d = mat.shape[0] + 1
    r = np.zeros((d, d), dtype=np.complex128)
    r[:-1, :-1] = mat
    n = np.arange(d, dtype=float)
    sq = np.sqrt(n[1:])
    uni, anti, up, down = cfg.coefficients()
    out = r * (1.0 + uni) - anti * (r * n[None, :] + n[:, None] * r)
    # (a^dag rho a)[m, l] = sqrt(m l) rho[m-1, l-1]
    out[1:, 1:] += up * np.outer(sq, sq) * r[:-1, :-1]
    # (a rho a^dag)[m, l] = sqrt((m+1)(l+1)) rho[m+1, l+1]
    out[:-1, :-1] += down * np.outer(sq, sq) * r[1:, 1:]
    out = 0.5 * (out + out.conj().T)
    tr_in = np.trace(mat).real
    tr_out = np.trace(out).real
    if abs(tr_out - tr_in) > 1e-8:
        raise RuntimeError(f"small-time map trace drift {tr_out - tr_in:.2e}")
    return DensityMatrix(out, trace=tr_in, check=False)


# ---------------------------------------------------------------------------
# exact thermal solution
# ---------------------------------------------------------------------------


def _lindblad_functions(t, bath):
    h = bath.gamma * t / 2.0
    F = math.cosh(h) + (2.0 * bath.nbar + 1.0) * math.sinh(h)
    E = 2.0 * (bath.nbar + 1.0) * math.sinh(h) / F
    G = 2.0 * bath.nbar * math.sinh(h) / F
    return F, E, G


def _exact_diagonal(p, t, bath, dout, tol):
    F, E, G = _lindblad_functions(t, bath)
    d = dout
    x = np.zeros(d)
    x[: p.size] = p
    n = np.arange(d, dtype=float)
    inner = x.copy()
    term = x.copy()
    for k in range(1, 4 * d + 50):
        # (a T a^dag)[n] = (n+1) T[n+1]
        nxt = np.zeros(d)
        nxt[:-1] = (E / k) * n[1:] * term[1:]
        term = nxt
        inner += term
        if term.sum() <= tol * inner.sum():
            break
    mid = inner * np.exp(-2.0 * math.log(F) * n)
    out = mid.copy()
    term = mid.copy()
    if G > 0:
        for j in range(1, 4 * d + 50):
            # (a^dag S a)[n] = n S[n-1]
            nxt = np.zeros(d)
            nxt[1:] = (G / j) * n[1:] * term[:-1]
            term = nxt
            out += term
            if term.sum() <= tol * out.sum():
                break
    return out * math.exp(bath.gamma * t / 2.0) / F


def _exact_matrix(mat, t, bath, dout, tol):
    F, E, G = _lindblad_functions(t, bath)
    d = dout
    r = np.zeros((d, d), dtype=np.complex128)
    r[: mat.shape[0], : mat.shape[0]] = mat
    sq = np.sqrt(np.arange(1, d, dtype=float))
    w = np.outer(sq, sq)
    inner = r.copy()
    term = r.copy()
    for k in range(1, 4 * d + 50):
        nxt = np.zeros_like(term)
        nxt[:-1, :-1] = (E / k) * w * term[1:, 1:]
        term = nxt
        inner += term
        if np.abs(term).sum() <= tol * np.abs(inner).sum():
            break
    n = np.arange(d, dtype=float)
    left = np.exp(-(1j * bath.omega * t + math.log(F)) * n)
    right = np.exp((1j * bath.omega * t - math.log(F)) * n)
    mid = left[:, None] * inner * right[None, :]
    out = mid.copy()
    term = mid.copy()
    if G > 0:
        for j in range(1, 4 * d + 50):
            nxt = np.zeros_like(term)
            nxt[1:, 1:] = (G / j) * w * term[:-1, :-1]
            term = nxt
            out += term
            if np.abs(term).sum() <= tol * np.abs(out).sum():
                break
    out *= math.exp(bath.gamma * t / 2.0) / F
    return 0.5 * (out + out.conj().T)


def _thermal_margin(din, t, bath):
    if bath.nbar == 0:
        return 0
    _, _, G = _lindblad_functions(t, bath)
    if G <= 0:
        return 0
    # geometric tail of ratio G must fall below ~1e-16
    return int(math.ceil(40.0 / max(-math.log(min(G, 0.999)), 1e-3))) + 8


def exact_lindblad(rho, t, bath, dim_out=None, tail_budget=DEFAULT_TAIL, tol=1e-14):
    """Closed-form solution of the thermal master equation after time ``t``.

    The ladder series are summed until added terms fall below ``tol``.  With
    ``nbar > 0`` the output space is enlarged until the lost mass is within
    ``tail_budget``.  A ``NumberDistribution`` input uses the diagonal path.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    diag_only = isinstance(rho, NumberDistribution) or (
        not isinstance(rho, DensityMatrix) and np.asarray(rho).ndim == 1
    )
    if diag_only:
        data = diagonal_of(rho)
    else:
        data = rho.elems if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)
    din = data.shape[0]
    total = float(data.sum()) if diag_only else float(np.trace(data).real)
    if t == 0:
        return rho if isinstance(rho, (DensityMatrix, NumberDistribution)) else data
    grow = dim_out is None
    dout = din + _thermal_margin(din, t, bath) if grow else int(dim_out)
    while True:
        if diag_only:
            out = _exact_diagonal(data, t, bath, dout, tol)
            tr = out.sum()
        else:
            out = _exact_matrix(data, t, bath, dout, tol)
            tr = np.trace(out).real
        lost = total - tr
        if lost <= tail_budget or not grow:
            break
        if dout > 50 * din + 2000:
            break
        dout = int(dout * 1.5) + 8
    if lost > tail_budget:
        raise ValueError(
            f"truncation at {dout} levels loses {lost:.2e} of the heated state; enlarge dim_out"
        )
    if diag_only:
        return NumberDistribution(out, tail_budget)
    return DensityMatrix(out, trace=tr, check=False)


# ---------------------------------------------------------------------------
# master-equation integration
# ---------------------------------------------------------------------------


def _lindblad_rhs(rho, H, ops, dag_ops, damp):
    out = -1j * (H @ rho - rho @ H)
    for c, cd in zip(ops, dag_ops):
        out += c @ rho @ cd
    out -= 0.5 * (damp @ rho + rho @ damp)
    return out


def lindblad_rk4(rho0, h_of_t, collapse_ops, t_final, dt, trace_tol=1e-8):
    """Fixed-step RK4 for d rho/dt = -i[H(t), rho] + sum_c D[c] rho.

    ``h_of_t`` maps time to a Hermitian matrix (or ``None`` for no drive).
    Hermiticity is restored after every step; a trace drift beyond
    ``trace_tol`` aborts with ``FloatingPointError``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    rho = np.array(rho0, dtype=np.complex128)
    d = rho.shape[0]
    zero = np.zeros((d, d), dtype=np.complex128)
    ops = [np.asarray(c, dtype=np.complex128) for c in collapse_ops]
    dag_ops = [c.conj().T for c in ops]
    damp = sum((cd @ c for c, cd in zip(ops, dag_ops)), zero.copy())
    tr0 = np.trace(rho).real
    nsteps = int(math.ceil(t_final / dt - 1e-12)) if t_final > 0 else 0
    h = t_final / nsteps if nsteps else 0.0

    def H(t):
        val = h_of_t(t) if h_of_t is not None else None
        return zero if val is None else np.asarray(val, dtype=np.complex128)

    t = 0.0
    for _ in range(nsteps):
        H0, Hm, H1 = H(t), H(t + 0.5 * h), H(t + h)
        k1 = _lindblad_rhs(rho, H0, ops, dag_ops, damp)
        k2 = _lindblad_rhs(rho + 0.5 * h * k1, Hm, ops, dag_ops, damp)
        k3 = _lindblad_rhs(rho + 0.5 * h * k2, Hm, ops, dag_ops, damp)
        k4 = _lindblad_rhs(rho + h * k3, H1, ops, dag_ops, damp)
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        t += h
        drift = abs(np.trace(rho).real - tr0)
        if not drift <= trace_tol:
            raise FloatingPointError(f"trace drift {drift:.2e} at t={t:.4g}; reduce dt")
    return rho


def integrate_master(rho0, h_of_t, bath, t_final, dt):
    """RK4 integration of the thermal master equation for a single mode.

    The generator is ``h_of_t(t) + bath.omega * N``; collapse operators are
    ``sqrt(gamma (nbar+1)) a`` and ``sqrt(gamma nbar) a^dag``.
    """
    mat = rho0.elems if isinstance(rho0, DensityMatrix) else np.asarray(rho0, dtype=np.complex128)
    d = mat.shape[0]
    a = np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1)
    num = np.diag(np.arange(d, dtype=float))
    ops = []
    if bath.gamma > 0:
        ops.append(math.sqrt(bath.gamma * (bath.nbar + 1.0)) * a)
        if bath.nbar > 0:
            ops.append(math.sqrt(bath.gamma * bath.nbar) * a.T)

    def gen(t):
        val = h_of_t(t) if h_of_t is not None else None
        base = np.zeros((d, d)) if val is None else np.asarray(val)
        return base + bath.omega * num if bath.omega else base

    out = lindblad_rk4(mat, gen, ops, t_final, dt)
    return DensityMatrix(out, trace=float(np.trace(mat).real), check=False)


def apply_decoherence(state, decoherence):
    """Apply a decoherence spec to a state.

    ``decoherence`` may be ``None``, a :class:`SmallTimeConfig`, a
    ``(ThermalBathConfig, t)`` pair for the exact solution, or a callable.
    """
    if decoherence is None:
        return state
    if isinstance(decoherence, SmallTimeConfig):
        if decoherence.tau == 0:
            return state
        return small_time_map(state, decoherence)
    if isinstance(decoherence, tuple) and len(decoherence) == 2:
        bath, t = decoherence
        return exact_lindblad(state, t, bath)
    if callable(decoherence):
        return decoherence(state)
    raise TypeError(f"unsupported decoherence spec {decoherence!r}")
