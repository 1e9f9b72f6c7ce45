"""Truncated Fock-space primitives.

Density matrices, number distributions, associated Laguerre polynomials,
displaced-Fock overlaps and displaced-parity Wigner evaluation.
"""

import math
import os
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .kernels import overlap_tables

__all__ = [
    "NEG_CLAMP",
    "TruncationPolicy",
    "default_policy",
    "NumberDistribution",
    "DensityMatrix",
    "OverlapKernel",
    "laguerre_assoc",
    "displaced_fock_overlap",
    "overlap_kernel",
    "cached_tables",
    "displacement_matrix",
    "diagonal_of",
    "wigner_at",
    "wigner_grid",
    "TruncationWarning",
]

NEG_CLAMP = 1e-12
DEFAULT_TAIL = 1e-10


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TruncationPolicy:
    """Fock-space cutoff.  ``dim=None`` lets constructors size the space."""

    dim: int | None = None
    tail_budget: float = DEFAULT_TAIL

    def __post_init__(self):
        if self.dim is not None and self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")
        if not (0.0 < self.tail_budget <= 1e-6):
            raise ValueError(f"tail_budget must be in (0, 1e-6], got {self.tail_budget}")


def default_policy():
    """Truncation policy honouring the ``PHASESENSE_DIM`` override."""
    env = os.environ.get("PHASESENSE_DIM")
    return TruncationPolicy(dim=int(env) if env else None)


def _frozen(arr):
    arr = np.array(arr, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class NumberDistribution:
    """Occupation probabilities over a truncated Fock basis."""

    probs: np.ndarray
    tail_budget: float = DEFAULT_TAIL

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probs must be a non-empty 1-d array")
        if np.any(p < -NEG_CLAMP):
            worst = int(np.argmin(p))
            raise ValueError(f"negative probability {p[worst]:.3e} at n={worst}")
        p = np.where(p < 0.0, 0.0, p)
        total = p.sum()
        if total > 1.0 + 1e-9 or total < 1.0 - self.tail_budget - 1e-12:
            raise ValueError(
                f"probabilities sum to {total!r}, outside [1 - {self.tail_budget:g}, 1]"
            )
        object.__setattr__(self, "probs", _frozen(p))

    @property
    def dim(self):
        return self.probs.size

    def moment(self, k=1):
        n = np.arange(self.dim, dtype=float)
        return float(np.dot(n**k, self.probs))

    def mean(self):
        return self.moment(1)

    def parity(self):
        sign = 1.0 - 2.0 * (np.arange(self.dim) % 2)
        return float(np.dot(sign, self.probs))

    def total_variation(self, other):
        p, q = _pad_pair(self.probs, diagonal_of(other))
        return 0.5 * float(np.abs(p - q).sum())


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, positive, unit-trace matrix in the truncated Fock basis.

    ``trace`` declares the expected trace for intermediate maps that are
    only trace preserving up to truncation.
    """

    elems: np.ndarray
    trace: float = 1.0
    check: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        rho = np.asarray(self.elems, dtype=np.complex128)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {rho.shape}")
        if self.check:
            herm = np.abs(rho - rho.conj().T).max()
            if herm > 1e-12 * max(1.0, np.abs(rho).max()):
                raise ValueError(f"matrix not Hermitian (deviation {herm:.2e})")
            tr = np.trace(rho).real
            if abs(tr - self.trace) > 1e-10:
                raise ValueError(f"trace {tr!r} differs from declared {self.trace!r}")
        object.__setattr__(self, "elems", _frozen(rho))

    @classmethod
    def from_pure(cls, psi):
        psi = np.asarray(psi, dtype=np.complex128)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def from_diagonal(cls, probs):
        p = np.asarray(probs, dtype=float)
        return cls(np.diag(p / p.sum()).astype(np.complex128))

    @classmethod
    def fock(cls, n, dim=None):
        dim = n + 2 if dim is None else dim
        psi = np.zeros(dim)
        psi[n] = 1.0
        return cls.from_pure(psi)

    @property
    def dim(self):
        return self.elems.shape[0]

    def diagonal(self):
        return np.clip(self.elems.diagonal().real, 0.0, None)

    def distribution(self, tail_budget=DEFAULT_TAIL):
        return NumberDistribution(self.elems.diagonal().real, tail_budget)

    def moment(self, k=1):
        n = np.arange(self.dim, dtype=float)
        return float(np.dot(n**k, self.elems.diagonal().real))

    def mean(self):
        return self.moment(1)

    def parity(self):
        sign = 1.0 - 2.0 * (np.arange(self.dim) % 2)
        return float(np.dot(sign, self.elems.diagonal().real))

    def padded(self, dim):
        if dim < self.dim:
            raise ValueError("cannot pad to a smaller dimension")
        out = np.zeros((dim, dim), dtype=np.complex128)
        out[: self.dim, : self.dim] = self.elems
        return DensityMatrix(out, trace=self.trace, check=False)

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.elems).min())

    def is_valid(self, psd_tol=1e-9):
        return self.min_eigenvalue() >= -psd_tol

    def trace_distance(self, other):
        a, b = _pad_pair_matrix(self.elems, np.asarray(getattr(other, "elems", other)))
        return 0.5 * float(np.abs(np.linalg.eigvalsh(a - b)).sum())


def _pad_pair(p, q):
    n = max(p.size, q.size)
    return np.pad(p, (0, n - p.size)), np.pad(q, (0, n - q.size))


def _pad_pair_matrix(a, b):
    n = max(a.shape[0], b.shape[0])
    pa = np.zeros((n, n), dtype=np.complex128)
    pb = np.zeros((n, n), dtype=np.complex128)
    pa[: a.shape[0], : a.shape[0]] = a
    pb[: b.shape[0], : b.shape[0]] = b
    return pa, pb


def diagonal_of(state):
    """Occupation probabilities of a DensityMatrix, distribution or raw array."""
    if isinstance(state, DensityMatrix):
        return state.elems.diagonal().real.copy()
    if isinstance(state, NumberDistribution):
        return np.array(state.probs)
    arr = np.asarray(state)
    if arr.ndim == 2:
        return arr.diagonal().real.copy()
    if arr.ndim == 1:
        return arr.astype(float)
    raise TypeError(f"cannot read a number distribution from {type(state).__name__}")


# ---------------------------------------------------------------------------
# special functions and overlaps
# ---------------------------------------------------------------------------


def laguerre_assoc(p, q, x):
    """Associated Laguerre polynomial L_p^q(x) by upward recurrence in p."""
    if p < 0 or q < 0:
        raise ValueError("p and q must be non-negative")
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    prev, cur = 1.0, q + 1.0 - x
    if p == 0:
        return prev
    for k in range(1, p):
        prev, cur = cur, ((2 * k + q + 1 - x) * cur - (k + q) * prev) / (k + 1)
        if not math.isfinite(cur):
            raise OverflowError(f"L_{p}^{q}({x}) overflows")
    return cur


def displaced_fock_overlap(m, k, alpha, phi=0.0):
    """<m| D(alpha e^{i phi}) |k> for non-negative integers m, k."""
    if m < 0 or k < 0:
        raise ValueError("Fock indices must be non-negative")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if alpha == 0:
        return complex(m == k)
    if m == k:
        mag = math.exp(-alpha * alpha / 2) * laguerre_assoc(m, 0, alpha * alpha)
        return complex(mag)
    d = abs(m - k)
    lo, hi = min(m, k), max(m, k)
    lag = laguerre_assoc(lo, d, alpha * alpha)
    logmag = -alpha * alpha / 2 + 0.5 * (gammaln(lo + 1) - gammaln(hi + 1)) + d * math.log(alpha)
    sign = -1.0 if (k > m and d % 2 == 1) else 1.0
    return sign * math.exp(logmag) * lag * complex(math.cos(phi * (m - k)), math.sin(phi * (m - k)))


@lru_cache(maxsize=128)
def _tables(alpha, dout, din):
    c, dc = overlap_tables(alpha, dout, din)
    c.flags.writeable = False
    dc.flags.writeable = False
    return c, dc


def cached_tables(alpha, dout, din):
    """Memoised ``(c, dc/d alpha)`` for the given amplitude and shape."""
    return _tables(float(alpha), int(dout), int(din))


@dataclass(frozen=True)
class OverlapKernel:
    """Real overlaps ``coeffs[m, k]``; the phase of <m|D(alpha e^{i phi})|k> is e^{i phi (m-k)}."""

    alpha: float
    coeffs: np.ndarray

    def with_phase(self, phi):
        dout, din = self.coeffs.shape
        wind = np.arange(dout)[:, None] - np.arange(din)[None, :]
        return self.coeffs * np.exp(1j * phi * wind)

    def row_norms(self):
        return (self.coeffs**2).sum(axis=0)


def overlap_kernel(alpha, dim, dim_out=None):
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    c, _ = cached_tables(alpha, dim if dim_out is None else dim_out, dim)
    return OverlapKernel(float(alpha), c)


def displacement_matrix(beta, din, dout=None):
    """Matrix of D(beta) from a ``din``-level input space to ``dout`` levels."""
    dout = din if dout is None else dout
    c, _ = cached_tables(abs(beta), dout, din)
    wind = np.arange(dout)[:, None] - np.arange(din)[None, :]
    return c * np.exp(1j * np.angle(beta) * wind)


# ---------------------------------------------------------------------------
# Wigner function by displaced parity
# ---------------------------------------------------------------------------


def _wigner_margin(radius, dim):
    return int(math.ceil(6.0 * radius * math.sqrt(dim) + 4.0 * radius * radius + 10))


def wigner_at(rho, beta, tail_budget=DEFAULT_TAIL):
    """W(beta) = (2/pi) Tr[D(beta) (-1)^N D^dag(beta) rho]."""
    mat = rho.elems if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)
    din = mat.shape[0]
    dout = din + _wigner_margin(abs(beta), din)
    # D^dag(beta) rho D(beta) = D(-beta) rho D(-beta)^dag
    A = displacement_matrix(-beta, din, dout)
    diag = np.einsum("mk,kl,ml->m", A, mat, A.conj()).real
    lost = np.trace(mat).real - diag.sum()
    if lost > tail_budget:
        warnings.warn(
            f"displaced support exceeds truncation at beta={beta}: lost mass {lost:.2e}",
            TruncationWarning,
            stacklevel=2,
        )
    sign = 1.0 - 2.0 * (np.arange(dout) % 2)
    return float(2.0 / math.pi * np.dot(sign, diag))


def wigner_grid(rho, re_values, im_values, tail_budget=DEFAULT_TAIL):
    """W on the grid ``beta = re + i im``; result indexed ``[i_im, i_re]``."""
    out = np.empty((len(im_values), len(re_values)))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TruncationWarning)
        for i, y in enumerate(im_values):
            for j, x in enumerate(re_values):
                out[i, j] = wigner_at(rho, complex(x, y), tail_budget)
    if caught:
        warnings.warn(
            f"{len(caught)} grid points exceeded the truncation budget",
            TruncationWarning,
            stacklevel=2,
        )
    return out
