"""Hot numeric kernels, each in two flavours.

``*_loops`` functions are explicit loops compiled with numba; ``*_numpy``
functions are vectorised equivalents used when numba is disabled.  The
public wrappers dispatch on :data:`phasesense._accel.USE_NUMBA`.
"""

import math

import numpy as np
from scipy.special import gammaln

from ._accel import USE_NUMBA, jit

__all__ = [
    "overlap_tables",
    "channel_full_sum",
    "jc_propagate",
]


# ---------------------------------------------------------------------------
# displaced-Fock overlaps  <m|D(alpha)|k>  and  d<m|D|k>/d alpha
# ---------------------------------------------------------------------------


@jit
def _overlap_loops(alpha, dout, din):
    x = alpha * alpha
    pmax = min(dout, din)
    qmax = max(dout, din)
    lag = np.zeros((qmax + 1, pmax + 1))
    for q in range(qmax + 1):
        lag[q, 0] = 1.0
        if pmax >= 1:
            lag[q, 1] = q + 1.0 - x
        for p in range(1, pmax):
            lag[q, p + 1] = ((2 * p + q + 1 - x) * lag[q, p] - (p + q) * lag[q, p - 1]) / (p + 1)
    lfac = np.zeros(qmax + 1)
    for i in range(1, qmax + 1):
        lfac[i] = lfac[i - 1] + math.log(i)

    c = np.zeros((dout, din))
    dc = np.zeros((dout, din))
    if alpha == 0.0:
        for i in range(min(dout, din)):
            c[i, i] = 1.0
        # d<m|D|k>/d alpha at 0 is <m|(a^dag - a)|k>
        for i in range(min(dout - 1, din)):
            dc[i + 1, i] = math.sqrt(i + 1.0)
        for i in range(min(dout, din - 1)):
            dc[i, i + 1] = -math.sqrt(i + 1.0)
        return c, dc, True

    loga = math.log(alpha)
    finite = True
    for m in range(dout):
        for k in range(din):
            mu = min(m, k)
            d = abs(m - k)
            big = max(m, k)
            L = lag[d, mu]
            if not math.isfinite(L):
                finite = False
                continue
            logmag = -0.5 * x + 0.5 * (lfac[mu] - lfac[big]) + d * loga
            sign = 1.0
            if k > m and d % 2 == 1:
                sign = -1.0
            if L != 0.0:
                sl = sign if L > 0.0 else -sign
                c[m, k] = sl * math.exp(logmag + math.log(abs(L)))
            Lm = lag[d + 1, mu - 1] if mu >= 1 else 0.0
            br = -2.0 * x * Lm + (d - x) * L
            if br != 0.0:
                sb = sign if br > 0.0 else -sign
                dc[m, k] = sb * math.exp(logmag + math.log(abs(br)) - loga)
    return c, dc, finite


def _laguerre_table_numpy(x, qmax, pmax):
    q = np.arange(qmax + 1, dtype=float)
    lag = np.zeros((qmax + 1, pmax + 1))
    lag[:, 0] = 1.0
    if pmax >= 1:
        lag[:, 1] = q + 1.0 - x
    for p in range(1, pmax):
        lag[:, p + 1] = ((2 * p + q + 1 - x) * lag[:, p] - (p + q) * lag[:, p - 1]) / (p + 1)
    return lag


def _overlap_numpy(alpha, dout, din):
    c = np.zeros((dout, din))
    dc = np.zeros((dout, din))
    if alpha == 0.0:
        idx = np.arange(min(dout, din))
        c[idx, idx] = 1.0
        j = np.arange(min(dout - 1, din))
        dc[j + 1, j] = np.sqrt(j + 1.0)
        j = np.arange(min(dout, din - 1))
        dc[j, j + 1] = -np.sqrt(j + 1.0)
        return c, dc, True
    x = alpha * alpha
    pmax = min(dout, din)
    qmax = max(dout, din)
    lag = _laguerre_table_numpy(x, qmax, pmax)
    m = np.arange(dout)[:, None]
    k = np.arange(din)[None, :]
    mu = np.minimum(m, k)
    d = np.abs(m - k)
    big = np.maximum(m, k)
    L = lag[d, mu]
    finite = bool(np.all(np.isfinite(L)))
    Lm = np.where(mu >= 1, lag[np.minimum(d + 1, qmax), np.maximum(mu - 1, 0)], 0.0)
    loga = np.log(alpha)
    logmag = -0.5 * x + 0.5 * (gammaln(mu + 1.0) - gammaln(big + 1.0)) + d * loga
    sign = np.where((k > m) & (d % 2 == 1), -1.0, 1.0)
    br = -2.0 * x * Lm + (d - x) * L
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        c = np.where(L != 0.0, sign * np.sign(L) * np.exp(logmag + np.log(np.abs(L))), 0.0)
        dc = np.where(br != 0.0, sign * np.sign(br) * np.exp(logmag + np.log(np.abs(br)) - loga), 0.0)
    return c, dc, finite


def overlap_tables(alpha, dout, din):
    """Real overlap matrix ``c[m, k] = <m|D(alpha)|k>`` and its alpha-derivative.

    Raises ``OverflowError`` when the Laguerre recurrence leaves the float range.
    """
    alpha = float(alpha)
    if USE_NUMBA:
        c, dc, finite = _overlap_loops(alpha, int(dout), int(din))
    else:
        c, dc, finite = _overlap_numpy(alpha, int(dout), int(din))
    if not finite:
        raise OverflowError(
            f"associated Laguerre recurrence overflowed (alpha={alpha}, dims={dout}x{din})"
        )
    return c, dc


# ---------------------------------------------------------------------------
# full output of the phase-averaged displacement channel (variants 1 and 2)
# out[m, m'] = sum_k c[m, k] rho[k, k + m' - m] c[m', k + m' - m]
# ---------------------------------------------------------------------------


@jit
def _channel_full_loops(c, rho):
    dout, din = c.shape
    out = np.zeros((dout, dout), dtype=np.complex128)
    for m in range(dout):
        for mp in range(dout):
            s = mp - m
            acc = 0.0 + 0.0j
            for k in range(din):
                l = k + s
                if l < 0 or l >= din:
                    continue
                acc += c[m, k] * rho[k, l] * c[mp, l]
            out[m, mp] = acc
    return out


def _channel_full_numpy(c, rho):
    dout, din = c.shape
    m = np.arange(dout)[:, None]
    k = np.arange(din)[None, :]
    shift = m - k
    out = np.zeros((dout, dout), dtype=np.complex128)
    for s in range(-(din - 1), dout):
        a = np.where(shift == s, c, 0.0)
        out += a @ rho @ a.T
    return out


def channel_full_sum(c, rho):
    rho = np.ascontiguousarray(rho, dtype=np.complex128)
    c = np.ascontiguousarray(c, dtype=np.float64)
    if USE_NUMBA:
        return _channel_full_loops(c, rho)
    return _channel_full_numpy(c, rho)


# ---------------------------------------------------------------------------
# spin-boson propagation, H = s- a^dag + s+ a + Omega s+ + Omega^* s-
# exponential-midpoint stepping, exp(-i H dt) expanded until terms vanish
# ---------------------------------------------------------------------------


@jit
def _jc_apply(psi_g, psi_e, omega, out_g, out_e):
    dim = psi_g.shape[0]
    oc = np.conj(omega)
    for n in range(dim):
        vg = oc * psi_e[n]
        if n >= 1:
            vg += math.sqrt(n) * psi_e[n - 1]
        ve = omega * psi_g[n]
        if n + 1 < dim:
            ve += math.sqrt(n + 1) * psi_g[n + 1]
        out_g[n] = vg
        out_e[n] = ve


@jit
def _jc_propagate_loops(psi_g, psi_e, omegas, dt, tol):
    dim = psi_g.shape[0]
    g = psi_g.copy()
    e = psi_e.copy()
    tg = np.empty(dim, dtype=np.complex128)
    te = np.empty(dim, dtype=np.complex128)
    ng = np.empty(dim, dtype=np.complex128)
    ne = np.empty(dim, dtype=np.complex128)
    norms = np.empty(omegas.shape[0] + 1)
    s0 = 0.0
    for n in range(dim):
        s0 += (g[n] * np.conj(g[n])).real + (e[n] * np.conj(e[n])).real
    norms[0] = math.sqrt(s0)
    for step in range(omegas.shape[0]):
        om = omegas[step]
        for n in range(dim):
            tg[n] = g[n]
            te[n] = e[n]
        j = 1
        while True:
            _jc_apply(tg, te, om, ng, ne)
            fac = -1j * dt / j
            tnorm = 0.0
            for n in range(dim):
                tg[n] = fac * ng[n]
                te[n] = fac * ne[n]
                g[n] += tg[n]
                e[n] += te[n]
                tnorm += abs(tg[n]) + abs(te[n])
            if tnorm < tol or j > 200:
                break
            j += 1
        s = 0.0
        for n in range(dim):
            s += (g[n] * np.conj(g[n])).real + (e[n] * np.conj(e[n])).real
        norms[step + 1] = math.sqrt(s)
    return g, e, norms


def _jc_propagate_numpy(psi_g, psi_e, omegas, dt, tol):
    dim = psi_g.shape[0]
    sq = np.sqrt(np.arange(1, dim, dtype=float))
    g = psi_g.copy()
    e = psi_e.copy()
    norms = np.empty(len(omegas) + 1)
    norms[0] = np.sqrt(np.vdot(g, g).real + np.vdot(e, e).real)
    for step, om in enumerate(omegas):
        tg, te = g.copy(), e.copy()
        j = 1
        while True:
            ng = np.conj(om) * te
            ng[1:] += sq * te[:-1]
            ne = om * tg
            ne[:-1] += sq * tg[1:]
            fac = -1j * dt / j
            tg, te = fac * ng, fac * ne
            g += tg
            e += te
            if np.abs(tg).sum() + np.abs(te).sum() < tol or j > 200:
                break
            j += 1
        norms[step + 1] = np.sqrt(np.vdot(g, g).real + np.vdot(e, e).real)
    return g, e, norms


def jc_propagate(psi_g, psi_e, omegas, dt, tol=1e-15):
    """Propagate a qubit-boson pure state through piecewise-constant drives.

    ``omegas[s]`` is the complex drive held during step ``s``.  Returns the
    final ground/excited boson amplitudes and the state norm after every step.
    """
    psi_g = np.ascontiguousarray(psi_g, dtype=np.complex128)
    psi_e = np.ascontiguousarray(psi_e, dtype=np.complex128)
    omegas = np.ascontiguousarray(omegas, dtype=np.complex128)
    if USE_NUMBA:
        return _jc_propagate_loops(psi_g, psi_e, omegas, float(dt), float(tol))
    return _jc_propagate_numpy(psi_g, psi_e, omegas, float(dt), float(tol))
