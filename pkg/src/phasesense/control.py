"""Driven qubit-oscillator simulator and dressed random-basis pulse optimisation.

Joint basis index is ``s * D + n`` with ``s = 0`` the qubit ground state.
The Hamiltonian is ``s- a^dag + s+ a + Omega(t) s+ + conj(Omega(t)) s-`` in
units of the qubit-oscillator coupling.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import Regime, SmallTimeConfig, ThermalBathConfig, lindblad_rk4, small_time_map
from .fock import DensityMatrix
from .kernels import jc_propagate
from .metrology import FisherResult, fisher_information

__all__ = [
    "PulseParams",
    "RewardConfig",
    "SpinBosonState",
    "OptimizationResult",
    "scaling_function",
    "hamiltonian_at",
    "evolve",
    "reward",
    "nelder_mead",
    "dcrab_optimize",
    "evaluate_under_preparation_noise",
    "pulse_record",
    "pulse_from_record",
    "DEFAULT_DIM",
    "DEFAULT_STEPS",
]

DEFAULT_DIM = 32
DEFAULT_STEPS = 2000
NORM_TOL = 1e-6


def scaling_function(t, T, sigma=10.0):
    """Envelope tanh[s sin(pi t / 2T)] tanh[s sin(pi (T - t) / 2T)], zero at both ends."""
    t = np.asarray(t, dtype=float)
    return np.tanh(sigma * np.sin(np.pi * t / (2.0 * T))) * np.tanh(
        sigma * np.sin(np.pi * (T - t) / (2.0 * T))
    )


@dataclass(frozen=True)
class PulseParams:
    """Two-quadrature pulse ``u_j(t) = f(t) sum_k a_jk cos(nu_jk t) + b_jk sin(nu_jk t)``.

    Row 0 drives Re Omega, row 1 drives Im Omega.  Columns accumulate over
    super-iterations, so ``a``, ``b`` and ``nu`` all have shape ``(2, K)``.
    """

    T: float
    a: np.ndarray = field(default_factory=lambda: np.zeros((2, 0)))
    b: np.ndarray = field(default_factory=lambda: np.zeros((2, 0)))
    nu: np.ndarray = field(default_factory=lambda: np.zeros((2, 0)))
    amp_cap: float = 150.0
    sigma: float = 10.0
    n_p: int = 12

    def __post_init__(self):
        if self.T < 0:
            raise ValueError("T must be non-negative")
        arrays = [np.array(v, dtype=float).reshape(2, -1) for v in (self.a, self.b, self.nu)]
        if not arrays[0].shape == arrays[1].shape == arrays[2].shape:
            raise ValueError("a, b and nu must share a shape")
        for name, arr in zip(("a", "b", "nu"), arrays):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.amp_cap <= 0:
            raise ValueError("amp_cap must be positive")

    @property
    def nu_max(self):
        return 50.0 * self.T / (2.0 * math.pi)

    @property
    def components(self):
        return self.a.shape[1]

    def controls(self, t):
        """Clipped quadratures, shape ``(2, len(t))``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.components == 0 or self.T == 0:
            return np.zeros((2, t.size))
        phase = self.nu[:, :, None] * t[None, None, :]
        raw = np.sum(self.a[:, :, None] * np.cos(phase) + self.b[:, :, None] * np.sin(phase), axis=1)
        return np.clip(scaling_function(t, self.T, self.sigma) * raw, -self.amp_cap, self.amp_cap)

    def omega(self, t):
        u = self.controls(t)
        return u[0] + 1j * u[1]

    def extended(self, a_new, b_new, nu_new):
        return PulseParams(
            self.T,
            np.hstack([self.a, np.reshape(a_new, (2, -1))]),
            np.hstack([self.b, np.reshape(b_new, (2, -1))]),
            np.hstack([self.nu, np.reshape(nu_new, (2, -1))]),
            self.amp_cap,
            self.sigma,
            self.n_p,
        )


@dataclass(frozen=True)
class RewardConfig:
    """Decoherence-aware reward: gain after small-time noise of strength
    ``eps_ratio * alpha**2`` minus ``lam`` times the occupation shortfall penalty."""

    alpha: float
    eps_ratio: float = 0.0
    n_target: float = 5.0
    lam: float = 10.0
    regime: Regime = Regime.LOSS

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if self.eps_ratio < 0 or self.lam < 0 or self.n_target < 0:
            raise ValueError("eps_ratio, lam and n_target must be non-negative")
        regime = Regime(self.regime)
        if regime is Regime.GENERAL:
            raise ValueError("reward noise is either loss or heating")
        object.__setattr__(self, "regime", regime)

    def decoherence(self):
        tau = self.eps_ratio * self.alpha**2
        if self.regime is Regime.HEATING:
            return SmallTimeConfig.heating(tau)
        return SmallTimeConfig.loss(tau)

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "eps_ratio": self.eps_ratio,
            "n_target": self.n_target,
            "lam": self.lam,
            "regime": self.regime.value,
        }

    @classmethod
    def from_dict(cls, record):
        return cls(**record)


@dataclass(frozen=True)
class SpinBosonState:
    """Joint qubit-oscillator state (pure vector or density matrix) and its boson marginal."""

    dim: int
    boson: DensityMatrix
    psi: np.ndarray | None = None
    rho: np.ndarray | None = None
    norms: np.ndarray | None = field(default=None, repr=False)

    @property
    def qubit_excited(self):
        if self.psi is not None:
            return float(np.vdot(self.psi[self.dim:], self.psi[self.dim:]).real)
        return float(np.trace(self.rho[self.dim:, self.dim:]).real)


def _ladder(dim):
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)


def hamiltonian_at(t, pulse, dim=DEFAULT_DIM):
    """Dense joint Hamiltonian at time ``t`` (shape ``(2 dim, 2 dim)``)."""
    a = _ladder(dim)
    eye = np.eye(dim)
    # s+ = |e><g| maps block 0 into block 1
    sp = np.array([[0.0, 0.0], [1.0, 0.0]])
    sm = sp.T
    om = complex(pulse.omega(t)[0]) if pulse.T > 0 else 0j
    H = np.kron(sm, a.T) + np.kron(sp, a) + om * np.kron(sp, eye) + np.conj(om) * np.kron(sm, eye)
    return H.astype(np.complex128)


def _step_count(pulse, dt):
    if pulse.T == 0:
        return 0, 0.0
    steps = DEFAULT_STEPS if dt is None else max(1, int(round(pulse.T / dt)))
    return steps, pulse.T / steps


def _reduce(psi, dim):
    g, e = psi[:dim], psi[dim:]
    rho = np.outer(g, g.conj()) + np.outer(e, e.conj())
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho / np.trace(rho).real)


def evolve(pulse, bath=None, dt=None, dim=DEFAULT_DIM):
    """Evolve ``|g, 0>`` under ``pulse``.

    Without a bath the pure state is stepped with exponential midpoint steps;
    with a :class:`ThermalBathConfig` the joint density matrix follows the
    Lindblad equation with oscillator collapse operators (fixed-step RK4).
    ``dt`` defaults to ``T / 2000``.
    """
    steps, h = _step_count(pulse, dt)
    psi0 = np.zeros(2 * dim, dtype=np.complex128)
    psi0[0] = 1.0
    mids = (np.arange(steps) + 0.5) * h
    if bath is None or bath.gamma == 0 and bath.omega == 0:
        omegas = pulse.omega(mids) if steps else np.zeros(0, dtype=np.complex128)
        g, e, norms = jc_propagate(psi0[:dim], psi0[dim:], omegas, h)
        drift = float(np.max(np.abs(norms - 1.0)))
        if drift > NORM_TOL:
            raise RuntimeError(f"norm drift {drift:.2e} exceeds {NORM_TOL:g}; reduce dt or raise dim")
        psi = np.concatenate([g, e])
        return SpinBosonState(dim, _reduce(psi, dim), psi=psi, norms=norms)

    a = np.kron(np.eye(2), _ladder(dim))
    ops = []
    if bath.gamma * (bath.nbar + 1.0) > 0:
        ops.append(math.sqrt(bath.gamma * (bath.nbar + 1.0)) * a)
    if bath.gamma * bath.nbar > 0:
        ops.append(math.sqrt(bath.gamma * bath.nbar) * a.T)
    num = np.kron(np.eye(2), np.diag(np.arange(dim, dtype=float)))
    base = hamiltonian_at(0.0, PulseParams(pulse.T), dim)

    def gen(t):
        om = complex(pulse.omega(t)[0]) if pulse.components else 0j
        H = base.copy()
        H[dim:, :dim] += om * np.eye(dim)
        H[:dim, dim:] += np.conj(om) * np.eye(dim)
        return H + bath.omega * num if bath.omega else H

    rho0 = np.outer(psi0, psi0.conj())
    rho = lindblad_rk4(rho0, gen, ops, pulse.T, h, trace_tol=NORM_TOL) if steps else rho0
    boson = rho[:dim, :dim] + rho[dim:, dim:]
    boson = 0.5 * (boson + boson.conj().T)
    return SpinBosonState(dim, DensityMatrix(boson / np.trace(boson).real), rho=rho)


def occupation_penalty(mean, n_target):
    """(1 - <N>^2 / Ntilde^2) when <N> < Ntilde, else 0."""
    if n_target <= 0 or mean >= n_target:
        return 0.0
    return 1.0 - mean * mean / (n_target * n_target)


def reward(rho_boson, cfg):
    """Gain after the configured small-time noise minus the weighted occupation penalty."""
    noisy = small_time_map(rho_boson, cfg.decoherence())
    score = fisher_information(noisy, cfg.alpha).gain
    return score - cfg.lam * occupation_penalty(rho_boson.mean(), cfg.n_target)


# ---------------------------------------------------------------------------
# Nelder-Mead
# ---------------------------------------------------------------------------


@dataclass
class _Budget:
    f: object
    limit: int
    used: int = 0
    best_x: np.ndarray | None = None
    best_f: float = math.inf
    trace: list = field(default_factory=list)

    def __call__(self, x):
        if self.used >= self.limit:
            raise StopIteration
        val = float(self.f(x))
        if not math.isfinite(val):
            val = math.inf
        self.used += 1
        if val < self.best_f:
            self.best_f = val
            self.best_x = np.array(x, copy=True)
        self.trace.append(self.best_f)
        return val


def nelder_mead(f, x0, spread, max_evals, rng=None, xtol=1e-9, ftol=1e-12,
                reflect=1.0, expand=2.0, contract=0.5, shrink=0.5):
    """Minimise ``f`` by Nelder-Mead until ``max_evals`` evaluations are spent.

    A collapsed simplex (spread below ``xtol`` and ``ftol``) is restarted
    around the best point with random jitter.  Returns
    ``(best_x, best_f, best_so_far_trace, restarts)``.
    """
    rng = np.random.default_rng() if rng is None else rng
    x0 = np.asarray(x0, dtype=float)
    dim = x0.size
    fun = _Budget(f, int(max_evals))
    restarts = 0
    if max_evals <= 0:
        return x0, math.inf, [], 0

    def initial(centre, scale, jitter):
        pts = [centre.copy()]
        for i in range(dim):
            p = centre.copy()
            step = scale * (rng.uniform(0.5, 1.5) * rng.choice((-1.0, 1.0)) if jitter else 1.0)
            p[i] += step
            pts.append(p)
        return np.array(pts)

    try:
        simplex = initial(x0, spread, False)
        values = np.array([fun(p) for p in simplex])
        while True:
            order = np.argsort(values, kind="stable")
            simplex, values = simplex[order], values[order]
            size = np.max(np.abs(simplex[1:] - simplex[0]))
            if size < xtol * (1.0 + np.max(np.abs(simplex[0]))) or (
                values[-1] - values[0] < ftol * (1.0 + abs(values[0])) and size < 1e-3 * spread
            ):
                restarts += 1
                simplex = initial(fun.best_x, spread * 0.5 ** min(restarts, 10), True)
                values = np.array([fun(p) for p in simplex])
                continue
            centroid = simplex[:-1].mean(axis=0)
            xr = centroid + reflect * (centroid - simplex[-1])
            fr = fun(xr)
            if fr < values[0]:
                xe = centroid + expand * (xr - centroid)
                fe = fun(xe)
                if fe < fr:
                    simplex[-1], values[-1] = xe, fe
                else:
                    simplex[-1], values[-1] = xr, fr
            elif fr < values[-2]:
                simplex[-1], values[-1] = xr, fr
            else:
                if fr < values[-1]:
                    xc = centroid + contract * (xr - centroid)
                else:
                    xc = centroid + contract * (simplex[-1] - centroid)
                fc = fun(xc)
                if fc < min(fr, values[-1]):
                    simplex[-1], values[-1] = xc, fc
                else:
                    for i in range(1, dim + 1):
                        simplex[i] = simplex[0] + shrink * (simplex[i] - simplex[0])
                        values[i] = fun(simplex[i])
    except StopIteration:
        pass
    return fun.best_x, fun.best_f, fun.trace, restarts


# ---------------------------------------------------------------------------
# dressed chopped random basis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OptimizationResult:
    pulse: PulseParams
    state: DensityMatrix
    trace: np.ndarray
    seed: int | None
    reward: float
    evaluations: int
    restarts: int = 0

    def __iter__(self):
        return iter((self.pulse, self.state, self.trace))


def dcrab_optimize(cfg, T, super_iterations=5, max_evals=10000, n_p=12, dim=DEFAULT_DIM,
                   dt=None, seed=None, amp_cap=150.0, sigma=10.0, log=None):
    """Maximise :func:`reward` over pulses of duration ``T``.

    Each super-iteration draws ``n_p`` fresh frequencies per quadrature in
    ``[0, nu_max]`` and optimises their ``4 n_p`` coefficients by Nelder-Mead
    on top of the best pulse found so far, which stays fixed.
    """
    if super_iterations < 0 or max_evals < 0:
        raise ValueError("budget must be non-negative")
    rng = np.random.default_rng(seed)
    best = PulseParams(T, amp_cap=amp_cap, sigma=sigma, n_p=n_p)
    state = evolve(best, dt=dt, dim=dim).boson
    best_reward = reward(state, cfg)
    trace = [best_reward]
    evaluations = 0
    restarts = 0
    if T == 0:
        super_iterations = 0
    for it in range(super_iterations):
        nu = rng.uniform(0.0, best.nu_max, size=(2, n_p))

        def objective(x, base=best, nu=nu):
            trial = base.extended(x[: 2 * n_p], x[2 * n_p:], nu)
            try:
                rho = evolve(trial, dt=dt, dim=dim).boson
            except RuntimeError:
                return math.inf
            return -reward(rho, cfg)

        x, fx, sub_trace, n_restart = nelder_mead(
            objective, np.zeros(4 * n_p), 0.1 * amp_cap, max_evals, rng=rng
        )
        evaluations += len(sub_trace)
        restarts += n_restart
        trace.extend(max(best_reward, -v) for v in sub_trace)
        if x is not None and -fx > best_reward:
            best = best.extended(x[: 2 * n_p], x[2 * n_p:], nu)
            best_reward = -fx
            state = evolve(best, dt=dt, dim=dim).boson
        trace = list(np.maximum.accumulate(trace))
        if log is not None:
            log(f"super-iteration {it + 1}/{super_iterations}: best reward {best_reward:.6g}")
    return OptimizationResult(best, state, np.array(trace), seed, best_reward, evaluations, restarts)


def evaluate_under_preparation_noise(pulse, bath, cfg, dt=None, dim=DEFAULT_DIM):
    """Fisher information at ``cfg.alpha`` of the oscillator state prepared with ``bath`` active."""
    state = evolve(pulse, bath=bath, dt=dt, dim=dim).boson
    return fisher_information(state, cfg.alpha)


def pulse_record(result, cfg=None, dim=DEFAULT_DIM, dt=None):
    """Flat JSON-ready record of an optimised pulse."""
    pulse = result.pulse
    diag = result.state.diagonal()
    rec = {
        "seed": result.seed,
        "T": pulse.T,
        "N_p": pulse.n_p,
        "nu": pulse.nu.tolist(),
        "a": pulse.a.tolist(),
        "b": pulse.b.tolist(),
        "final_reward": float(result.reward),
        "final_mean_n": float(np.arange(diag.size) @ diag),
        "final_diagonal": diag.tolist(),
        "amp_cap": pulse.amp_cap,
        "sigma": pulse.sigma,
        "dim": dim,
        "dt": dt,
    }
    if cfg is not None:
        rec["reward_config"] = cfg.to_dict()
    return rec


def pulse_from_record(rec):
    return PulseParams(
        rec["T"],
        np.array(rec["a"], dtype=float),
        np.array(rec["b"], dtype=float),
        np.array(rec["nu"], dtype=float),
        rec.get("amp_cap", 150.0),
        rec.get("sigma", 10.0),
        rec.get("N_p", 12),
    )
