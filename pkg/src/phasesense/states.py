"""Probe-state families in the Fock basis and occupation solvers.

Every constructor works on unnormalised amplitudes over a generously sized
basis, normalises, and then cuts the basis where the remaining tail mass
falls below the truncation budget.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import ai_zeros, airy, gammaln

from .fock import DEFAULT_TAIL, DensityMatrix, NumberDistribution, TruncationPolicy, default_policy

__all__ = [
    "Family",
    "StateSpec",
    "build",
    "amplitudes",
    "thermal",
    "mixture",
    "gkp_number_distribution",
    "gkp_mean_occupation_approx",
    "compass_mean_occupation",
    "cat_mean_occupation",
    "solve_for_occupation",
    "ZOO_LABELS",
    "zoo",
    "AIRY_Z1",
]

AIRY_Z1 = float(-ai_zeros(1)[0][0])
MAX_DIM = 20000


class Family(str, enum.Enum):
    FOCK = "fock"
    GAUSSIAN = "gaussian"
    CAT = "cat"
    MOON = "moon"
    GKP = "gkp"
    COMPASS = "compass"
    NUMBER_PHASE = "number_phase"
    FOCK_SUPERPOSITION = "fock_superposition"
    COHERENT = "coherent"


# parameter defaults per family; the first key is the positional shorthand
_DEFAULTS = {
    Family.FOCK: {"n": 0},
    Family.GAUSSIAN: {"nbar": 1.0},
    Family.CAT: {"size": 1.0, "parity": 1},
    Family.MOON: {"size": 1.0, "delta": 1.0, "parity": 1},
    Family.GKP: {"delta": 0.4},
    Family.COMPASS: {"size": 2.0},
    Family.NUMBER_PHASE: {"mu": 1.0, "spacing": 2, "offset": 0},
    Family.FOCK_SUPERPOSITION: {"levels": (6, 10)},
    Family.COHERENT: {"beta": 0.0},
}

_ALIASES = {
    "squeezed": Family.GAUSSIAN,
    "gaussian_squeezed": Family.GAUSSIAN,
    "sqz": Family.GAUSSIAN,
    "np": Family.NUMBER_PHASE,
    "numberphase": Family.NUMBER_PHASE,
    "superposition": Family.FOCK_SUPERPOSITION,
    "fock_sup": Family.FOCK_SUPERPOSITION,
    "vacuum": Family.COHERENT,
}

_FINITE = (Family.FOCK, Family.FOCK_SUPERPOSITION)
_INT_PARAMS = {"n", "parity", "spacing", "offset"}


def _family(tag):
    if isinstance(tag, Family):
        return tag
    key = str(tag).strip().lower().replace("-", "_")
    if key in _ALIASES:
        return _ALIASES[key]
    try:
        return Family(key)
    except ValueError:
        raise ValueError(f"unknown state family {tag!r}") from None


@dataclass(frozen=True)
class StateSpec:
    """Family tag plus named parameters."""

    family: Family
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        fam = _family(self.family)
        merged = dict(_DEFAULTS[fam])
        unknown = set(self.params) - set(merged)
        if unknown:
            raise ValueError(f"unknown parameters {sorted(unknown)} for family {fam.value}")
        merged.update(self.params)
        for key in _INT_PARAMS & set(merged):
            merged[key] = int(merged[key])
        if "levels" in merged:
            merged["levels"] = tuple(int(v) for v in merged["levels"])
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "params", merged)
        self._validate()

    def _validate(self):
        p = self.params
        fam = self.family
        if fam is Family.FOCK and p["n"] < 0:
            raise ValueError("Fock level must be non-negative")
        if fam is Family.GAUSSIAN and p["nbar"] < 0:
            raise ValueError("nbar must be non-negative")
        if fam in (Family.CAT, Family.MOON, Family.COMPASS) and p["size"] < 0:
            raise ValueError("size must be non-negative")
        if "parity" in p and p["parity"] not in (1, -1):
            raise ValueError("parity must be +1 or -1")
        if fam is Family.MOON and p["delta"] < 0:
            raise ValueError("moon delta must be non-negative")
        if fam is Family.GKP and not p["delta"] > 0:
            raise ValueError("GKP delta must be > 0")
        if fam is Family.NUMBER_PHASE:
            if not p["mu"] > 0:
                raise ValueError("mu must be > 0")
            if p["spacing"] < 1:
                raise ValueError("spacing must be >= 1")
            if not 0 <= p["offset"] < p["spacing"]:
                raise ValueError("offset must satisfy 0 <= offset < spacing")
        if fam is Family.FOCK_SUPERPOSITION:
            if not p["levels"] or min(p["levels"]) < 0:
                raise ValueError("levels must be non-empty and non-negative")

    def to_dict(self):
        params = {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.params.items()}
        return {"family": self.family.value, "params": params}

    @classmethod
    def from_dict(cls, record):
        return cls(record["family"], dict(record.get("params", {})))

    @classmethod
    def parse(cls, text):
        """Parse ``family[:value|key=value,...]``, e.g. ``fock:5`` or ``moon:size=3,delta=2``.

        Fock superposition levels are separated by ``+``: ``fock_superposition:6+10``.
        """
        fam_text, _, rest = text.partition(":")
        fam = _family(fam_text)
        params = {}
        first = next(iter(_DEFAULTS[fam]))
        for item in filter(None, (s.strip() for s in rest.split(","))):
            key, eq, value = item.partition("=")
            if not eq:
                key, value = first, item
            key = key.strip()
            if key == "levels":
                params[key] = tuple(int(v) for v in value.split("+"))
            else:
                params[key] = float(value)
        return cls(fam, params)

    def label(self):
        parts = []
        for k, v in self.params.items():
            parts.append(f"{k}={'+'.join(map(str, v))}" if isinstance(v, tuple) else f"{k}={v:.12g}")
        return f"{self.family.value}:{','.join(parts)}"


# ---------------------------------------------------------------------------
# amplitudes
# ---------------------------------------------------------------------------


def _log_power_over_sqrt_fact(n, size):
    # log(size^n / sqrt(n!)), with size = 0 handled by the caller
    return n * math.log(size) - 0.5 * gammaln(n + 1.0)


def _cat_like(n, size, parity, stride):
    """Amplitudes of sum_j (i^{4j/stride} size)^n over `stride` legs, real for these families."""
    amp = np.zeros(n.size)
    if size == 0.0:
        amp[0] = 1.0 if (stride == 2 and parity == 1) or stride == 4 else 0.0
        if stride == 2 and parity == -1:
            raise ValueError("odd cat of zero size does not exist")
        return amp
    if stride == 2:
        keep = (n % 2 == 0) if parity == 1 else (n % 2 == 1)
    else:
        keep = n % 4 == 0
    logs = _log_power_over_sqrt_fact(n[keep], size)
    amp[keep] = np.exp(logs - logs.max())
    return amp


def cat_mean_occupation(size, parity=1):
    x = size * size
    if x == 0:
        return 0.0
    return x * (math.tanh(x) if parity == 1 else 1.0 / math.tanh(x))


def compass_mean_occupation(size):
    x = size * size
    if x > 350:
        return x * (1.0 - 2.0 * math.exp(-x) * (math.sin(x) + math.cos(x)))
    return x * (math.sinh(x) - math.sin(x)) / (math.cosh(x) + math.cos(x))


def _moon_amp(n, size, delta, parity):
    amp = _cat_like(n, size, parity, 2)
    if size == 0.0 or delta == 0.0:
        return amp
    # envelope in amplitude is the square root of the occupation envelope
    centre = cat_mean_occupation(size, parity)
    logs = np.full(n.size, -np.inf)
    nz = amp != 0
    logs[nz] = np.log(amp[nz]) - delta * (n[nz] - centre) ** 2 / (4.0 * centre)
    out = np.zeros(n.size)
    out[nz] = np.exp(logs[nz] - logs[nz].max())
    return out


def _gaussian_amp(n, nbar):
    amp = np.zeros(n.size)
    if nbar == 0:
        amp[0] = 1.0
        return amp
    r = math.asinh(math.sqrt(nbar))
    m = n[n % 2 == 0] // 2
    logs = (
        m * math.log(math.tanh(r))
        + 0.5 * gammaln(2.0 * m + 1.0)
        - m * math.log(2.0)
        - gammaln(m + 1.0)
        - 0.5 * math.log(math.cosh(r))
    )
    amp[n % 2 == 0] = np.where(m % 2 == 0, 1.0, -1.0) * np.exp(logs)
    return amp


def _number_phase_amp(n, mu, spacing, offset):
    amp = np.zeros(n.size)
    sel = (n >= offset) & ((n - offset) % spacing == 0)
    k = (n[sel] - offset) // spacing
    slope = (mu / spacing**2) ** (1.0 / 3.0) * spacing
    amp[sel] = airy(slope * (k + 1.0) - AIRY_Z1)[0]
    return amp


def _coherent_amp(n, beta):
    amp = np.zeros(n.size)
    if beta == 0:
        amp[0] = 1.0
        return amp
    logs = n * math.log(abs(beta)) - 0.5 * gammaln(n + 1.0)
    amp[:] = np.exp(logs - 0.5 * beta * beta) * np.sign(beta) ** n
    return amp


def _hermite_project(x, f, nmax, dx):
    """Overlaps of f(x) with phi_n(x), n < nmax, in the x = (a + a^dag)/sqrt(2) convention."""
    out = np.empty(nmax)
    prev = np.zeros_like(x)
    cur = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    for k in range(nmax):
        out[k] = float(cur @ f) * dx
        nxt = math.sqrt(2.0 / (k + 1)) * x * cur - math.sqrt(k / (k + 1)) * prev
        prev, cur = cur, nxt
    return out


def _theta3(q):
    k = np.arange(1, 200)
    return 1.0 + 2.0 * float(np.sum(q ** (k * k)))


def gkp_mean_occupation_approx(delta):
    """Closed-form estimate of the finite-energy grid state's mean occupation."""
    q = math.exp(-2.0 * math.pi * delta * delta)
    k = np.arange(1, 200, dtype=float)
    series = float(np.sum(k * k * q ** (k * k)))
    return math.sinh(math.log(delta)) ** 2 + 2.0 * math.pi * series / _theta3(q)


def _gkp_wavefunction(x, delta):
    # comb terms with weight below 1e-18 are dropped
    kmax = int(math.ceil(math.sqrt(41.5 / (math.pi * delta * delta)))) + 1
    psi = np.zeros_like(x)
    norm = 1.0 / math.sqrt(delta * math.sqrt(math.pi))
    for k in range(-kmax, kmax + 1):
        w = math.exp(-k * k * math.pi * delta * delta)
        psi += w * norm * np.exp(-((x - math.sqrt(2.0 * math.pi) * k) ** 2) / (2.0 * delta * delta))
    return psi, kmax


def _gkp_amp(delta, tail_budget, dim=None):
    """Number amplitudes of the grid state by quadrature; returns (amp, lost_mass)."""
    mean = gkp_mean_occupation_approx(delta)
    nmax = int(dim) if dim is not None else int(12 * mean + 20 * math.sqrt(mean + 1) + 40)
    while True:
        _, kmax = _gkp_wavefunction(np.zeros(1), delta)
        reach = max(math.sqrt(2.0 * math.pi) * kmax + 8.0 * delta, math.sqrt(2.0 * nmax + 1) + 8.0)
        h = min(delta / 6.0, 0.4 / math.sqrt(2.0 * nmax + 1))
        npts = 2 * int(math.ceil(reach / h)) + 1
        x = np.linspace(-reach, reach, npts)
        dx = x[1] - x[0]
        psi, _ = _gkp_wavefunction(x, delta)
        total = float(np.sum(psi * psi) * dx)
        amp = _hermite_project(x, psi, nmax, dx) / math.sqrt(total)
        amp[1::2] = 0.0  # mirror symmetry of the comb
        lost = 1.0 - float(amp @ amp)
        if lost <= tail_budget or dim is not None:
            return amp, lost
        if nmax > MAX_DIM:
            raise RuntimeError(f"GKP projection did not converge within {nmax} levels")
        nmax = int(nmax * 1.5)


def _superposition_amp(n, levels):
    amp = np.zeros(n.size)
    for lv in levels:
        amp[lv] += 1.0
    return amp


def _size_hint(spec):
    p = spec.params
    fam = spec.family
    if fam is Family.FOCK:
        return p["n"] + 2
    if fam is Family.FOCK_SUPERPOSITION:
        return max(p["levels"]) + 2
    if fam is Family.GAUSSIAN:
        return int(40 + 30 * p["nbar"])
    if fam in (Family.CAT, Family.MOON, Family.COMPASS):
        x = p["size"] ** 2
        return int(x + 12 * math.sqrt(x + 1) + 40)
    if fam is Family.COHERENT:
        x = p["beta"] ** 2
        return int(x + 12 * math.sqrt(x + 1) + 30)
    if fam is Family.NUMBER_PHASE:
        slope = (p["mu"] / p["spacing"] ** 2) ** (1.0 / 3.0) * p["spacing"]
        kmax = (25.0 + AIRY_Z1) / slope
        return int(p["spacing"] * (kmax + 2) + p["offset"] + 4)
    raise ValueError(f"no size hint for {fam}")


def _raw(spec, dim):
    n = np.arange(dim)
    p = spec.params
    fam = spec.family
    if fam is Family.FOCK:
        amp = np.zeros(dim)
        amp[p["n"]] = 1.0
        return amp
    if fam is Family.GAUSSIAN:
        return _gaussian_amp(n, p["nbar"])
    if fam is Family.CAT:
        return _cat_like(n, p["size"], p["parity"], 2)
    if fam is Family.MOON:
        return _moon_amp(n, p["size"], p["delta"], p["parity"])
    if fam is Family.COMPASS:
        return _cat_like(n, p["size"], 1, 4)
    if fam is Family.NUMBER_PHASE:
        return _number_phase_amp(n, p["mu"], p["spacing"], p["offset"])
    if fam is Family.FOCK_SUPERPOSITION:
        return _superposition_amp(n, p["levels"])
    if fam is Family.COHERENT:
        return _coherent_amp(n, p["beta"])
    raise ValueError(f"no amplitude rule for {fam}")


def _cut(amp, tail_budget):
    prob = amp * amp
    tail = np.cumsum(prob[::-1])[::-1]  # tail[i] = mass at levels >= i
    beyond = np.append(tail[1:], 0.0)
    last = int(np.nonzero(beyond >= tail_budget)[0].max()) + 1 if np.any(beyond >= tail_budget) else 0
    return max(last + 1, 2)


def amplitudes(spec, trunc=None):
    """Normalised real Fock amplitudes of a pure probe state.

    With ``trunc.dim`` set the result has exactly that length and a
    ``ValueError`` reports a cutoff that would discard more than the tail
    budget; otherwise the length is the smallest one meeting the budget.
    """
    spec = spec if isinstance(spec, StateSpec) else StateSpec.parse(spec)
    trunc = default_policy() if trunc is None else trunc
    budget = trunc.tail_budget
    if spec.family is Family.GKP:
        amp, lost = _gkp_amp(spec.params["delta"], budget * 1e-2)
        amp = amp / np.linalg.norm(amp)
    else:
        dim = _size_hint(spec)
        while True:
            amp = _raw(spec, dim)
            norm = np.linalg.norm(amp)
            if norm == 0 or not np.isfinite(norm):
                raise ValueError(f"state {spec.label()} has no representable amplitudes")
            amp = amp / norm
            if spec.family in _FINITE:
                break
            if float(amp[-max(4, dim // 8):] @ amp[-max(4, dim // 8):]) < budget * 1e-3:
                break
            if dim > MAX_DIM:
                raise RuntimeError(f"state {spec.label()} needs more than {MAX_DIM} levels")
            dim = int(dim * 1.5) + 8
    need = _cut(amp, budget)
    if trunc.dim is None:
        out = amp[:need]
    else:
        if trunc.dim < need:
            lost = float(amp[trunc.dim:] @ amp[trunc.dim:])
            raise ValueError(
                f"truncation dim={trunc.dim} discards {lost:.2e} of {spec.label()}; "
                f"needs at least {need}"
            )
        out = np.zeros(trunc.dim)
        out[: min(amp.size, trunc.dim)] = amp[: trunc.dim]
    return out / np.linalg.norm(out)


def build(spec, trunc=None):
    """Pure-state projector of ``spec``."""
    return DensityMatrix.from_pure(amplitudes(spec, trunc))


def gkp_number_distribution(delta, trunc=None):
    """Occupation distribution of the finite-energy grid state by quadrature projection."""
    if not 0.0 < delta:
        raise ValueError("delta must be > 0")
    trunc = default_policy() if trunc is None else trunc
    if trunc.dim is None:
        amp = amplitudes(StateSpec(Family.GKP, {"delta": delta}), trunc)
        return NumberDistribution(amp * amp, trunc.tail_budget)
    amp, lost = _gkp_amp(delta, trunc.tail_budget, dim=trunc.dim)
    if lost > trunc.tail_budget:
        raise ValueError(f"truncation dim={trunc.dim} discards {lost:.2e} of the GKP state")
    return NumberDistribution(amp * amp, trunc.tail_budget)


def thermal(nbar, trunc=None):
    """Thermal (Gibbs) state with mean occupation ``nbar``."""
    trunc = default_policy() if trunc is None else trunc
    if nbar < 0:
        raise ValueError("nbar must be non-negative")
    if nbar == 0:
        return DensityMatrix.fock(0, trunc.dim or 2)
    x = nbar / (nbar + 1.0)
    need = int(math.ceil(math.log(trunc.tail_budget) / math.log(x))) + 1
    dim = trunc.dim or max(need, 2)
    if dim < need:
        raise ValueError(f"truncation dim={dim} too small for thermal nbar={nbar}")
    p = (1.0 - x) * x ** np.arange(dim)
    return DensityMatrix.from_diagonal(p)


def mixture(weighted):
    """Convex combination of ``(weight, DensityMatrix)`` pairs on a common cutoff."""
    weights = np.array([w for w, _ in weighted], dtype=float)
    if np.any(weights < 0) or weights.sum() <= 0:
        raise ValueError("weights must be non-negative with a positive sum")
    weights /= weights.sum()
    dim = max(r.dim for _, r in weighted)
    out = sum(w * r.padded(dim).elems for w, (_, r) in zip(weights, weighted))
    return DensityMatrix(out)


# ---------------------------------------------------------------------------
# occupation solvers
# ---------------------------------------------------------------------------


def _built_mean(spec, trunc):
    amp = amplitudes(spec, trunc)
    return float(np.arange(amp.size) @ (amp * amp))


def _bracket_solve(f, lo, hi, target, tol, increasing=True, log=False):
    g = (lambda u: f(math.exp(u)) - target) if log else (lambda u: f(u) - target)
    a, b = (math.log(lo), math.log(hi)) if log else (lo, hi)
    fa, fb = g(a), g(b)
    if fa * fb > 0:
        raise ValueError(
            f"target occupation {target} not bracketed by parameter range [{lo}, {hi}]"
        )
    root = brentq(g, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    return math.exp(root) if log else root


def solve_for_occupation(family, target_n, tol=1e-6, trunc=None, **fixed):
    """Spec of ``family`` whose built state has mean occupation ``target_n``.

    The family's monotone size parameter is solved by bracketing root finding;
    other parameters are taken from ``fixed``.
    """
    fam = _family(family)
    if target_n < 0:
        raise ValueError("target occupation must be non-negative")
    trunc = default_policy() if trunc is None else trunc

    def make(key, value):
        return StateSpec(fam, {**fixed, key: value})

    if fam is Family.FOCK:
        n = int(round(target_n))
        if abs(n - target_n) > tol:
            raise ValueError(f"Fock states have integer occupation, got {target_n}")
        spec = make("n", n)
    elif fam is Family.FOCK_SUPERPOSITION:
        spec = StateSpec(fam, fixed)
    elif fam is Family.GAUSSIAN:
        spec = make("nbar", float(target_n))
    elif fam is Family.COHERENT:
        spec = make("beta", math.sqrt(target_n))
    elif fam is Family.CAT:
        parity = int(fixed.get("parity", 1))
        hi = math.sqrt(target_n) + 2.0
        lo = 1e-8 if parity == 1 else 1e-3
        size = _bracket_solve(lambda s: cat_mean_occupation(s, parity), lo, hi, target_n, tol)
        spec = make("size", size)
    elif fam is Family.COMPASS:
        hi = math.sqrt(target_n) + 2.0
        size = _bracket_solve(compass_mean_occupation, 1e-3, hi, target_n, tol)
        spec = make("size", size)
    elif fam is Family.MOON:
        hi = math.sqrt(target_n) + 3.0
        size = _bracket_solve(lambda s: _built_mean(make("size", s), trunc), 1e-2, hi, target_n, tol)
        spec = make("size", size)
    elif fam is Family.NUMBER_PHASE:
        mu = _bracket_solve(
            lambda m: _built_mean(make("mu", m), trunc), 1e-4, 1e4, target_n, tol, log=True
        )
        spec = make("mu", mu)
    elif fam is Family.GKP:
        guess = _bracket_solve(gkp_mean_occupation_approx, 0.05, 5.0, target_n, tol)
        lo, hi = 0.8 * guess, 1.25 * guess
        delta = _bracket_solve(lambda d: _built_mean(make("delta", d), trunc), lo, hi, target_n, tol)
        spec = make("delta", delta)
    else:
        raise ValueError(f"cannot solve occupation for {fam}")
    got = _built_mean(spec, trunc)
    if abs(got - target_n) > tol:
        raise ValueError(f"{spec.label()} reaches <N>={got:.8g}, not {target_n} within {tol:g}")
    return spec


ZOO_LABELS = (
    "squeezed_vacuum",
    "even_cat",
    "number_phase_2",
    "gkp",
    "moon_1",
    "moon_2",
    "moon_3",
    "moon_4",
    "fock",
    "fock_6_10",
    "compass",
    "number_phase_4",
)


def zoo(target_n=8.0, tol=1e-4, trunc=None):
    """The twelve comparison states at a common mean occupation.

    Returns a list of ``(label, StateSpec)``.  The Fock entries need an
    integer target and the ``|6> + |10>`` entry exists only at 8.
    """
    requests = [
        ("squeezed_vacuum", Family.GAUSSIAN, {}),
        ("even_cat", Family.CAT, {"parity": 1}),
        ("number_phase_2", Family.NUMBER_PHASE, {"spacing": 2}),
        ("gkp", Family.GKP, {}),
        ("moon_1", Family.MOON, {"delta": 1.0}),
        ("moon_2", Family.MOON, {"delta": 2.0}),
        ("moon_3", Family.MOON, {"delta": 3.0}),
        ("moon_4", Family.MOON, {"delta": 4.0}),
        ("fock", Family.FOCK, {}),
        ("fock_6_10", Family.FOCK_SUPERPOSITION, {"levels": (6, 10)}),
        ("compass", Family.COMPASS, {}),
        ("number_phase_4", Family.NUMBER_PHASE, {"spacing": 4}),
    ]
    out = []
    for label, fam, fixed in requests:
        out.append((label, solve_for_occupation(fam, target_n, tol, trunc, **fixed)))
    return out
