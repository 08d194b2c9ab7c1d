"""Single-site heat-bath dynamics for the p-spin Curie-Weiss model.

A step picks a site uniformly at random and resamples its spin to +1 with
probability ``f(c) = (1 + tanh(p*beta*c^(p-1) + h)) / 2`` where ``c`` is
the current magnetization (including the chosen site).  The magnetization
sum is then itself a birth-death chain on ``{-N, -N+2, ..., N}`` whose
exact transition triple is exposed by :func:`mag_kernel`.

Every step consumes exactly two uniforms in fixed order (site, spin), so
two chains advanced with shared draws form the grand coupling and runs are
bitwise reproducible from the seed.  The restricted variants reject
proposals that cross a magnetization floor (or leave a window), keeping
the current state instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .potential import (
    CURVATURE_TOL,
    DomainError,
    ModelParams,
    find_stationary_points,
    local_maxima,
)

_U64 = (1 << 64) - 1


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """Philox generator for (seed, key...): independent, reproducible streams."""
    ss = np.random.SeedSequence(entropy=int(seed) & _U64,
                                spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class SpinConfig:
    """A spin configuration with cached magnetization sum."""

    spins: np.ndarray  # int8 array over {-1, +1}
    sum: int

    @classmethod
    def from_spins(cls, spins) -> "SpinConfig":
        arr = np.asarray(spins, dtype=np.int8)
        if arr.ndim != 1 or not np.all(np.abs(arr) == 1):
            raise DomainError("spins must be a 1-D array over {-1, +1}")
        return cls(spins=arr, sum=int(arr.sum()))

    @classmethod
    def all_plus(cls, N: int) -> "SpinConfig":
        return cls(spins=np.ones(N, dtype=np.int8), sum=N)

    @classmethod
    def all_minus(cls, N: int) -> "SpinConfig":
        return cls(spins=-np.ones(N, dtype=np.int8), sum=-N)

    @classmethod
    def from_magnetization(cls, N: int, k: int) -> "SpinConfig":
        """Deterministic config at sum k: the first (N+k)/2 sites are +1.

        Site labels are exchangeable, so the choice is irrelevant for any
        magnetization-level observable.
        """
        if (N + k) % 2 != 0 or abs(k) > N:
            raise DomainError(f"sum {k} unreachable for N={N}")
        n_plus = (N + k) // 2
        spins = -np.ones(N, dtype=np.int8)
        spins[:n_plus] = 1
        return cls(spins=spins, sum=k)

    @property
    def N(self) -> int:
        return self.spins.shape[0]

    def copy(self) -> "SpinConfig":
        return SpinConfig(spins=self.spins.copy(), sum=self.sum)

    def validate(self) -> None:
        n = self.N
        if not np.all(np.abs(self.spins) == 1):
            raise DomainError("spins must be +-1")
        if self.sum != int(self.spins.sum()):
            raise DomainError("cached sum out of sync")
        if abs(self.sum) > n or (self.sum + n) % 2 != 0:
            raise DomainError("sum violates parity")


@dataclass(frozen=True)
class MagKernelRow:
    """Exact one-step transition triple of the magnetization sum at level k."""

    k: int
    p_up: float
    p_down: float
    p_stay: float


def nearest_level(N: int, m: float) -> int:
    """Closest reachable magnetization sum to N*m (parity of N)."""
    k = int(round(N * m))
    if (k + N) % 2 != 0:
        k += 1 if N * m >= k else -1
    return max(-N, min(N, k))


def flip_up_probability(params: ModelParams, c):
    """f(c) = (1 + tanh(p*beta*c^(p-1) + h)) / 2 = sigmoid(2*d(c))."""
    p, beta, h = params.p, params.beta, params.h
    c = np.asarray(c, dtype=float)
    out = expit(2.0 * (p * beta * c ** (p - 1) + h))
    return out if out.ndim else float(out)


def mag_kernel(params: ModelParams, N: int, k: int) -> MagKernelRow:
    """Exact birth-death transition triple at magnetization sum k.

    p_up = (1-c)/2 * sigmoid(+2d), p_down = (1+c)/2 * sigmoid(-2d) with
    d = p*beta*c^(p-1) + h and c = k/N; the sigmoid keeps both factors
    stable for any field strength.
    """
    if abs(k) > N or (k + N) % 2 != 0:
        raise DomainError(f"level {k} invalid for N={N} (parity or range)")
    c = k / N
    d = params.p * params.beta * c ** (params.p - 1) + params.h
    p_up = 0.5 * (1.0 - c) * float(expit(2.0 * d))
    p_down = 0.5 * (1.0 + c) * float(expit(-2.0 * d))
    return MagKernelRow(k=k, p_up=p_up, p_down=p_down,
                        p_stay=1.0 - p_up - p_down)


def kernel_arrays(params: ModelParams, N: int):
    """(up, down, stay) over all levels k = -N, -N+2, ..., N."""
    ks = np.arange(-N, N + 1, 2, dtype=float)
    c = ks / N
    d = params.p * params.beta * c ** (params.p - 1) + params.h
    up = 0.5 * (1.0 - c) * expit(2.0 * d)
    down = 0.5 * (1.0 + c) * expit(-2.0 * d)
    return up, down, 1.0 - up - down


def _resolve_start(N: int, start) -> SpinConfig:
    """Accepts 'all_plus'/'all_minus', an integer sum, or a SpinConfig."""
    if isinstance(start, SpinConfig):
        out = start.copy()
        out.validate()
        return out
    if start == "all_plus":
        return SpinConfig.all_plus(N)
    if start == "all_minus":
        return SpinConfig.all_minus(N)
    if isinstance(start, (int, np.integer)):
        return SpinConfig.from_magnetization(N, int(start))
    raise DomainError(f"unrecognized start {start!r}")


def step_full(state: SpinConfig, params: ModelParams,
              rng: np.random.Generator) -> SpinConfig:
    """One heat-bath step in place; consumes exactly two uniforms."""
    u_site, u_spin = rng.random(2)
    n = state.N
    i = int(u_site * n)
    c = state.sum / n
    new = np.int8(1) if u_spin <= flip_up_probability(params, c) else np.int8(-1)
    delta = int(new) - int(state.spins[i])
    state.spins[i] = new
    state.sum += delta
    return state


def step_restricted(state: SpinConfig, params: ModelParams, threshold: int,
                    rng: np.random.Generator) -> SpinConfig:
    """Floor-restricted step: reject proposals with sum below threshold."""
    if state.sum < threshold:
        raise DomainError(f"state sum {state.sum} below threshold {threshold}")
    u_site, u_spin = rng.random(2)
    n = state.N
    i = int(u_site * n)
    c = state.sum / n
    new = np.int8(1) if u_spin <= flip_up_probability(params, c) else np.int8(-1)
    delta = int(new) - int(state.spins[i])
    if state.sum + delta < threshold:
        return state
    state.spins[i] = new
    state.sum += delta
    return state


def restricted_threshold(params: ModelParams, N: int) -> int:
    """Magnetization floor ceil(N*m_minus) for the restricted dynamics.

    m_plus is the largest local maximizer of H; m_minus the largest
    stationary point strictly below it.  With a single stationary point
    there is nothing to cut off and the floor collapses to -N.
    """
    points = find_stationary_points(params)
    maxima = local_maxima(points)
    m_plus = maxima[-1].m
    below = [s.m for s in points if s.m < m_plus]
    if not below:
        return -N
    return math.ceil(N * max(below))


@dataclass(frozen=True)
class RunSpec:
    params: ModelParams
    N: int
    start: object = "all_plus"
    steps: int = 0
    seed: int = 0
    record_every: int = 1
    threshold: int | None = None

    def __post_init__(self):
        if self.steps < 0 or self.record_every < 1:
            raise DomainError("steps must be >= 0 and record_every >= 1")
        if self.threshold is not None and abs(self.threshold) > self.N:
            raise DomainError("threshold outside [-N, N]")


@dataclass
class Trace:
    times: np.ndarray
    mag_sums: np.ndarray


def run_chain(spec: RunSpec) -> Trace:
    """Run one chain, recording the magnetization sum every record_every steps."""
    params, N = spec.params, spec.N
    state = _resolve_start(N, spec.start)
    rng = rng_stream(spec.seed, 0)
    thr = spec.threshold
    if thr is not None and state.sum < thr:
        raise DomainError("start violates the restriction")
    times = [0]
    sums = [state.sum]
    for t in range(1, spec.steps + 1):
        if thr is None:
            step_full(state, params, rng)
        else:
            step_restricted(state, params, thr, rng)
        if t % spec.record_every == 0:
            times.append(t)
            sums.append(state.sum)
    return Trace(times=np.asarray(times), mag_sums=np.asarray(sums))


@dataclass(frozen=True)
class CouplingSpec:
    params: ModelParams
    N: int
    start_x: object = "all_plus"
    start_y: object = "all_minus"
    steps: int = 0
    seed: int = 0
    record_every: int = 1


@dataclass
class CouplingTrace:
    times: np.ndarray
    hamming: np.ndarray
    untouched: np.ndarray
    mags_x: np.ndarray
    mags_y: np.ndarray
    coalesced_at: int | None


def run_coupling(spec: CouplingSpec) -> CouplingTrace:
    """Advance two chains under shared (site, uniform) draws.

    Records the Hamming distance, the count of never-selected sites, and
    both magnetization sums.  Once the chains meet they stay together.
    """
    params, N = spec.params, spec.N
    x = _resolve_start(N, spec.start_x)
    y = _resolve_start(N, spec.start_y)
    if x.N != y.N:
        raise DomainError("coupled starts must have equal N")
    rng = rng_stream(spec.seed, 0)

    hamming = int(np.count_nonzero(x.spins != y.spins))
    never = np.ones(N, dtype=bool)
    untouched = N
    coalesced_at = 0 if hamming == 0 else None

    times, hams, unt, mx, my = [0], [hamming], [untouched], [x.sum], [y.sum]
    for t in range(1, spec.steps + 1):
        u_site, u_spin = rng.random(2)
        i = int(u_site * N)
        if never[i]:
            never[i] = False
            untouched -= 1
        differed = x.spins[i] != y.spins[i]
        new_x = np.int8(1) if u_spin <= flip_up_probability(params, x.sum / N) else np.int8(-1)
        new_y = np.int8(1) if u_spin <= flip_up_probability(params, y.sum / N) else np.int8(-1)
        x.sum += int(new_x) - int(x.spins[i])
        y.sum += int(new_y) - int(y.spins[i])
        x.spins[i] = new_x
        y.spins[i] = new_y
        differs = new_x != new_y
        if differed and not differs:
            hamming -= 1
        elif differs and not differed:
            hamming += 1
        if hamming == 0 and coalesced_at is None:
            coalesced_at = t
        if t % spec.record_every == 0:
            times.append(t)
            hams.append(hamming)
            unt.append(untouched)
            mx.append(x.sum)
            my.append(y.sum)
    return CouplingTrace(times=np.asarray(times), hamming=np.asarray(hams),
                         untouched=np.asarray(unt), mags_x=np.asarray(mx),
                         mags_y=np.asarray(my), coalesced_at=coalesced_at)


def trace_csv(trace: Trace) -> str:
    """CSV `t,mag_sum` for a single-chain trace."""
    lines = ["t,mag_sum"]
    for i in range(len(trace.times)):
        lines.append(f"{int(trace.times[i])},{int(trace.mag_sums[i])}")
    return "\n".join(lines) + "\n"


def coupling_csv(trace: CouplingTrace) -> str:
    """CSV `t,mag_sum,hamming,untouched`; mag_sum is the first chain's."""
    lines = ["t,mag_sum,hamming,untouched"]
    for i in range(len(trace.times)):
        lines.append(f"{int(trace.times[i])},{int(trace.mags_x[i])},"
                     f"{int(trace.hamming[i])},{int(trace.untouched[i])}")
    return "\n".join(lines) + "\n"


# -- vectorized replica engines ---------------------------------------------


def _level_tables(params: ModelParams, N: int):
    """Per-level minus-site probability and spin-up probability tables."""
    ks = np.arange(-N, N + 1, 2, dtype=float)
    c = ks / N
    p_minus = 0.5 * (1.0 - c)
    f_up = expit(2.0 * (params.p * params.beta * c ** (params.p - 1) + params.h))
    return p_minus, f_up


def simulate_mag_replicas(params: ModelParams, N: int, start_ks: np.ndarray,
                          steps: int, rng: np.random.Generator,
                          lo: int | None = None, hi: int | None = None,
                          record_every: int | None = None):
    """Advance R magnetization chains for `steps` steps (law-exact).

    The site draw only matters through whether the chosen site carries -1,
    which happens with probability (N-k)/(2N); the spin draw follows the
    same discipline as the full-spin chain.  Optional lo/hi bounds give the
    floor- or window-restricted dynamics by rejection.

    Returns the final sums, or (times, sums_matrix) when record_every is set.
    """
    ks = np.array(start_ks, dtype=np.int64)
    R = ks.shape[0]
    p_minus, f_up = _level_tables(params, N)
    recorded = None
    if record_every is not None:
        recorded = [(0, ks.copy())]
    chunk = max(1, min(steps, (1 << 22) // max(R, 1)))
    t = 0
    while t < steps:
        n_t = min(chunk, steps - t)
        u = rng.random((n_t, 2, R))
        for s in range(n_t):
            t += 1
            idx = (ks + N) >> 1
            is_minus = u[s, 0] < p_minus[idx]
            up = u[s, 1] <= f_up[idx]
            delta = (is_minus & up) * 2 - (~is_minus & ~up) * 2
            nk = ks + delta
            if lo is not None:
                nk = np.where(nk < lo, ks, nk)
            if hi is not None:
                nk = np.where(nk > hi, ks, nk)
            ks = nk
            if recorded is not None and t % record_every == 0:
                recorded.append((t, ks.copy()))
    if recorded is not None:
        times = np.array([r[0] for r in recorded])
        return times, np.stack([r[1] for r in recorded])
    return ks


def simulate_spin_replicas(params: ModelParams, N: int, spins0: np.ndarray,
                           steps: int, rng: np.random.Generator,
                           lo: int | None = None, hi: int | None = None):
    """Advance R full-spin chains for `steps` steps; returns (spins, sums).

    spins0 has shape (R, N); the same two-uniform draw discipline as
    step_full, vectorized across replicas.
    """
    spins = np.array(spins0, dtype=np.int8)
    R = spins.shape[0]
    sums = spins.sum(axis=1, dtype=np.int64)
    rows = np.arange(R)
    _, f_up = _level_tables(params, N)
    chunk = max(1, min(steps, (1 << 22) // max(R, 1)))
    t = 0
    while t < steps:
        n_t = min(chunk, steps - t)
        u = rng.random((n_t, 2, R))
        for s in range(n_t):
            t += 1
            sites = (u[s, 0] * N).astype(np.int64)
            up = u[s, 1] <= f_up[(sums + N) >> 1]
            new = np.where(up, 1, -1).astype(np.int8)
            old = spins[rows, sites]
            delta = (new - old).astype(np.int64)
            n_sums = sums + delta
            ok = np.ones(R, dtype=bool)
            if lo is not None:
                ok &= n_sums >= lo
            if hi is not None:
                ok &= n_sums <= hi
            rows_ok = rows[ok]
            spins[rows_ok, sites[ok]] = new[ok]
            sums = np.where(ok, n_sums, sums)
    return spins, sums


# -- metastable sampler ------------------------------------------------------


@dataclass(frozen=True)
class MetastableSpec:
    params: ModelParams
    N: int
    epsilon: float | None = None  # window half-width; None = automatic
    burn_steps: int | None = None  # None = ceil(10 N log N)
    seed: int = 0
    require_coexistence: bool = False
    height_tol: float = 1e-10


@dataclass
class SamplerReport:
    maximizers: list            # magnetization locations of the windows
    weights: list               # window selection probabilities
    windows: list               # (lo_sum, hi_sum) per window
    burn_steps: int
    acceptance_rates: list      # fraction of proposals not window-rejected
    final_sums: list
    chosen: int

    def to_dict(self) -> dict:
        return {
            "maximizers": list(self.maximizers),
            "weights": list(self.weights),
            "windows": [list(w) for w in self.windows],
            "burn_steps": self.burn_steps,
            "acceptance_rates": list(self.acceptance_rates),
            "final_sums": list(self.final_sums),
            "chosen": self.chosen,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SamplerReport":
        return cls(maximizers=list(d["maximizers"]), weights=list(d["weights"]),
                   windows=[tuple(w) for w in d["windows"]],
                   burn_steps=d["burn_steps"],
                   acceptance_rates=list(d["acceptance_rates"]),
                   final_sums=list(d["final_sums"]), chosen=d["chosen"])


def _metastable_setup(spec: MetastableSpec):
    """Window centers, bounds and selection weights for the sampler."""
    params, N = spec.params, spec.N
    if spec.epsilon is not None and not spec.epsilon > 0:
        raise DomainError(f"window half-width must be positive, got {spec.epsilon}")
    if spec.burn_steps is not None and spec.burn_steps < 0:
        raise DomainError("burn_steps must be non-negative")
    points = find_stationary_points(params)
    maxima = local_maxima(points)
    top = max(s.H_value for s in maxima)
    globals_ = [s for s in maxima if top - s.H_value <= spec.height_tol]
    if spec.require_coexistence and len(globals_) < 2:
        raise DomainError("not on the global-coexistence locus")
    for s in globals_:
        if abs(s.H2_value) <= CURVATURE_TOL:
            raise DomainError(
                "degenerate global maximizer: no Gaussian window weight exists"
            )

    eps = spec.epsilon
    if eps is None:
        eps = 0.1
        for s in globals_:
            others = [q.m for q in points if q.m != s.m]
            if others:
                eps = min(eps, 0.5 * min(abs(s.m - o) for o in others))
    windows = []
    for s in globals_:
        lo = math.ceil(N * (s.m - eps))
        hi = math.floor(N * (s.m + eps))
        windows.append((lo, hi))
    for (lo1, hi1), (lo2, hi2) in zip(windows, windows[1:]):
        if hi1 >= lo2:
            raise DomainError("metastable windows overlap; reduce epsilon")

    raw = [((s.m**2 - 1.0) * s.H2_value) ** -0.5 for s in globals_]
    total = sum(raw)
    weights = [w / total for w in raw]
    burn = spec.burn_steps
    if burn is None:
        burn = int(math.ceil(10.0 * N * math.log(N)))
    return globals_, windows, weights, burn


def metastable_sample(spec: MetastableSpec) -> tuple[SpinConfig, SamplerReport]:
    """Draw an approximate sample by mixing window-restricted chains.

    One window-restricted chain per global maximizer runs for the burn-in
    horizon; a window index is then drawn with Gaussian-mass weights
    proportional to ((m^2 - 1) H''(m))^{-1/2} and that chain's final
    configuration is returned.
    """
    params, N = spec.params, spec.N
    globals_, windows, weights, burn = _metastable_setup(spec)

    finals = []
    acc_rates = []
    for i, (s, (lo, hi)) in enumerate(zip(globals_, windows)):
        start = SpinConfig.from_magnetization(N, nearest_level(N, s.m))
        if not lo <= start.sum <= hi:
            raise DomainError("window start outside window")
        rng = rng_stream(spec.seed, 1, i)
        state = start
        rejected = 0
        for _ in range(burn):
            u_site, u_spin = rng.random(2)
            j = int(u_site * N)
            c = state.sum / N
            new = np.int8(1) if u_spin <= flip_up_probability(params, c) else np.int8(-1)
            delta = int(new) - int(state.spins[j])
            if lo <= state.sum + delta <= hi:
                state.spins[j] = new
                state.sum += delta
            else:
                rejected += 1
        finals.append(state)
        acc_rates.append(1.0 - rejected / burn if burn else 1.0)

    rng_v = rng_stream(spec.seed, 2)
    chosen = int(rng_v.choice(len(weights), p=weights))
    report = SamplerReport(
        maximizers=[s.m for s in globals_],
        weights=weights,
        windows=windows,
        burn_steps=burn,
        acceptance_rates=acc_rates,
        final_sums=[st.sum for st in finals],
        chosen=chosen,
    )
    return finals[chosen], report


def metastable_sample_sums(spec: MetastableSpec, n_samples: int) -> np.ndarray:
    """Vectorized sampler: final magnetization sums of n_samples draws.

    Law-equivalent to repeated metastable_sample calls restricted to the
    magnetization observable (each replica runs its own window chains).
    """
    params, N = spec.params, spec.N
    globals_, windows, weights, burn = _metastable_setup(spec)

    finals = np.empty((len(globals_), n_samples), dtype=np.int64)
    for i, (s, (lo, hi)) in enumerate(zip(globals_, windows)):
        k0 = nearest_level(N, s.m)
        rng = rng_stream(spec.seed, 1, i)
        start = np.full(n_samples, k0, dtype=np.int64)
        finals[i] = simulate_mag_replicas(params, N, start, burn, rng,
                                          lo=lo, hi=hi)
    rng_v = rng_stream(spec.seed, 2)
    chosen = rng_v.choice(len(globals_), size=n_samples, p=np.asarray(weights))
    return finals[chosen, np.arange(n_samples)]
