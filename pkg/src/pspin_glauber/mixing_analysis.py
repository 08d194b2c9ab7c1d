"""Exact mixing analysis on the magnetization chain.

The magnetization sum of the dynamics is a birth-death chain on the N+1
levels ``{-N, -N+2, ..., N}``.  From a constant (hence exchangeable) start
the conditional law of the full chain given the magnetization trajectory
is uniform on each level set, and the Gibbs measure is uniform on level
sets too, so the total-variation distance of the full chain to the Gibbs
measure equals the total-variation distance between the level laws.  This
module evolves level laws exactly (one tridiagonal pushforward per step)
and derives mixing times, conductance cuts and hitting times from them.

Worst-start convention: mixing times maximize the TV crossing over the
all-plus and all-minus starts (the extreme levels).  Maximality over all
2^N starts is a documented convention, validated against a dense oracle at
small N, not a theorem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .dynamics import (
    kernel_arrays,
    restricted_threshold,
    rng_stream,
    simulate_mag_replicas,
)
from .potential import DomainError, ModelParams

EXACT = "ExactProjected"
MONTE_CARLO = "MonteCarlo"


@dataclass
class MagDistribution:
    """Exact stationary magnetization law: level weights in log space."""

    N: int
    ks: np.ndarray          # magnetization sums, ascending
    log_weights: np.ndarray  # log(level-set size) + N*(beta c^p + h c)
    log_Z_shifted: float     # log sum of exp(log_weights - max shift)
    probs: np.ndarray


def stationary_mag(params: ModelParams, N: int) -> MagDistribution:
    """Push the Gibbs measure to magnetization levels, exactly in log space.

    log w(k) = log C(N, (N+k)/2) + N*(beta*(k/N)^p + h*(k/N)); probabilities
    are normalized by max shift + log-sum-exp.
    """
    if N < 1:
        raise DomainError(f"N must be positive, got {N}")
    ks = np.arange(-N, N + 1, 2, dtype=np.int64)
    n_plus = (N + ks) // 2
    c = ks / N
    log_binom = gammaln(N + 1) - gammaln(n_plus + 1) - gammaln(N - n_plus + 1)
    log_w = log_binom + N * (params.beta * c**params.p + params.h * c)
    shift = log_w.max()
    w = np.exp(log_w - shift)
    z = w.sum()
    return MagDistribution(N=N, ks=ks, log_weights=log_w,
                           log_Z_shifted=float(np.log(z)), probs=w / z)


def condition_at_least(dist: MagDistribution, k_min: int) -> MagDistribution:
    """The stationary law conditioned on {sum >= k_min}.

    k_min <= -N is a no-op returning the same object (bit-identical law).
    """
    if k_min <= -dist.N:
        return dist
    keep = dist.ks >= k_min
    if not keep.any():
        raise DomainError(f"no levels at or above {k_min}")
    log_w = dist.log_weights[keep]
    shift = log_w.max()
    w = np.exp(log_w - shift)
    z = w.sum()
    return MagDistribution(N=dist.N, ks=dist.ks[keep], log_weights=log_w,
                           log_Z_shifted=float(np.log(z)), probs=w / z)


@dataclass
class TVCurve:
    start_k: int
    ts: np.ndarray
    tv: np.ndarray
    capped: bool


@dataclass
class MixingReport:
    eps: float
    t_mix: int | None      # None when capped
    capped: bool
    cap: int
    method: str
    starts_examined: list
    t_by_start: dict
    stat_error: float | None = None

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "t_mix": self.t_mix,
            "capped": self.capped,
            "cap": self.cap,
            "method": self.method,
            "starts": list(self.starts_examined),
            "t_by_start": {str(k): v for k, v in self.t_by_start.items()},
            "stat_error": self.stat_error,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MixingReport":
        return cls(eps=d["eps"], t_mix=d["t_mix"], capped=d["capped"],
                   cap=d["cap"], method=d["method"],
                   starts_examined=list(d["starts"]),
                   t_by_start={int(k): v for k, v in d["t_by_start"].items()},
                   stat_error=d.get("stat_error"))


def _restricted_kernel(params: ModelParams, N: int, k_min: int):
    """Tridiagonal kernel on levels >= k_min with the floor rejection folded
    into the diagonal.  k_min <= -N reproduces the full kernel bit-exactly
    (the bottom level already has zero down-rate)."""
    up, down, stay = kernel_arrays(params, N)
    if k_min <= -N:
        return up, down, stay, 0
    i0 = (k_min + N + 1) // 2  # first index with k >= k_min
    up = up[i0:].copy()
    down = down[i0:].copy()
    stay = stay[i0:].copy()
    stay[0] += down[0]
    down[0] = 0.0
    return up, down, stay, i0


def _push_forward(mu, up, down, stay):
    out = mu * stay
    out[1:] += mu[:-1] * up[:-1]
    out[:-1] += mu[1:] * down[1:]
    return out


def tv_curve(params: ModelParams, N: int, start_k: int, t_max: int,
             eps_stop: float = 0.0, k_min: int | None = None) -> TVCurve:
    """Exact TV distance to the stationary law from a point-mass start.

    Evolves the level law one tridiagonal pushforward per step, recording
    TV each step; stops once TV <= eps_stop.  With k_min the boundary-
    rejected kernel and the conditioned stationary law are used instead.
    """
    if abs(start_k) > N or (start_k + N) % 2 != 0:
        raise DomainError(f"start level {start_k} invalid for N={N}")
    if t_max < 0:
        raise DomainError("t_max must be >= 0")
    dist = stationary_mag(params, N)
    if k_min is None:
        k_min = -N
    if start_k < k_min:
        raise DomainError("start below the restriction floor")
    up, down, stay, i0 = _restricted_kernel(params, N, k_min)
    pi = condition_at_least(dist, k_min).probs

    mu = np.zeros_like(pi)
    mu[(start_k + N) // 2 - i0] = 1.0
    ts, tvs = [], []
    capped = True
    for t in range(t_max + 1):
        tv = 0.5 * float(np.abs(mu - pi).sum())
        ts.append(t)
        tvs.append(tv)
        if tv <= eps_stop:
            capped = False
            break
        if t < t_max:
            mu = _push_forward(mu, up, down, stay)
            mu /= mu.sum()  # counter rounding drift over long horizons
    else:
        capped = tvs[-1] > eps_stop
    return TVCurve(start_k=start_k, ts=np.asarray(ts), tv=np.asarray(tvs),
                   capped=capped)


def _mc_tv_crossing(params, N, start_k, eps, cap, k_min, replicas, seed,
                    check_every):
    """First checkpoint where the replica-histogram TV drops to eps."""
    dist = condition_at_least(stationary_mag(params, N), max(k_min, -N))
    lo = None if k_min <= -N else k_min
    rng = rng_stream(seed, 3, (start_k + N) // 2)
    ks = np.full(replicas, start_k, dtype=np.int64)
    idx_of = {int(k): i for i, k in enumerate(dist.ks)}
    t = 0
    while t < cap:
        step = min(check_every, cap - t)
        ks = simulate_mag_replicas(params, N, ks, step, rng, lo=lo)
        t += step
        hist = np.zeros_like(dist.probs)
        vals, counts = np.unique(ks, return_counts=True)
        for v, ct in zip(vals.tolist(), counts.tolist()):
            hist[idx_of[v]] = ct / replicas
        tv = 0.5 * float(np.abs(hist - dist.probs).sum())
        if tv <= eps:
            se = 0.5 * float(np.sqrt(np.sum(hist * (1 - hist)) / replicas))
            return t, se
    return None, None


def mixing_time(params: ModelParams, N: int, eps: float, cap: int,
                mode: str = EXACT, seed: int = 0, replicas: int = 10_000,
                check_every: int | None = None,
                k_min: int | None = None,
                starts: tuple | None = None) -> MixingReport:
    """Mixing time at level eps: worst TV crossing over the examined starts.

    ExactProjected evolves the level law exactly; MonteCarlo estimates TV
    from replica histograms on a checkpoint schedule (upward-biased near
    the crossing, reported with a rough multinomial standard error).
    """
    if not 0.0 < eps < 0.5:
        raise DomainError(f"eps must lie in (0, 1/2), got {eps}")
    if cap < 1:
        raise DomainError("cap must be >= 1")
    if k_min is None:
        k_min = -N
    if starts is None:
        starts = (N, -N) if k_min <= -N else (k_min + (k_min + N) % 2, N)
    if mode not in (EXACT, MONTE_CARLO):
        raise DomainError(f"unknown mode {mode!r}")

    t_by_start: dict[int, int | None] = {}
    se = None
    for start_k in starts:
        if mode == EXACT:
            curve = tv_curve(params, N, start_k, cap, eps_stop=eps, k_min=k_min)
            t_by_start[start_k] = None if curve.capped else int(curve.ts[-1])
        else:
            if check_every is None:
                check_every = max(1, N // 4)
            t_cross, se = _mc_tv_crossing(params, N, start_k, eps, cap, k_min,
                                          replicas, seed, check_every)
            t_by_start[start_k] = t_cross
    capped = any(v is None for v in t_by_start.values())
    t_mix = None if capped else max(t_by_start.values())
    return MixingReport(eps=eps, t_mix=t_mix, capped=capped, cap=cap,
                        method=mode, starts_examined=list(starts),
                        t_by_start=t_by_start, stat_error=se)


def restricted_mixing_time(params: ModelParams, N: int, eps: float, cap: int,
                           mode: str = EXACT, seed: int = 0,
                           replicas: int = 10_000,
                           check_every: int | None = None) -> MixingReport:
    """Mixing time of the floor-restricted dynamics to its conditioned law.

    The floor comes from restricted_threshold; with no restriction active
    the result is bit-identical to mixing_time (same kernel, same law).
    Worst start among {floor level, all-plus}.
    """
    k_min = restricted_threshold(params, N)
    return mixing_time(params, N, eps, cap, mode=mode, seed=seed,
                       replicas=replicas, check_every=check_every,
                       k_min=k_min)


@dataclass
class CutStat:
    k: int              # boundary level of the interval cut
    side: str           # "leq": A = {levels <= k}; "geq": A = {levels >= k}
    log_Q: float        # log pi(k) + log p_out(k) across the boundary
    log_pi_A: float
    log_ratio: float


@dataclass
class BottleneckReport:
    cuts: list
    phi_star: float
    log_phi_star: float
    argmin_k: int

    def to_dict(self) -> dict:
        return {
            "phi_star": self.phi_star,
            "log_phi_star": self.log_phi_star,
            "argmin_k": self.argmin_k,
            "cuts": [
                {"k": c.k, "side": c.side, "log_Q": c.log_Q,
                 "log_pi_A": c.log_pi_A, "log_ratio": c.log_ratio}
                for c in self.cuts
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BottleneckReport":
        cuts = [CutStat(k=c["k"], side=c["side"], log_Q=c["log_Q"],
                        log_pi_A=c["log_pi_A"], log_ratio=c["log_ratio"])
                for c in d["cuts"]]
        return cls(cuts=cuts, phi_star=d["phi_star"],
                   log_phi_star=d["log_phi_star"], argmin_k=d["argmin_k"])


def bottleneck(params: ModelParams, N: int) -> BottleneckReport:
    """Bottleneck (conductance) scan over interval magnetization cuts.

    For A = {levels <= k} only the top boundary level carries flow out, so
    Q(A, A^c) = pi(k) p_up(k); for A = {levels >= k} it is pi(k) p_down(k).
    Both families are scanned (whichever well is metastable, its interval
    cut is on one of the two sides); everything is computed in log space
    to survive exponentially small masses.  phi_star minimizes Q/pi(A)
    over cuts with pi(A) <= 1/2.
    """
    if N < 2:
        raise DomainError("N must be >= 2")
    dist = stationary_mag(params, N)
    up, down, _ = kernel_arrays(params, N)
    log_pi = dist.log_weights - (dist.log_weights.max() + dist.log_Z_shifted)
    log_cum_lo = np.logaddexp.accumulate(log_pi)
    log_cum_hi = np.logaddexp.accumulate(log_pi[::-1])[::-1]

    cuts = []
    best = None
    with np.errstate(divide="ignore"):
        log_up = np.log(up)
        log_down = np.log(down)
    n = len(dist.ks)
    for i in range(n - 1):  # A = {<= k}, cut below the top level
        cut = CutStat(k=int(dist.ks[i]), side="leq",
                      log_Q=float(log_pi[i] + log_up[i]),
                      log_pi_A=float(log_cum_lo[i]),
                      log_ratio=float(log_pi[i] + log_up[i] - log_cum_lo[i]))
        cuts.append(cut)
    for i in range(1, n):  # A = {>= k}, cut above the bottom level
        cut = CutStat(k=int(dist.ks[i]), side="geq",
                      log_Q=float(log_pi[i] + log_down[i]),
                      log_pi_A=float(log_cum_hi[i]),
                      log_ratio=float(log_pi[i] + log_down[i] - log_cum_hi[i]))
        cuts.append(cut)
    for cut in cuts:
        if cut.log_pi_A <= math.log(0.5) and (best is None or cut.log_ratio < best.log_ratio):
            best = cut
    if best is None:
        raise DomainError("no interval cut with stationary mass <= 1/2")
    return BottleneckReport(cuts=cuts, phi_star=math.exp(best.log_ratio),
                            log_phi_star=best.log_ratio, argmin_k=best.k)


@dataclass
class HittingReport:
    target: int
    mean_steps: float
    replicas: int
    std_err: float


def hitting_time(params: ModelParams, N: int, start_k: int, target_k: int,
                 k_min: int | None = None, replicas: int = 200, seed: int = 0,
                 max_steps: int | None = None) -> HittingReport:
    """Mean first time the (optionally floor-restricted) magnetization chain
    started at start_k reaches a level >= target_k, over seeded replicas."""
    if max_steps is None:
        max_steps = int(200 * N * max(math.log(N), 1.0)) + 100_000
    lo = None if (k_min is None or k_min <= -N) else k_min
    rng = rng_stream(seed, 4)
    ks = np.full(replicas, start_k, dtype=np.int64)
    hit_at = np.full(replicas, -1, dtype=np.int64)
    t = 0
    block = max(64, N // 2)
    while t < max_steps and (hit_at < 0).any():
        times, traj = simulate_mag_replicas(params, N, ks, block, rng, lo=lo,
                                            record_every=1)
        for s in range(1, len(times)):
            newly = (hit_at < 0) & (traj[s] >= target_k)
            hit_at[newly] = t + s
        ks = traj[-1]
        t += block
    if (hit_at < 0).any():
        raise RuntimeError(
            f"{int((hit_at < 0).sum())} replicas missed level {target_k} "
            f"within {max_steps} steps"
        )
    mean = float(hit_at.mean())
    se = float(hit_at.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else 0.0
    return HittingReport(target=target_k, mean_steps=mean, replicas=replicas,
                         std_err=se)


@dataclass
class FitReport:
    slope: float
    intercept: float
    r2: float

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2}

    @classmethod
    def from_dict(cls, d: dict) -> "FitReport":
        return cls(slope=d["slope"], intercept=d["intercept"], r2=d["r2"])


def exponent_fit(ns, times, capped=None) -> FitReport:
    """Least-squares fit of log(time) against log(N).

    Capped or non-finite measurements poison growth estimates, so their
    presence refuses the fit outright.
    """
    ns = np.asarray(ns, dtype=float)
    times = np.asarray(times, dtype=float)
    if capped is not None and any(capped):
        raise ValueError("capped measurements present; exponent fit refused")
    if len(ns) < 3 or len(ns) != len(times):
        raise ValueError("need at least 3 paired (N, time) points")
    if not (np.isfinite(times).all() and (times > 0).all() and (ns > 0).all()):
        raise ValueError("times and ns must be positive and finite")
    x, y = np.log(ns), np.log(times)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return FitReport(slope=float(slope), intercept=float(intercept), r2=r2)
