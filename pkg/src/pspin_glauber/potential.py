"""Free-energy landscape of the p-spin Curie-Weiss model.

Evaluates the scaled free energy ``H(x) = beta*x**p + h*x - I(x)`` (with
``I`` the binary entropy), its first three derivatives, the mean-field map
``lam(c) = tanh(p*beta*c**(p-1) + h)`` with derivatives, and locates and
classifies every stationary point of ``H`` on (-1, 1).

Stationary points of ``H`` coincide with fixed points of ``lam``, and the
sign of ``lam'(m) - 1`` matches the sign of ``H''(m)`` at any such point.
The root finder exploits a structural fact: the roots of ``H''`` (which do
not depend on h) split (-1, 1) into at most five intervals on which ``H'``
is strictly monotone.  Each interval then carries at most one root of
``H'``, bracketed by the interval endpoint signs, and tangential (double)
roots of ``H'`` can only sit exactly on a root of ``H''``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

DOMAIN_MARGIN = 1e-9
ROOT_TOL = 1e-12
CURVATURE_TOL = 1e-8


class DomainError(ValueError):
    """Input outside the admissible open interval or parameter range."""


class DegenerateClusterError(RuntimeError):
    """Root structure could not be resolved inside a bracket."""

    def __init__(self, message, bracket):
        super().__init__(f"{message} (bracket {bracket[0]!r}..{bracket[1]!r})")
        self.bracket = bracket


@dataclass(frozen=True)
class ModelParams:
    """Model parameters: tensor order p >= 2, inverse temperature, field."""

    p: int
    beta: float
    h: float

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 2:
            raise DomainError(f"p must be an integer >= 2, got {self.p}")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "h", float(self.h))
        if not (self.beta > 0) or not math.isfinite(self.beta):
            raise DomainError(f"beta must be positive and finite, got {self.beta}")
        if not math.isfinite(self.h):
            raise DomainError(f"h must be finite, got {self.h}")


@dataclass(frozen=True)
class PotentialValues:
    """H, I, lam and derivatives at a single interior point x."""

    x: float
    I: float
    H: float
    H1: float
    H2: float
    H3: float
    lam: float
    lam1: float
    lam2: float
    lam3: float


class PointKind(Enum):
    LOCAL_MAX = "LocalMax"
    LOCAL_MIN = "LocalMin"
    INFLECTION = "Inflection"


@dataclass(frozen=True)
class StationaryPoint:
    """A refined root of H' with curvature classification.

    ``near_degenerate`` marks roots whose |H''| falls inside the curvature
    tolerance band (degenerate extrema and stationary inflections).
    """

    m: float
    kind: PointKind
    H_value: float
    H2_value: float
    near_degenerate: bool = False


@dataclass(frozen=True)
class RootFindOpts:
    grid_points: int = 20001
    root_tol: float = 1e-12
    curvature_tol: float = CURVATURE_TOL
    domain_margin: float = DOMAIN_MARGIN


def entropy(x):
    """Binary entropy I(x) = ((1+x)log(1+x) + (1-x)log(1-x))/2, log1p-based."""
    x = np.asarray(x, dtype=float)
    out = 0.5 * ((1.0 + x) * np.log1p(x) + (1.0 - x) * np.log1p(-x))
    return out if out.ndim else float(out)


def free_energy(params: ModelParams, x):
    """H(x) = beta*x^p + h*x - I(x) on [-1, 1]."""
    p, beta, h = params.p, params.beta, params.h
    x = np.asarray(x, dtype=float)
    out = beta * x**p + h * x - entropy(x)
    return out if out.ndim else float(out)


def free_energy_d1(params: ModelParams, x):
    """H'(x) = p*beta*x^(p-1) + h - atanh(x)."""
    p, beta, h = params.p, params.beta, params.h
    x = np.asarray(x, dtype=float)
    out = p * beta * x ** (p - 1) + h - np.arctanh(x)
    return out if out.ndim else float(out)


def free_energy_d2(params: ModelParams, x):
    """H''(x) = p*(p-1)*beta*x^(p-2) - 1/(1-x^2); independent of h."""
    p, beta = params.p, params.beta
    x = np.asarray(x, dtype=float)
    out = p * (p - 1) * beta * x ** (p - 2) - 1.0 / (1.0 - x * x)
    return out if out.ndim else float(out)


def mean_field_map(params: ModelParams, c):
    """lam(c) = tanh(p*beta*c^(p-1) + h); defined on all of [-1, 1]."""
    p, beta, h = params.p, params.beta, params.h
    c = np.asarray(c, dtype=float)
    out = np.tanh(p * beta * c ** (p - 1) + h)
    return out if out.ndim else float(out)


def _coef_pow(coef, x, n):
    # coef * x**n with the convention that a zero coefficient kills the
    # term even where x**n would be singular (x=0 with n<0 only arises when
    # the combinatorial coefficient vanishes, i.e. small p).
    return 0.0 if coef == 0 else coef * x**n


def evaluate_potential(params: ModelParams, x: float) -> PotentialValues:
    """Evaluate H, I, lam and their derivatives at an interior point.

    Raises DomainError when |x| > 1 - domain margin; the derivatives of H
    blow up at the endpoints and every stationary point is interior.
    """
    x = float(x)
    if not math.isfinite(x) or abs(x) > 1.0 - DOMAIN_MARGIN:
        raise DomainError(f"x must satisfy |x| <= 1 - {DOMAIN_MARGIN}, got {x}")
    p, beta, h = params.p, params.beta, params.h

    I = entropy(x)
    H = beta * x**p + h * x - I
    H1 = p * beta * x ** (p - 1) + h - math.atanh(x)
    one_m_x2 = 1.0 - x * x
    H2 = _coef_pow(p * (p - 1) * beta, x, p - 2) - 1.0 / one_m_x2
    H3 = _coef_pow(p * (p - 1) * (p - 2) * beta, x, p - 3) - 2.0 * x / one_m_x2**2

    lam = math.tanh(p * beta * x ** (p - 1) + h)
    sech2 = 1.0 - lam * lam
    bp = beta * p * (p - 1)
    lam1 = _coef_pow(bp, x, p - 2) * sech2
    lam2 = _coef_pow(bp * (p - 2), x, p - 3) * sech2 - _coef_pow(2.0 * bp, x, p - 2) * lam * lam1
    lam3 = (
        _coef_pow(bp * (p - 2) * (p - 3), x, p - 4) * sech2
        - _coef_pow(4.0 * bp * (p - 2), x, p - 3) * lam * lam1
        - _coef_pow(2.0 * bp, x, p - 2) * (lam1 * lam1 + lam * lam2)
    )
    return PotentialValues(x=x, I=I, H=H, H1=H1, H2=H2, H3=H3,
                           lam=lam, lam1=lam1, lam2=lam2, lam3=lam3)


def drift_field(params: ModelParams, N: int, c: float) -> float:
    """One-step expected magnetization drift (lam(c) - c) / N."""
    if N < 1:
        raise DomainError(f"N must be a positive integer, got {N}")
    if not -1.0 <= c <= 1.0:
        raise DomainError(f"magnetization must lie in [-1, 1], got {c}")
    return (mean_field_map(params, c) - c) / N


def _bisect(f, a, b, fa, fb, max_iter=200):
    """Bisection for sign-changing f on [a, b]; runs to float resolution."""
    if fa == 0.0:
        return float(a)
    if fb == 0.0:
        return float(b)
    if (fa > 0) == (fb > 0):
        raise DegenerateClusterError("no sign change in bracket", (a, b))
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        fm = f(mid)
        if fm == 0.0:
            return float(mid)
        if (fm > 0) == (fa > 0):
            a, fa = mid, fm
        else:
            b, fb = mid, fm
    return float(0.5 * (a + b))


def _golden_max(f, a, b, tol=1e-13, max_iter=200):
    """Golden-section maximization of f on [a, b]; returns (x, f(x))."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


class LandscapeStructure:
    """Monotonicity structure of H' for fixed (p, beta), shared across h.

    Precomputes the roots of H'' (h-independent) and the h=0 values of H'
    at the resulting interval nodes.  Classification of a given h then only
    inspects signs at the nodes; stationary-point locations are refined by
    bisection inside the sign-changing monotone intervals.
    """

    def __init__(self, p: int, beta: float, opts: RootFindOpts | None = None):
        self.opts = opts or RootFindOpts()
        self.p = int(p)
        self.beta = float(beta)
        self._params0 = ModelParams(self.p, self.beta, 0.0)
        self.d2_grid_max = -math.inf  # set by the curvature scan
        self.curvature_roots = self._find_curvature_roots()

    # -- H'' roots ---------------------------------------------------------

    def _find_curvature_roots(self) -> list[float]:
        opts = self.opts
        lo = -1.0 + opts.domain_margin
        hi = 1.0 - opts.domain_margin
        xs = np.linspace(lo, hi, opts.grid_points)
        vals = np.asarray(free_energy_d2(self._params0, xs))
        self.d2_grid_max = float(vals.max())
        f = lambda x: free_energy_d2(self._params0, x)

        roots = []
        idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
        for i in idx:
            roots.append(_bisect(f, xs[i], xs[i + 1], vals[i], vals[i + 1]))
        for i in np.nonzero(vals == 0.0)[0]:
            roots.append(float(xs[i]))

        # Root pairs with H'' > 0 only strictly between grid points show up
        # as non-positive discrete local maxima; refine by golden section.
        mid = vals[1:-1]
        cand = np.nonzero((mid >= vals[:-2]) & (mid >= vals[2:]) & (mid <= 0))[0] + 1
        for i in cand:
            a, b = xs[i - 1], xs[i + 1]
            fa, fb = vals[i - 1], vals[i + 1]
            x_peak, v_peak = _golden_max(f, a, b)
            if v_peak > 0.0 and fa < 0.0 and fb < 0.0:
                roots.append(_bisect(f, a, x_peak, fa, v_peak))
                roots.append(_bisect(f, x_peak, b, v_peak, fb))

        roots = sorted(roots)
        dedup: list[float] = []
        for r in roots:
            if not dedup or r - dedup[-1] > self.opts.root_tol:
                dedup.append(r)
        return dedup

    # -- node machinery ------------------------------------------------------

    def _nodes_for(self, h: float):
        """Domain endpoints + curvature roots, with H' values at each node.

        The fixed margin can swallow the theoretical endpoint signs
        H'(-1+) > 0 > H'(1-) for very large |h|; shrink until they hold
        (atanh(1 - 1e-15) ~ 17.6 bounds the supported field magnitude).
        """
        params = ModelParams(self.p, self.beta, h)
        for margin in (self.opts.domain_margin, 1e-12, 1e-15):
            lo, hi = -1.0 + margin, 1.0 - margin
            if free_energy_d1(params, lo) > 0 and free_energy_d1(params, hi) < 0:
                break
        else:
            raise DomainError(f"field magnitude too large for root finding: h={h}")
        nodes = [lo] + [r for r in self.curvature_roots if lo < r < hi] + [hi]
        values = [free_energy_d1(params, x) for x in nodes]
        return params, nodes, values

    def _pattern(self, nodes, values):
        """Stationary-point pattern: kinds plus bracketing intervals.

        Returns a list of events ``(kind, lo, hi)``; tangency events (roots
        of H'' with |H'| inside the curvature band) carry lo == hi.
        """
        ctol = self.opts.curvature_tol
        n = len(nodes)
        is_zero = [False] + [abs(v) <= ctol for v in values[1:-1]] + [False]

        def neighbour_sign(idx, step):
            j = idx + step
            while 0 <= j < n and is_zero[j]:
                j += step
            return 1.0 if values[j] > 0 else -1.0

        events = []
        for i in range(1, n - 1):
            if not is_zero[i]:
                continue
            sl, sr = neighbour_sign(i, -1), neighbour_sign(i, +1)
            if sl > 0 > sr:
                kind = PointKind.LOCAL_MAX
            elif sl < 0 < sr:
                kind = PointKind.LOCAL_MIN
            else:
                kind = PointKind.INFLECTION
            events.append((kind, nodes[i], nodes[i]))
        for i in range(n - 1):
            if is_zero[i] or is_zero[i + 1]:
                continue  # the monotone piece is pinned to zero at a node
            va, vb = values[i], values[i + 1]
            if va > 0 > vb:
                events.append((PointKind.LOCAL_MAX, nodes[i], nodes[i + 1]))
            elif va < 0 < vb:
                events.append((PointKind.LOCAL_MIN, nodes[i], nodes[i + 1]))
        events.sort(key=lambda e: e[1])
        return events

    def stationary_points(self, h: float) -> list[StationaryPoint]:
        params, nodes, values = self._nodes_for(h)
        events = self._pattern(nodes, values)
        f = lambda x: free_energy_d1(params, x)
        ctol = self.opts.curvature_tol

        points = []
        for kind, lo, hi in events:
            if lo == hi:
                m, near = lo, True
            else:
                m = _bisect(f, lo, hi, f(lo), f(hi))
                near = None
            pv = evaluate_potential(params, m)
            nd = abs(pv.H2) <= ctol if near is None else near
            points.append(StationaryPoint(m=m, kind=kind, H_value=pv.H,
                                          H2_value=pv.H2, near_degenerate=nd))
        if not any(s.kind is PointKind.LOCAL_MAX for s in points):
            raise DegenerateClusterError("no local maximizer resolved",
                                         (nodes[0], nodes[-1]))
        return points


@lru_cache(maxsize=256)
def _cached_structure(p: int, beta: float, opts: RootFindOpts) -> LandscapeStructure:
    return LandscapeStructure(p, beta, opts)


def landscape_structure(p: int, beta: float, opts: RootFindOpts | None = None):
    """Cached monotonicity structure for fixed (p, beta)."""
    return _cached_structure(int(p), float(beta), opts or RootFindOpts())


def find_stationary_points(
    params: ModelParams, opts: RootFindOpts | None = None
) -> list[StationaryPoint]:
    """Locate and classify all stationary points of H on (-1, 1).

    Returns the ascending list of roots of H'.  Simple roots are bracketed
    between consecutive roots of H'' and bisected; a root of H'' where |H'|
    falls inside the curvature band is reported as a stationary inflection
    (or a degenerate extremum when H' changes sign across it).  The list
    always contains at least one local maximizer.
    """
    return landscape_structure(params.p, params.beta, opts).stationary_points(params.h)


def local_maxima(points: list[StationaryPoint]) -> list[StationaryPoint]:
    return [s for s in points if s.kind is PointKind.LOCAL_MAX]
