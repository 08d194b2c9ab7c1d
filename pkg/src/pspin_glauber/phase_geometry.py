"""Phase geometry of the mixing transition in the (beta, h) plane.

Closed-form thresholds, the inflection pair of H'' at zero field, the
boundary curves U/L/C, classification of a parameter point by the number
and curvature of local maximizers of H, and full diagram grid scans.

Region semantics (p >= 3):

* locally regular -- unique local maximizer, strictly negative curvature,
  no other stationary point; fast mixing.
* locally critical -- more than one local maximizer; metastability.
* special -- unique local maximizer with vanishing second derivative
  (the single point (beta_hat, h_hat), mirrored in h for even p).
* boundary -- one local maximizer plus a stationary inflection point; the
  one-dimensional curve separating regular from critical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .potential import (
    DegenerateClusterError,
    DomainError,
    LandscapeStructure,
    ModelParams,
    PointKind,
    RootFindOpts,
    StationaryPoint,
    _bisect,
    _golden_max,
    entropy,
    free_energy_d1,
    free_energy_d2,
    landscape_structure,
    local_maxima,
)


class Region(Enum):
    LOCALLY_REGULAR = "LocallyRegular"
    LOCALLY_CRITICAL = "LocallyCritical"
    SPECIAL = "Special"
    BOUNDARY = "Boundary"


class BoundaryDetail(Enum):
    ON_U = "OnU"
    ON_L = "OnL"
    ON_C_GLOBALS = "OnC_globals"


REGION_CODES = {
    Region.LOCALLY_REGULAR: 0,
    Region.LOCALLY_CRITICAL: 1,
    Region.SPECIAL: 2,
    Region.BOUNDARY: 3,
}
UNCERTAIN_CODE = 9


@dataclass(frozen=True)
class Thresholds:
    """Critical inverse temperatures for order p: see module docstring."""

    p: int
    beta_hat: float
    h_hat: float
    beta_tilde: float
    beta_prime: float


@dataclass(frozen=True)
class InflectionPair:
    """The two positive roots a1 < a2 of H'' at zero field."""

    a1: float
    a2: float


@dataclass(frozen=True)
class CurveSample:
    """U/L/C curve values at one beta; None where the curve is undefined."""

    beta: float
    U: float | None
    L: float | None
    C: float | None


@dataclass(frozen=True)
class PhaseReport:
    region: Region
    stationary_points: list[StationaryPoint]
    boundary_detail: BoundaryDetail | None = None
    margin: float | None = None
    uncertain: bool = False

    @property
    def code(self) -> int:
        return UNCERTAIN_CODE if self.uncertain else REGION_CODES[self.region]

    def to_dict(self) -> dict:
        return {
            "region": self.region.value,
            "region_code": self.code,
            "boundary_detail": None if self.boundary_detail is None else self.boundary_detail.value,
            "margin": self.margin,
            "uncertain": self.uncertain,
            "stationary_points": [
                {"m": s.m, "kind": s.kind.value, "H": s.H_value,
                 "H2": s.H2_value, "near_degenerate": s.near_degenerate}
                for s in self.stationary_points
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PhaseReport":
        pts = [
            StationaryPoint(m=s["m"], kind=PointKind(s["kind"]), H_value=s["H"],
                            H2_value=s["H2"], near_degenerate=s["near_degenerate"])
            for s in d["stationary_points"]
        ]
        detail = d.get("boundary_detail")
        return cls(region=Region(d["region"]), stationary_points=pts,
                   boundary_detail=None if detail is None else BoundaryDetail(detail),
                   margin=d.get("margin"), uncertain=d["uncertain"])


def beta_hat(p: int) -> float:
    """Concavity threshold of H at zero field (closed form)."""
    if p < 3:
        raise DomainError(f"thresholds require p >= 3, got {p}")
    return 1.0 / (2.0 * (p - 1)) * (p / (p - 2.0)) ** ((p - 2.0) / 2.0)


def h_hat(p: int) -> float:
    """Field coordinate of the degenerate-maximizer point (closed form)."""
    bh = beta_hat(p)
    w = math.sqrt((p - 2.0) / p)
    return math.atanh(w) - bh * p * w ** (p - 1)


def _grid_golden_min(f, lo, hi, n=100001, name="objective"):
    """Coarse grid pass followed by golden-section refinement.

    Returns (x_min, f(x_min)); raises if the minimum sits on the grid edge
    (the minimizer must be interior for every supported objective).
    """
    xs = np.linspace(lo, hi, n)
    vals = f(xs)
    i = int(np.argmin(vals))
    if i in (0, n - 1):
        raise RuntimeError(f"minimizer of {name} not interior: grid edge hit")
    neg = lambda x: -f(x)
    x_min, v = _golden_max(neg, xs[i - 1], xs[i + 1], tol=1e-13)
    return x_min, -v


@lru_cache(maxsize=64)
def thresholds(p: int) -> Thresholds:
    """All four thresholds for order p >= 3.

    beta_hat/h_hat come from closed forms; beta_tilde and beta_prime from
    1-D minimization of I(x)/x^p and atanh(x)/(p x^(p-1)) over (0, 1).
    """
    bh = beta_hat(p)
    hh = h_hat(p)
    f_tilde = lambda x: entropy(x) / x**p
    f_prime = lambda x: np.arctanh(x) / (p * x ** (p - 1))
    lo, hi = 1e-6, 1.0 - 1e-9
    _, bt = _grid_golden_min(f_tilde, lo, hi, name="I(x)/x^p")
    _, bp = _grid_golden_min(f_prime, lo, hi, name="atanh(x)/(p x^(p-1))")
    return Thresholds(p=p, beta_hat=bh, h_hat=hh, beta_tilde=float(bt),
                      beta_prime=float(bp))


def inflection_pair(p: int, beta: float, opts: RootFindOpts | None = None) -> InflectionPair:
    """The two positive roots of H'' at zero field, bracketing sqrt(1-2/p).

    Requires beta > beta_hat(p); below the threshold H'' has no positive
    root and the landscape is strictly concave.
    """
    opts = opts or RootFindOpts()
    bh = beta_hat(p)
    if not beta > bh + 1e-12:
        raise DomainError(
            f"no inflection pair: beta={beta} is not above beta_hat={bh}"
        )
    params0 = ModelParams(p, beta, 0.0)
    f = lambda x: free_energy_d2(params0, x)
    w = math.sqrt(1.0 - 2.0 / p)
    hi = 1.0 - opts.domain_margin
    fw = f(w)
    if fw <= 0.0:  # float sliver just above the threshold
        w, fw = _golden_max(f, 0.0, hi)
        if fw <= 0.0:
            raise DomainError(f"H'' never positive at beta={beta} (p={p})")
    a1 = _bisect(f, 0.0, w, f(0.0), fw)
    a2 = _bisect(f, w, hi, fw, f(hi))
    return InflectionPair(a1=a1, a2=a2)


def _height_gap(struct: LandscapeStructure, h: float) -> float | None:
    """H(top maximizer) - H(best other maximizer); None if fewer than two."""
    maxima = local_maxima(struct.stationary_points(h))
    if len(maxima) < 2:
        return None
    top = maxima[-1]
    other = max(maxima[:-1], key=lambda s: s.H_value)
    return top.H_value - other.H_value


def _equal_height_field(p: int, beta: float, lo: float, hi: float,
                        opts: RootFindOpts | None = None) -> float:
    """The field h at which the two relevant maximizers of H tie in height.

    Bisects the (strictly h-increasing) height gap inside [lo, hi]; the gap
    is negative near lo and positive near hi.  Endpoints where the maxima
    have already merged are nudged inwards.
    """
    struct = landscape_structure(p, beta, opts)
    if hi - lo < 1e-10:
        return 0.5 * (lo + hi)

    span = hi - lo

    def endpoint(base, sign):
        for frac in (1e-12, 1e-9, 1e-6, 1e-4, 1e-3):
            x = base + sign * frac * span
            g = _height_gap(struct, x)
            if g is not None:
                return x, g
        raise RuntimeError(f"no coexisting maxima near h={base} (p={p}, beta={beta})")

    a, ga = endpoint(lo, +1)
    b, gb = endpoint(hi, -1)
    if ga >= 0.0:
        return a
    if gb <= 0.0:
        return b
    for _ in range(200):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        g = _height_gap(struct, mid)
        if g is None:  # cannot happen strictly inside the coexistence band
            raise RuntimeError(f"maximizers vanished inside bracket at h={mid}")
        if abs(g) < 1e-12:
            return mid
        if g < 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def boundary_curves(p: int, beta: float, thr: Thresholds | None = None,
                    opts: RootFindOpts | None = None,
                    with_C: bool = True) -> CurveSample:
    """Sample the curves U, L, C at one beta; absent values are None.

    Odd p:  U = -H'(a1), L = -H'(a2) at zero field, both on (beta_hat, inf).
    Even p: U = -min(H'(-a2), H'(a1)), L = -H'(a2) only on (beta_hat,
    beta_prime]; C vanishes identically above beta_tilde.
    C is located by equal-height bisection between the outer maximizers;
    pass with_C=False to skip that (the costly part) when only the
    coexistence band U/L matters.
    """
    thr = thr or thresholds(p)
    if beta <= thr.beta_hat + 1e-12:
        return CurveSample(beta=beta, U=None, L=None, C=None)
    pair = inflection_pair(p, beta, opts)
    params0 = ModelParams(p, beta, 0.0)
    g1 = float(free_energy_d1(params0, pair.a1))
    g2 = float(free_energy_d1(params0, pair.a2))
    if p % 2 == 1:
        U, L = -g1, -g2
        C = _equal_height_field(p, beta, L, U, opts) if with_C else None
    else:
        U = max(-g1, g2)  # -min(H'(-a2), H'(a1)); H' is odd at h=0
        L = -g2 if beta <= thr.beta_prime else None
        if not with_C:
            C = None
        elif beta >= thr.beta_tilde:
            C = 0.0
        else:
            C = _equal_height_field(p, beta, L if L is not None else 0.0, U, opts)
    return CurveSample(beta=beta, U=U, L=L, C=C)


def _region_code_for(struct: LandscapeStructure, h: float) -> int:
    """Region code from the stationarity pattern at field h.

    Multi-maximizer and inflection patterns are decided from node signs
    alone.  A single bisected maximizer is regular unless |H'| at some
    curvature root is small enough that the refined |H''(m)| could fall
    inside the degeneracy band, in which case the root is refined.
    """
    ctol = struct.opts.curvature_tol
    params, nodes, values = struct._nodes_for(h)
    events = struct._pattern(nodes, values)
    kinds = [e[0] for e in events]
    n_max = sum(k is PointKind.LOCAL_MAX for k in kinds)
    n_inf = sum(k is PointKind.INFLECTION for k in kinds)
    if n_max >= 2:
        return REGION_CODES[Region.LOCALLY_CRITICAL]
    if n_inf >= 1:
        return REGION_CODES[Region.BOUNDARY]
    kind, lo, hi = next(e for e in events if e[0] is PointKind.LOCAL_MAX)
    if lo == hi:  # tangency node: degenerate maximizer
        return REGION_CODES[Region.SPECIAL]
    # |H''(m)| can only fall inside the band when H' is nearly tangent at a
    # curvature root, or when the H'' peak itself barely misses zero.
    near_node = len(nodes) > 2 and min(abs(v) for v in values[1:-1]) <= 100.0 * ctol
    near_flat = len(nodes) == 2 and struct.d2_grid_max > -1e-6
    if near_node or near_flat:
        pts = struct.stationary_points(h)
        m = local_maxima(pts)[0]
        if abs(m.H2_value) <= ctol:
            return REGION_CODES[Region.SPECIAL]
    return REGION_CODES[Region.LOCALLY_REGULAR]


_CODE_TO_REGION = {v: k for k, v in REGION_CODES.items()}


def classify_point(p: int, beta: float, h: float,
                   opts: RootFindOpts | None = None,
                   with_margin: bool = False) -> PhaseReport:
    """Classify (beta, h) by the stationary structure of H.

    The verdict is read off the located stationary points: two or more
    local maximizers are locally critical; a lone maximizer with an extra
    stationary inflection sits on the boundary curve; a lone maximizer
    with |H''| inside the curvature band is special; otherwise regular.
    """
    opts = opts or RootFindOpts()
    struct = landscape_structure(p, beta, opts)
    uncertain = False
    try:
        code = _region_code_for(struct, h)
        region = _CODE_TO_REGION[code]
        points = struct.stationary_points(h)
    except DegenerateClusterError:
        # unresolved root cluster: report the best pattern-level guess
        region = Region.LOCALLY_REGULAR
        points = []
        uncertain = True

    detail = None
    margin = None
    if with_margin or region is Region.BOUNDARY:
        thr = thresholds(p) if p >= 3 else None
        if thr is not None and beta > thr.beta_hat + 1e-12:
            sample = boundary_curves(p, beta, thr, opts)
            href = abs(h) if p % 2 == 0 else h
            dists = {}
            if sample.U is not None:
                dists[BoundaryDetail.ON_U] = abs(href - sample.U)
            if sample.L is not None:
                dists[BoundaryDetail.ON_L] = abs(href - sample.L)
            if dists:
                nearest = min(dists, key=dists.get)
                margin = min(dists.values())
                if region is Region.BOUNDARY:
                    detail = nearest
    if region is Region.LOCALLY_CRITICAL:
        maxima = local_maxima(points)
        heights = sorted((s.H_value for s in maxima), reverse=True)
        if len(heights) >= 2 and heights[0] - heights[1] <= 1e-10:
            detail = BoundaryDetail.ON_C_GLOBALS
    return PhaseReport(region=region, stationary_points=points,
                       boundary_detail=detail,
                       margin=margin if with_margin else None,
                       uncertain=uncertain)


@dataclass(frozen=True)
class GridSpec:
    p: int
    beta_min: float
    beta_max: float
    beta_step: float
    h_min: float
    h_max: float
    h_step: float
    max_cells: int = 4_000_000


@dataclass
class PhaseDiagramGrid:
    spec: GridSpec
    beta_axis: np.ndarray
    h_axis: np.ndarray
    cells: np.ndarray  # int8 region codes, shape (len(beta_axis), len(h_axis))
    curve_samples: dict  # "U"/"L"/"C" -> list of (beta, value)


class GridBudgetError(ValueError):
    pass


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    if step <= 0 or hi < lo:
        raise DomainError(f"bad axis range [{lo}, {hi}] step {step}")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def scan_column(p: int, beta: float, h_axis: np.ndarray,
                opts: RootFindOpts | None = None,
                thr: Thresholds | None = None):
    """One diagram column: region codes over h_axis plus the curve sample.

    For even p on an h-axis symmetric about zero only the upper half is
    classified and mirrored (the diagram is exactly symmetric in h).
    """
    opts = opts or RootFindOpts()
    h_axis = np.asarray(h_axis, dtype=float)
    struct = LandscapeStructure(p, float(beta), opts)
    codes = np.empty(len(h_axis), dtype=np.int8)
    mirror = (
        p % 2 == 0
        and len(h_axis) > 1
        and abs(h_axis[0] + h_axis[-1]) < 1e-12 * max(1.0, abs(h_axis[-1]))
    )
    if mirror:
        for ih in np.nonzero(h_axis >= -1e-15)[0]:
            codes[ih] = _region_code_for(struct, float(h_axis[ih]))
        for ih in np.nonzero(h_axis < -1e-15)[0]:
            codes[ih] = codes[len(h_axis) - 1 - ih]
    else:
        for ih, h in enumerate(h_axis):
            codes[ih] = _region_code_for(struct, float(h))
    sample = boundary_curves(p, float(beta), thr or thresholds(p), opts)
    return codes, sample


def scan_grid(spec: GridSpec, opts: RootFindOpts | None = None,
              columns=None) -> PhaseDiagramGrid:
    """Classify every grid cell and sample the boundary curves.

    Cells are classified independently by the same pattern logic as
    classify_point.  `columns` may carry precomputed scan_column results
    (one per beta, in axis order) from a worker pool.
    """
    opts = opts or RootFindOpts()
    beta_axis = _axis(spec.beta_min, spec.beta_max, spec.beta_step)
    h_axis = _axis(spec.h_min, spec.h_max, spec.h_step)
    n_cells = len(beta_axis) * len(h_axis)
    if n_cells > spec.max_cells:
        raise GridBudgetError(
            f"grid needs {n_cells} cells, budget is {spec.max_cells};"
            f" raise max_cells to at least {n_cells}"
        )

    cells = np.empty((len(beta_axis), len(h_axis)), dtype=np.int8)
    thr = thresholds(spec.p)
    curves = {"U": [], "L": [], "C": []}
    if columns is None:
        columns = (scan_column(spec.p, float(b), h_axis, opts, thr)
                   for b in beta_axis)

    for ib, (codes, sample) in enumerate(columns):
        cells[ib] = codes
        for key, val in (("U", sample.U), ("L", sample.L), ("C", sample.C)):
            if val is not None:
                curves[key].append((float(sample.beta), float(val)))

    return PhaseDiagramGrid(spec=spec, beta_axis=beta_axis, h_axis=h_axis,
                            cells=cells, curve_samples=curves)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def curves_csv(grid_or_rows) -> str:
    """CSV `beta,U,L,C`.

    Accepts a PhaseDiagramGrid or a list of CurveSample; empty fields where
    a curve is undefined.
    """
    if isinstance(grid_or_rows, PhaseDiagramGrid):
        by_beta: dict[float, dict[str, float]] = {}
        for key in ("U", "L", "C"):
            for beta, val in grid_or_rows.curve_samples[key]:
                by_beta.setdefault(beta, {})[key] = val
        samples = [
            CurveSample(beta=b, U=d.get("U"), L=d.get("L"), C=d.get("C"))
            for b, d in sorted(by_beta.items())
        ]
    else:
        samples = list(grid_or_rows)
    lines = ["beta,U,L,C"]
    for s in samples:
        cols = [_fmt(s.beta)] + ["" if v is None else _fmt(v) for v in (s.U, s.L, s.C)]
        lines.append(",".join(cols))
    return "\n".join(lines) + "\n"


def grid_csv(grid: PhaseDiagramGrid) -> str:
    """CSV `beta,h,region_code`, ordered by beta then h."""
    lines = ["beta,h,region_code"]
    for ib, beta in enumerate(grid.beta_axis):
        for ih, h in enumerate(grid.h_axis):
            lines.append(f"{_fmt(beta)},{_fmt(h)},{int(grid.cells[ib, ih])}")
    return "\n".join(lines) + "\n"
