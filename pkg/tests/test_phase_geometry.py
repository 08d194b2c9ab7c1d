"""Thresholds, boundary curves and region classification."""

import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from pspin_glauber import (
    DomainError,
    GridSpec,
    ModelParams,
    Region,
    beta_hat,
    boundary_curves,
    classify_point,
    curves_csv,
    entropy,
    grid_csv,
    inflection_pair,
    scan_grid,
    thresholds,
)
from pspin_glauber.phase_geometry import BoundaryDetail, GridBudgetError

# frozen independent evaluations (40-digit arithmetic, rounded to double)
BETA_HAT_3 = 0.4330127018922193
H_HAT_3 = 0.22546624657018904
H_HAT_4 = 0.40996906622851137
H_HAT_5 = 0.5475956161718532


def test_quartic_thresholds():
    thr = thresholds(4)
    assert thr.beta_hat == 1.0 / 3.0
    assert round(thr.h_hat, 2) == 0.41
    assert abs(thr.h_hat - H_HAT_4) < 1e-12


def test_cubic_thresholds_high_precision():
    thr = thresholds(3)
    assert abs(thr.beta_hat - BETA_HAT_3) < 1e-10
    assert abs(thr.beta_hat - math.sqrt(3) / 4) < 1e-15
    assert abs(thr.h_hat - H_HAT_3) < 1e-10


def test_threshold_minimizations_against_scipy():
    # independent 1-D minimization route for beta_tilde and beta_prime
    for p in (3, 4, 5, 6):
        thr = thresholds(p)
        f_tilde = lambda x: entropy(x) / x**p
        f_prime = lambda x: np.arctanh(x) / (p * x ** (p - 1))
        r1 = minimize_scalar(f_tilde, bounds=(1e-6, 1 - 1e-9), method="bounded",
                             options={"xatol": 1e-12})
        r2 = minimize_scalar(f_prime, bounds=(1e-6, 1 - 1e-9), method="bounded",
                             options={"xatol": 1e-12})
        assert abs(thr.beta_tilde - r1.fun) < 1e-9
        assert abs(thr.beta_prime - r2.fun) < 1e-9


def test_threshold_ordering_even():
    for p in (4, 6, 8):
        thr = thresholds(p)
        assert thr.beta_hat < thr.beta_prime < thr.beta_tilde
        assert thr.beta_hat > 0 and math.isfinite(thr.beta_tilde)


def test_thresholds_reject_low_order():
    with pytest.raises(DomainError):
        thresholds(2)


def test_inflection_pair_near_threshold():
    pair = inflection_pair(4, beta_hat(4) + 1e-9)
    w = math.sqrt(0.5)
    assert abs(pair.a1 - w) < 1e-3
    assert abs(pair.a2 - w) < 1e-3
    assert pair.a1 < w < pair.a2


def test_inflection_pair_residuals():
    from pspin_glauber import free_energy_d2

    pair = inflection_pair(4, 0.5)
    params0 = ModelParams(4, 0.5, 0.0)
    assert 0 < pair.a1 < math.sqrt(0.5) < pair.a2 < 1
    assert abs(free_energy_d2(params0, pair.a1)) < 1e-10
    assert abs(free_energy_d2(params0, pair.a2)) < 1e-10


def test_inflection_pair_strong_coupling_limit():
    pair = inflection_pair(4, 100.0)
    assert pair.a1 < 0.1


def test_inflection_pair_rejected_below_threshold():
    with pytest.raises(DomainError):
        inflection_pair(4, beta_hat(4))
    with pytest.raises(DomainError):
        inflection_pair(4, 0.1)


def test_curves_vanishing_c_even():
    thr = thresholds(4)
    assert boundary_curves(4, thr.beta_tilde + 1e-9, thr).C == 0.0
    assert boundary_curves(4, 0.9, thr).C == 0.0


def test_curves_converge_at_threshold():
    for p, hh in ((4, H_HAT_4), (5, H_HAT_5)):
        thr = thresholds(p)
        cs = boundary_curves(p, thr.beta_hat + 1e-6, thr)
        for v in (cs.U, cs.L, cs.C):
            assert abs(v - hh) < 1e-3


def test_lower_curve_vanishes_at_beta_prime():
    thr = thresholds(4)
    cs = boundary_curves(4, thr.beta_prime, thr)
    assert abs(cs.L) < 1e-8


def test_curve_ordering_and_monotonicity_odd():
    thr = thresholds(5)
    betas = np.linspace(thr.beta_hat + 0.01, 1.2, 40)
    us, ls = [], []
    for b in betas:
        cs = boundary_curves(5, float(b), thr)
        assert cs.L < cs.C < cs.U
        assert cs.U > 0
        us.append(cs.U)
        ls.append(cs.L)
    assert all(np.diff(us) < 0)
    assert all(np.diff(ls) < 0)


def test_upper_curve_u_shape_even():
    thr = thresholds(4)
    betas = np.linspace(thr.beta_hat + 0.005, 1.5, 120)
    us = np.array([boundary_curves(4, float(b), thr, with_C=False).U
                   for b in betas])
    d = np.diff(us)
    sign_flips = int(np.count_nonzero(np.sign(d[:-1]) != np.sign(d[1:])))
    assert sign_flips == 1  # decreasing then increasing, single minimum
    beta0 = float(betas[int(np.argmin(us))])
    assert beta0 > thr.beta_prime
    assert us[-1] > us[0]  # U grows without bound at strong coupling


def test_curve_ordering_even():
    thr = thresholds(4)
    for b in np.linspace(thr.beta_hat + 0.01, thr.beta_tilde - 0.01, 25):
        cs = boundary_curves(4, float(b), thr)
        assert cs.C < cs.U
        if cs.L is not None:
            assert cs.L < cs.C


def test_classify_reference_points():
    assert classify_point(4, 0.054, 0.5).region is Region.LOCALLY_REGULAR
    assert classify_point(4, 1.0 / 3.0, H_HAT_4).region is Region.SPECIAL
    assert classify_point(4, 0.51, 0.184).region is Region.LOCALLY_CRITICAL
    assert classify_point(3, BETA_HAT_3, H_HAT_3).region is Region.SPECIAL


def test_classify_boundary_points():
    thr = thresholds(4)
    cs = boundary_curves(4, 0.5, thr)
    on_u = classify_point(4, 0.5, cs.U)
    assert on_u.region is Region.BOUNDARY
    assert on_u.boundary_detail is BoundaryDetail.ON_U
    on_l = classify_point(4, 0.5, cs.L)
    assert on_l.region is Region.BOUNDARY
    assert on_l.boundary_detail is BoundaryDetail.ON_L
    on_c = classify_point(4, 0.5, cs.C)
    assert on_c.region is Region.LOCALLY_CRITICAL
    assert on_c.boundary_detail is BoundaryDetail.ON_C_GLOBALS


def test_below_threshold_always_regular():
    rng = np.random.default_rng(2)
    for p in (3, 4, 5):
        bh = beta_hat(p)
        for _ in range(40):
            b = float(rng.uniform(0.01, bh - 1e-6))
            h = float(rng.uniform(-2, 2))
            assert classify_point(p, b, h).region is Region.LOCALLY_REGULAR


def _curve_region(p, thr, beta, h, tol=1e-4):
    """Coexistence-band region test straight from the curve geometry.

    Returns Region or None when (beta, h) is within tol of a deciding curve.
    """
    if beta <= thr.beta_hat - tol:
        return Region.LOCALLY_REGULAR
    if beta <= thr.beta_hat + tol:
        return None
    cs = boundary_curves(p, beta, thr, with_C=False)
    href = abs(h) if p % 2 == 0 else h
    if p % 2 == 1:
        lo, hi = cs.L, cs.U
    elif beta <= thr.beta_prime - tol:
        lo, hi = cs.L, cs.U
    elif beta <= thr.beta_prime + tol:
        return None
    else:
        lo, hi = -tol * 2, cs.U  # band is (-U, U); href >= 0
    if lo + tol < href < hi - tol:
        return Region.LOCALLY_CRITICAL
    if href > hi + tol or href < lo - tol:
        return Region.LOCALLY_REGULAR
    return None


def test_classifier_consistency_with_curves():
    rng = np.random.default_rng(77)
    checked = 0
    for _ in range(500):
        p = int(rng.choice([3, 4, 5]))
        thr = thresholds(p)
        beta = float(rng.uniform(0.02, 1.4))
        h = float(rng.uniform(-1.2, 1.2))
        expected = _curve_region(p, thr, beta, h)
        if expected is None:
            continue
        assert classify_point(p, beta, h).region is expected
        checked += 1
    assert checked > 350


def test_scan_grid_single_cell():
    spec = GridSpec(p=4, beta_min=0.054, beta_max=0.054, beta_step=1.0,
                    h_min=0.5, h_max=0.5, h_step=1.0)
    grid = scan_grid(spec)
    assert grid.cells.shape == (1, 1)
    assert grid.cells[0, 0] == 0


def test_scan_grid_even_symmetry_oracle():
    spec = GridSpec(p=4, beta_min=0.3, beta_max=0.6, beta_step=0.06,
                    h_min=-0.4, h_max=0.4, h_step=0.08)
    grid = scan_grid(spec)
    for ib, b in enumerate(grid.beta_axis):
        for ih, h in enumerate(grid.h_axis):
            # independent re-classification of the reflected point
            got = classify_point(4, float(b), -float(h))
            assert got.code == grid.cells[ib, ih]


def test_scan_grid_budget():
    spec = GridSpec(p=4, beta_min=0.1, beta_max=1.0, beta_step=0.001,
                    h_min=-1.0, h_max=1.0, h_step=0.001, max_cells=1000)
    with pytest.raises(GridBudgetError, match="budget"):
        scan_grid(spec)


def test_csv_emission():
    spec = GridSpec(p=4, beta_min=0.3, beta_max=0.5, beta_step=0.1,
                    h_min=0.0, h_max=0.2, h_step=0.1)
    grid = scan_grid(spec)
    gcsv = grid_csv(grid)
    lines = gcsv.strip().split("\n")
    assert lines[0] == "beta,h,region_code"
    assert len(lines) == 1 + 3 * 3
    codes = {int(l.split(",")[2]) for l in lines[1:]}
    assert codes <= {0, 1, 2, 3, 9}
    ccsv = curves_csv(grid)
    assert ccsv.startswith("beta,U,L,C\n")
    # beta = 0.3 is below beta_hat(4): all three fields empty there
    row = ccsv.strip().split("\n")[1]
    assert row.split(",")[1:] == ["", "", ""] or float(row.split(",")[0]) > 1 / 3
