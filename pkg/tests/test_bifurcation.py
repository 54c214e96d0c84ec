import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sna_lab.bifurcation import (
    COLLAPSES,
    SURVIVES,
    classify,
    find_beta_c,
    lyapunov,
    minimality_probe,
    pinched_points,
)
from sna_lab.boundary_lines import gap_profile, lower_line, upper_line
from sna_lab.errors import BudgetInconclusive
from sna_lab.torus_dynamics import AffineFamily, ArctanFamily

FAM = ArctanFamily(40.0, 0.0)


# --- classify -------------------------------------------------------------


def test_classify_beta_zero_survives(golden):
    res = classify(FAM, golden, 0.0, 100, 256)
    assert res.verdict == SURVIVES and not res.collapses
    assert res.min_gap_at_budget > 0.9


@pytest.mark.parametrize("beta", [0.6, 1.0])
def test_classify_large_beta_collapses_immediately(golden, beta):
    res = classify(FAM, golden, beta, 100, 256)
    assert res.verdict == COLLAPSES
    assert res.collapse_step == 1
    assert res.min_gap_at_budget is None


def test_classify_argument_errors(golden):
    with pytest.raises(ValueError):
        classify(FAM, golden, 0.3, 0, 64)
    with pytest.raises(ValueError):
        classify(FAM, golden, 0.3, 10, 64, safety_margin=-1.0)
    with pytest.raises(ValueError):
        classify(FAM, golden, 0.3, 10, 64, method="other")


def test_verdict_monotone_on_ladder(golden):
    betas = np.linspace(0.40, 0.56, 32)
    verdicts = [classify(FAM, golden, b, 400, 512).collapses for b in betas]
    first = verdicts.index(True)
    assert not any(verdicts[:first]) and all(verdicts[first:])


@settings(max_examples=15)
@given(st.floats(0.3, 0.6))
def test_doubling_budget_never_uncollapses(beta):
    from sna_lab.torus_dynamics import Rotation

    rot = Rotation.golden()
    short = classify(FAM, rot, beta, 50, 128)
    long = classify(FAM, rot, beta, 100, 128)
    if short.collapses:
        assert long.collapses
        assert long.collapse_step <= short.collapse_step


@pytest.mark.parametrize("beta", [0.30, 0.45, 0.50, 0.60])
def test_forward_and_lines_methods_agree(golden, beta):
    fwd = classify(FAM, golden, beta, 30, 128, method="forward")
    lines = classify(FAM, golden, beta, 30, 128, method="lines")
    assert fwd.verdict == lines.verdict
    if fwd.verdict == SURVIVES:
        assert fwd.min_gap_at_budget == pytest.approx(lines.min_gap_at_budget, abs=1e-12)


# --- find_beta_c ----------------------------------------------------------


def test_find_beta_c_coarse_tol_single_evaluation(golden):
    b = find_beta_c(FAM, golden, 0.5, 50, 64)
    assert b.evaluations == 1 and len(b.trace) == 1
    assert (b.lo, b.hi) in ((0.0, 0.5), (0.5, 1.0))
    assert b.estimate == b.lo and b.midpoint == pytest.approx(0.5 * (b.lo + b.hi))


def test_find_beta_c_bracket_contains_reference(golden):
    b = find_beta_c(FAM, golden, 1e-4, 4000, 2048)
    assert b.width <= 1e-4
    assert b.lo <= 0.48714 <= b.hi
    # the bracket ends carry the verdicts that define them
    assert not classify(FAM, golden, b.lo, 4000, 2048).collapses
    assert classify(FAM, golden, b.hi, 4000, 2048).collapses
    for row in b.trace:
        assert (row.verdict == COLLAPSES) == (row.beta >= b.hi)


def test_find_beta_c_budget_inconclusive(golden):
    with pytest.raises(BudgetInconclusive) as info:
        find_beta_c(FAM, golden, 1e-3, 1, 256)
    br = info.value.bracket
    assert br is not None and br.width <= 1e-3
    assert br.lo > 0.4871


def test_find_beta_c_endpoint_validation(golden):
    with pytest.raises(ValueError):
        find_beta_c(FAM, golden, 0.1, 50, 64, lo=0.6, hi=1.0)
    with pytest.raises(ValueError):
        find_beta_c(FAM, golden, 0.1, 50, 64, lo=0.0, hi=0.3)
    with pytest.raises(ValueError):
        find_beta_c(FAM, golden, 0.0, 50, 64)


# --- Lyapunov exponents ---------------------------------------------------


@pytest.mark.parametrize("slope,direction", [(0.5, 1), (2.0, -1)])
def test_lyapunov_affine_control_exact(golden, slope, direction):
    # the backward orbit of an expanding affine map stays in the fiber
    g = AffineFamily(slope=slope)
    est = lyapunov(g, golden, 0.0, 0.0, 2000, burn_in=10, direction=direction, n_blocks=10)
    assert est.exponent == pytest.approx(math.log(slope), abs=1e-14)
    assert est.stderr == pytest.approx(0.0, abs=1e-14)
    assert float(est) == est.exponent


def test_lyapunov_signs_below_critical(golden, fam_c):
    fam = fam_c.with_beta(fam_c.beta - 0.01)
    up = lyapunov(fam, golden, 0.0, 1.0, 100_000, burn_in=10_000)
    down = lyapunov(fam, golden, 0.0, 0.0, 100_000, burn_in=10_000, direction=-1)
    assert up.exponent < 0 < down.exponent
    assert up.stderr < 0.05 and down.stderr < 0.05


def test_lyapunov_doubling_consistent(golden):
    fam = ArctanFamily(40.0, 0.4)
    a = lyapunov(fam, golden, 0.0, 1.0, 50_000)
    b = lyapunov(fam, golden, 0.0, 1.0, 100_000)
    assert abs(a.exponent - b.exponent) < 5 * (a.stderr + b.stderr) + 1e-6


def test_lyapunov_argument_errors(golden):
    with pytest.raises(ValueError):
        lyapunov(FAM, golden, 0.0, 1.0, 0)
    with pytest.raises(ValueError):
        lyapunov(FAM, golden, 0.0, 1.0, 10, direction=0)


# --- pinched points and minimality ----------------------------------------


def _gap(golden, beta, n=40, m=256):
    fam = FAM.with_beta(beta)
    return gap_profile(upper_line(fam, golden, n, m), lower_line(fam, golden, n, m))


def test_pinched_points_extremes(golden):
    g = _gap(golden, 0.0)
    assert pinched_points(g, 2.0).size == g.grid_size
    assert pinched_points(g, 0.5).size == 0
    with pytest.raises(ValueError):
        pinched_points(g, 0.0)


def test_minimality_probe_single_tile(golden):
    g = _gap(golden, 0.3)
    assert minimality_probe(FAM.with_beta(0.3), golden, (0.0, 0.5), 10, 1.0, g) == 1.0


def test_minimality_probe_fraction_range(golden):
    g = _gap(golden, 0.3)
    frac = minimality_probe(FAM.with_beta(0.3), golden, (0.1, 0.2), 1000, 2.0 ** -4, g)
    assert 0.0 < frac <= 1.0
    with pytest.raises(ValueError):
        minimality_probe(FAM, golden, (0.0, 0.0), 10, 0.0, g)
