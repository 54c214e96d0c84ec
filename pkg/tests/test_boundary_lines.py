import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sna_lab import _kernels
from sna_lab.boundary_lines import (CurveSample, gap_profile, grid, local_lipschitz, lower_line,
                                    monotonicity_defect, stabilization_profile, upper_line)
from sna_lab.errors import DegenerateMaskError, InverseDomainError, MismatchError
from sna_lab.torus_dynamics import AffineFamily, ArctanFamily, InverseSystem, rotate


def kernel_line(fmap, rot, n, m, upper=True):
    fn = _kernels.upper_value if upper else _kernels.lower_value
    return np.array([fn(t, n, fmap.a, fmap.beta, *rot.split) for t in grid(m)])


def test_grid_is_exact():
    g = grid(4096)
    assert g[0] == 0.0 and g[1] == 1 / 4096 and g[-1] == 4095 / 4096


def test_zeroth_lines(golden, fam_fig):
    up, lo = upper_line(fam_fig, golden, 0, 64), lower_line(fam_fig, golden, 0, 64)
    assert np.all(up.values == 1.0) and np.all(lo.values == 0.0)
    assert np.all(gap_profile(up, lo).gaps == 1.0)


def test_first_upper_line_at_omega(golden, fam_fig):
    m = 4096
    up = upper_line(fam_fig, golden, 1, m)
    i = int(round(golden.omega * m))
    # the base point theta_i - omega sits next to 0
    expect = fam_fig.apply(rotate(i / m, golden, -1), 1.0)
    assert up.values[i] == expect
    assert expect == pytest.approx(2 / math.pi * math.atan(40) - 2 * 0.48714, abs=1e-5)


def test_upper_line_definition_by_orbit(golden, fam_fig):
    n, m = 7, 32
    up = upper_line(fam_fig, golden, n, m)
    for i in (0, 5, 31):
        x = 1.0
        for k in range(n):
            x = fam_fig.apply(rotate(i / m, golden, -(n - k)), x)
        assert up.values[i] == x


def test_lower_line_definition_by_backward_orbit(golden, fam_fig):
    n, m = 6, 32
    lo = lower_line(fam_fig, golden, n, m)
    for i in (0, 9, 30):
        y = 0.0
        for k in range(n):
            y = fam_fig.apply_inverse(rotate(i / m, golden, n - k - 1), y)
        assert lo.values[i] == pytest.approx(y, abs=1e-13)


def test_symmetry_lower_line_through_inverse_system(golden, fam_fig):
    """Upper-line code on the inverse system reproduces the kernel lower line."""
    n, m = 40, 256
    via_inverse = lower_line(fam_fig, golden, n, m).values
    direct = kernel_line(fam_fig, golden, n, m, upper=False)
    assert np.max(np.abs(via_inverse - direct)) < 1e-12


def test_upper_line_matches_kernel(golden, fam_fig):
    n, m = 60, 256
    assert np.max(np.abs(upper_line(fam_fig, golden, n, m).values - kernel_line(fam_fig, golden, n, m))) < 1e-14


def test_exact_recurrence_bitwise(golden, fam_c):
    n, m = 30, 128
    curve = upper_line(fam_c, golden, n, m, keep_history=True)
    h = curve.history
    assert h.values.shape == (n + 1, m)
    for k in range(n):
        assert np.array_equal(fam_c.apply(h.bases[k], h.values[k]), h.values[k + 1])
    assert np.array_equal(h.values[n], curve.values)
    assert np.array_equal(h.values[0], np.ones(m))


def test_history_bases(golden, fam_c):
    curve = upper_line(fam_c, golden, 4, 8, keep_history=True)
    assert np.array_equal(curve.history.bases[1], rotate(grid(8), golden, -3))


def test_parallel_result_independent_of_workers(golden, fam_c):
    a = upper_line(fam_c, golden, 25, 1000, workers=1).values
    b = upper_line(fam_c, golden, 25, 1000, workers=4).values
    assert np.array_equal(a, b)


def test_monotone_in_n(golden, fam_c):
    m = 128
    prev_u, prev_l = upper_line(fam_c, golden, 0, m).values, lower_line(fam_c, golden, 0, m).values
    for n in range(1, 40):
        u, lo = upper_line(fam_c, golden, n, m).values, lower_line(fam_c, golden, n, m).values
        assert np.all(u <= prev_u + 1e-12) and np.all(lo >= prev_l - 1e-12)
        prev_u, prev_l = u, lo


def test_lower_line_nonnegative_at_beta_zero(golden):
    f = ArctanFamily(40.0, 0.0)
    prev = np.zeros(64)
    for n in range(1, 15):
        cur = lower_line(f, golden, n, 64).values
        assert np.all(cur >= 0.0) and np.all(cur >= prev - 1e-12)
        prev = cur


def test_lines_stay_in_range(golden, fam_c):
    u = upper_line(fam_c, golden, 200, 512).values
    lo = lower_line(fam_c, golden, 200, 512).values
    assert np.all((u > fam_c.x_lo) & (u <= 1.0))
    assert np.all((lo >= 0.0) & (lo < 1.0))


def test_gaps_nonincreasing_in_n(golden, fam_c):
    prev = None
    for n in (1, 2, 5, 10, 20):
        g = gap_profile(upper_line(fam_c, golden, n, 256), lower_line(fam_c, golden, n, 256))
        assert np.array_equal(g.gaps, g.upper.values - g.lower.values)
        assert g.min_gap == g.gaps[g.argmin]
        if prev is not None:
            assert np.all(g.gaps <= prev + 1e-12)
        prev = g.gaps


def test_gap_goes_negative_above_critical(golden):
    f = ArctanFamily(40.0, 0.5)
    neg = False
    for n in range(1, 60):
        try:
            g = gap_profile(upper_line(f, golden, n, 1024), lower_line(f, golden, n, 1024))
        except InverseDomainError:
            neg = True
            break
        if g.min_gap < 0:
            neg = True
            break
    assert neg


def test_gap_profile_mismatch(golden, fam_c):
    u = upper_line(fam_c, golden, 3, 64)
    with pytest.raises(MismatchError):
        gap_profile(u, lower_line(fam_c, golden, 3, 32))
    with pytest.raises(MismatchError):
        gap_profile(u, lower_line(fam_c, golden, 4, 64))
    with pytest.raises(MismatchError):
        gap_profile(u, lower_line(fam_c.with_beta(0.3), golden, 3, 64))
    with pytest.raises(MismatchError):
        gap_profile(u, u)


def test_lower_line_domain_error_has_context(golden):
    f = ArctanFamily(40.0, 0.95)
    with pytest.raises(InverseDomainError) as info:
        lower_line(f, golden, 40, 64)
    assert info.value.step is not None and info.value.index is not None
    assert 0 <= info.value.index < 64


def test_invalid_arguments(golden, fam_c):
    with pytest.raises(ValueError):
        upper_line(fam_c, golden, -1, 64)
    with pytest.raises(ValueError):
        upper_line(fam_c, golden, 1, 1)


def test_generic_map_path(golden):
    g = AffineFamily()
    up = upper_line(g, golden, 40, 16)
    th = np.arange(16) / 16
    # invariant graph of x -> s x + h cos(2 pi theta), summed as a Fourier mode
    z = g.shift * np.exp(2j * np.pi * (th - golden.omega)) / (1 - g.slope * np.exp(-2j * np.pi * golden.omega))
    assert np.max(np.abs(up.values - z.real)) < 1e-10
    assert monotonicity_defect(g, golden, 20, 16, "upper") <= 0.0


def test_inverse_system_keeps_forward_rotation(golden, fam_c):
    inv = InverseSystem(fam_c, golden)
    assert inv.rotation.omega == golden.omega


# --- stabilization and monotonicity scans ---------------------------------


def test_stabilization_uniform_at_beta_zero(golden):
    prof = stabilization_profile(ArctanFamily(40.0, 0.0), golden, 100, 64)
    assert prof.max() <= 10 and prof.min() >= 1


def test_stabilization_infinite_tol(golden, fam_c):
    assert np.all(stabilization_profile(fam_c, golden, 50, 32, tol=math.inf) == 0)


def test_stabilization_rejects_nonpositive_tol(golden, fam_c):
    with pytest.raises(ValueError):
        stabilization_profile(fam_c, golden, 5, 8, tol=0.0)


def test_stabilization_matches_direct_definition(golden, fam_c):
    N, m, tol = 60, 32, 1e-10
    prof = stabilization_profile(fam_c, golden, N, m, tol)
    lines = np.array([upper_line(fam_c, golden, n, m).values for n in range(N + 1)])
    steps = np.abs(np.diff(lines, axis=0)) >= tol
    expect = np.array([(np.flatnonzero(steps[:, i]).max() + 1) if steps[:, i].any() else 0
                       for i in range(m)])
    expect[expect == N] = N + 1
    assert np.array_equal(prof, expect)


def test_stabilization_grows_toward_critical(golden, fam_c):
    far = stabilization_profile(ArctanFamily(40.0, 0.3), golden, 300, 4096)
    near = stabilization_profile(fam_c, golden, 300, 4096)
    assert near.max() >= 2 * far.max()
    assert near.max() > np.median(near)
    assert near.max() < 300


def test_monotonicity_defect_signs(golden, fam_c):
    assert monotonicity_defect(fam_c, golden, 100, 64, "upper") <= 1e-12
    assert monotonicity_defect(fam_c, golden, 100, 64, "lower") <= 1e-12
    with pytest.raises(ValueError):
        monotonicity_defect(fam_c, golden, 5, 8, "middle")


# --- local Lipschitz ------------------------------------------------------


def test_local_lipschitz_constant_curve():
    assert local_lipschitz(np.full(16, 0.3), np.ones(16, bool)) == 0.0


def test_local_lipschitz_linear_curve():
    m = 64
    vals = grid(m)
    assert local_lipschitz(vals, np.ones(m, bool), periodic=False) == pytest.approx(1.0)
    # the wraparound pair compares theta=(m-1)/m with 0 at circle distance 1/m
    assert local_lipschitz(vals, np.ones(m, bool)) == pytest.approx(m - 1)


def test_local_lipschitz_skips_to_next_retained():
    vals = np.array([0.0, 5.0, 1.0, 0.0])
    mask = np.array([True, False, True, False])
    # pair (0, 2): |1 - 0| / 0.5, wrap pair (2, 0): same distance
    assert local_lipschitz(vals, mask) == pytest.approx(2.0)


def test_local_lipschitz_degenerate_and_mismatch():
    with pytest.raises(DegenerateMaskError):
        local_lipschitz(np.zeros(8), np.eye(8, dtype=bool)[0])
    with pytest.raises(MismatchError):
        local_lipschitz(np.zeros(8), np.ones(4, bool))


@given(st.lists(st.floats(-1, 1), min_size=4, max_size=40), st.integers(0, 2**31))
def test_local_lipschitz_mask_subset_bound(values, seed):
    """Dropping points can only average slopes, never exceed the pairwise maximum."""
    v = np.array(values)
    m = v.size
    rng = np.random.default_rng(seed)
    mask = rng.random(m) < 0.6
    if mask.sum() < 2:
        return
    d = np.abs(v[:, None] - v[None, :])
    idx = np.arange(m)
    dist = np.abs(idx[:, None] - idx[None, :]) / m
    dist = np.minimum(dist, 1 - dist)
    with np.errstate(divide="ignore", invalid="ignore"):
        pair = np.where(dist > 0, d / dist, 0.0)
    assert local_lipschitz(v, mask) <= pair[np.ix_(mask, mask)].max() + 1e-9


def test_curve_sample_metadata(golden, fam_c):
    c = upper_line(fam_c, golden, 3, 16)
    assert isinstance(c, CurveSample) and c.kind == "upper" and c.n == 3 and c.grid_size == 16
    assert c.a == 40.0 and c.beta == fam_c.beta
    assert np.array_equal(c.thetas, grid(16))
