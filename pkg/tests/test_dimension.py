import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sna_lab.boundary_lines import upper_line
from sna_lab.dimension import (
    PointCloud,
    atom_cloud,
    box_count,
    box_dimension,
    dyadic_ladder,
    graph_cloud,
    information_dimension,
    lipschitz_decomposition_report,
    pointwise_dimension,
    sine_graph_cloud,
    unit_square_cloud,
)
from sna_lab.errors import InsufficientScales
from sna_lab.torus_dynamics import AffineFamily, ArctanFamily


@pytest.fixture(scope="module")
def square():
    return unit_square_cloud(200_000, seed=1)


# --- calibration clouds ---------------------------------------------------


def test_box_dimension_unit_square(square):
    fit = box_dimension(square, 2.0 ** -2, 2.0 ** -8)
    assert fit.slope == pytest.approx(2.0, abs=0.05)
    assert not fit.inconclusive


def test_box_dimension_sine_graph():
    fit = box_dimension(sine_graph_cloud(65536), 2.0 ** -2, 2.0 ** -12)
    assert fit.slope == pytest.approx(1.0, abs=0.05)


def test_information_dimension_atom():
    fit = information_dimension(atom_cloud(1000), 100, dyadic_ladder(2.0 ** -2, 2.0 ** -8))
    assert fit.slope == pytest.approx(0.0, abs=0.01)


def test_information_dimension_unit_square(square):
    fit = information_dimension(square, 2000, dyadic_ladder(2.0 ** -2, 2.0 ** -7), seed=3)
    assert fit.slope == pytest.approx(2.0, abs=0.1)


def test_information_dimension_smooth_graph(golden):
    cloud = graph_cloud(ArctanFamily(40.0, 0.3), golden, 65536, 200)
    fit = information_dimension(cloud, 2000, dyadic_ladder(2.0 ** -3, 2.0 ** -10))
    assert fit.slope == pytest.approx(1.0, abs=0.1)


def test_pointwise_dimension_line_and_square(square):
    line = pointwise_dimension(sine_graph_cloud(65536), 1000, dyadic_ladder(2.0 ** -3, 2.0 ** -10))
    assert line.slope == pytest.approx(1.0, abs=0.1)
    sq = pointwise_dimension(square, 0, dyadic_ladder(2.0 ** -2, 2.0 ** -6))
    assert sq.slope == pytest.approx(2.0, abs=0.25)


# --- box counts -----------------------------------------------------------


def test_box_count_single_point():
    p = PointCloud(np.array([0.3]), np.array([0.7]))
    for e in (1.0, 0.5, 2.0 ** -10):
        assert box_count(p, e) == 1


def test_box_count_full_square_grid(square):
    assert box_count(square, 2.0 ** -4) == 256


def test_box_count_wraps_theta():
    p = PointCloud(np.array([0.999999, 1.0, 0.0]), np.array([0.0, 0.0, 0.0]))
    # theta = 1 is theta = 0; the last column stays separate
    assert box_count(p, 0.25) == 2


@given(st.integers(0, 2 ** 31), st.integers(1, 8))
def test_box_count_refinement_bounds(seed, k):
    rng = np.random.default_rng(seed)
    cloud = PointCloud(rng.random(500), rng.normal(size=500))
    eps = 2.0 ** -k
    coarse, fine = box_count(cloud, eps), box_count(cloud, eps / 2)
    assert coarse <= fine <= 4 * coarse


def test_dyadic_ladder():
    lad = dyadic_ladder(0.0625, 2.0 ** -10)
    assert lad[0] == 0.0625 and lad[-1] == 2.0 ** -10 and lad.size == 7
    with pytest.raises(ValueError):
        dyadic_ladder(0.1, 0.2)


def test_box_dimension_insufficient_scales():
    with pytest.raises(InsufficientScales):
        box_dimension(sine_graph_cloud(1024), 2.0 ** -2, 2.0 ** -4)
    with pytest.raises(InsufficientScales):
        box_dimension(atom_cloud(100), 2.0 ** -2, 2.0 ** -10)


def test_information_dimension_deterministic(square):
    lad = dyadic_ladder(2.0 ** -2, 2.0 ** -6)
    a = information_dimension(square, 500, lad, seed=7)
    b = information_dimension(square, 500, lad, seed=7)
    assert a.slope == b.slope and np.array_equal(a.values, b.values)


def test_measure_ladder_must_decrease(square):
    with pytest.raises(ValueError):
        information_dimension(square, 10, [0.1, 0.2, 0.05])


def test_point_cloud_validation():
    with pytest.raises(ValueError):
        PointCloud(np.zeros(3), np.zeros(4))
    with pytest.raises(ValueError):
        PointCloud(np.zeros(2), np.array([0.0, np.inf]))
    assert PointCloud(np.array([1.25]), np.array([0.0])).thetas[0] == 0.25


def test_fit_report_fields(square):
    d = box_dimension(square, 2.0 ** -2, 2.0 ** -8).to_dict()
    assert d["kind"] == "box" and len(d["scales"]) == len(d["values"])


# --- Lipschitz decomposition ---------------------------------------------


def test_decomposition_report(golden):
    curve = upper_line(AffineFamily(), golden, 40, 256)
    full = np.ones(256, dtype=bool)
    single = np.zeros(256, dtype=bool)
    single[3] = True
    rows = lipschitz_decomposition_report({1: curve, 2: curve}, {1: full, 2: single},
                                          {1: 10.0, 2: 10.0}, {1: 0.0, 2: 0.5})
    ok, degenerate = rows
    assert ok.verdict and ok.retained == 256 and ok.masked_out_measure == 0.0
    # slope of the invariant graph is at most 2 pi * shift / (1 - slope)
    assert ok.empirical_lipschitz <= np.pi + 1e-6
    assert degenerate.lipschitz_ok is None and not degenerate.verdict and degenerate.note
    assert not degenerate.measure_ok
    assert rows[0].to_dict()["verdict"] is True
