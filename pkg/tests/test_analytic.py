import math

import numpy as np
import pytest
from scipy import integrate

from mopkit.analytic import (
    compute_table1,
    elliptic_ke,
    idealised_pq_cross_section_area,
    pq_ccv_elliptic,
    pq_ccv_quadrature,
    pq_region_integrals,
    staircase_union_area,
    statcom_ccv_idealised,
    statcom_ccv_staircase,
    w_integral,
)
from mopkit.design import (
    bisection_sizing,
    fixed_sop,
    golden_sizing,
    idealised,
    uniform_sizing,
)
from mopkit.errors import UnsupportedOperationError

SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# elliptic integrals
# ---------------------------------------------------------------------------

def _ke_by_quadrature(tau):
    """Independent oracle: the defining integrals, numerically."""
    k, _ = integrate.quad(lambda t: 1.0 / math.sqrt(1 - tau * math.sin(t) ** 2), 0, math.pi / 2)
    e, _ = integrate.quad(lambda t: math.sqrt(1 - tau * math.sin(t) ** 2), 0, math.pi / 2)
    return k, e


def test_elliptic_degenerate():
    pair = elliptic_ke(0.0)
    assert pair.k_complete == pytest.approx(math.pi / 2, abs=1e-15)
    assert pair.e_complete == pytest.approx(math.pi / 2, abs=1e-15)


def test_elliptic_half_parameter():
    pair = elliptic_ke(0.5)
    # frozen from the quadrature oracle below
    assert pair.k_complete == pytest.approx(1.8540746773013719, rel=1e-13)
    assert pair.e_complete == pytest.approx(1.3506438810476755, rel=1e-13)
    k_ref, e_ref = _ke_by_quadrature(0.5)
    assert pair.k_complete == pytest.approx(k_ref, rel=1e-10)
    assert pair.e_complete == pytest.approx(e_ref, rel=1e-10)


@pytest.mark.parametrize("tau", [0.1, 0.3, 0.7, 0.9, 0.99])
def test_elliptic_matches_quadrature(tau):
    pair = elliptic_ke(tau)
    k_ref, e_ref = _ke_by_quadrature(tau)
    assert pair.k_complete == pytest.approx(k_ref, rel=1e-10)
    assert pair.e_complete == pytest.approx(e_ref, rel=1e-10)


def test_elliptic_limit_and_domain():
    near_one = elliptic_ke(1 - 1e-12)
    assert near_one.e_complete == pytest.approx(1.0, abs=1e-5)
    assert near_one.k_complete > 10.0  # logarithmic divergence
    with pytest.raises(ValueError):
        elliptic_ke(1.0)
    with pytest.raises(ValueError):
        elliptic_ke(-0.1)


# ---------------------------------------------------------------------------
# W integral
# ---------------------------------------------------------------------------

def _w_by_quadrature(theta, gamma):
    f = lambda x: math.sqrt((theta**2 - x**2) * (gamma**2 - x**2))
    val, _ = integrate.quad(f, 0.0, gamma, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def test_w_trivial_values():
    assert w_integral(0.7, 0.0) == 0.0
    assert w_integral(0.0, 0.0) == 0.0
    # theta = gamma reduces the integrand to theta^2 - x^2
    assert w_integral(1.0, 1.0) == pytest.approx(2.0 / 3.0, abs=1e-15)


def test_w_against_quadrature_oracle():
    rng = np.random.default_rng(99)
    for _ in range(100):
        theta = rng.uniform(0.05, 1.5)
        gamma = rng.uniform(0.0, theta)
        assert abs(w_integral(theta, gamma) - _w_by_quadrature(theta, gamma)) <= 1e-10


def test_w_domain_error():
    with pytest.raises(ValueError):
        w_integral(0.3, 0.5)
    with pytest.raises(ValueError):
        w_integral(0.3, -0.1)


# ---------------------------------------------------------------------------
# elliptic PQ volume
# ---------------------------------------------------------------------------

def test_first_region_is_exactly_one_twentyfourth():
    r1, _, _ = pq_region_integrals(golden_sizing(3).alphas)
    assert r1 == 1.0 / 24.0


def test_pq_elliptic_reference_values():
    assert pq_ccv_elliptic(golden_sizing(3).alphas) == pytest.approx(1.357, abs=5e-4)
    assert pq_ccv_elliptic(bisection_sizing(3).alphas) == pytest.approx(1.227, abs=5e-4)


def test_pq_elliptic_requires_half_largest():
    with pytest.raises(UnsupportedOperationError):
        pq_ccv_elliptic(uniform_sizing(3).alphas)
    with pytest.raises(UnsupportedOperationError):
        pq_ccv_elliptic((0.5, 0.5))


def test_pq_elliptic_degenerate_continuity():
    # alpha -> (0.5, 0.5, 0) collapses to the hard-wired two-feeder chart
    eps = 1e-7
    val = pq_ccv_elliptic((0.5, 0.5 - eps, eps))
    assert val == pytest.approx(2 * SQRT2 / 3, abs=1e-3)


# ---------------------------------------------------------------------------
# staircase areas
# ---------------------------------------------------------------------------

def test_staircase_reference_values():
    assert statcom_ccv_staircase(fixed_sop(2)) == pytest.approx(1.0, abs=1e-12)
    assert statcom_ccv_staircase(uniform_sizing(3)) == pytest.approx(4 / 3, abs=1e-9)
    assert statcom_ccv_staircase(bisection_sizing(3)) == pytest.approx(3 / 2, abs=1e-12)
    assert statcom_ccv_staircase(golden_sizing(3)) == pytest.approx(1.652, abs=5e-4)


def test_staircase_rejects_bad_inputs():
    with pytest.raises(UnsupportedOperationError):
        statcom_ccv_staircase(golden_sizing(3), m=3)
    with pytest.raises(UnsupportedOperationError):
        statcom_ccv_staircase(idealised())


def test_staircase_union_invariances():
    rects = [(1.0, 0.2), (0.8, 0.5), (0.3, 0.9), (0.1, 1.0)]
    base = staircase_union_area(rects)
    rng = np.random.default_rng(5)
    for _ in range(10):
        perm = [rects[i] for i in rng.permutation(len(rects))]
        assert staircase_union_area(perm) == pytest.approx(base, abs=1e-15)
    # dominated rectangles contribute nothing
    assert staircase_union_area(rects + [(0.5, 0.4), (0.05, 0.05)]) == pytest.approx(
        base, abs=1e-15
    )


def test_chart_polygon_recovers_staircase_area(tmp_path):
    from mopkit.analytic import reactive_chart_polygon, write_chart_polygon_csv

    for d in [fixed_sop(2), golden_sizing(3), bisection_sizing(4)]:
        corners = reactive_chart_polygon(d)
        # integrate the staircase boundary back into the quadrant area
        area = 0.0
        for (x1, y1), (x2, y2) in zip(corners, corners[1:]):
            if y1 == y2:  # horizontal run at height y1 from x2..x1
                area += (x1 - x2) * y1
        area += corners[-1][0] * corners[-1][1]
        assert 4.0 * area == pytest.approx(statcom_ccv_staircase(d), abs=1e-12)
    path = tmp_path / "polygon.csv"
    write_chart_polygon_csv(golden_sizing(3), path, "golden(3)")
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "design,q1,q2"
    assert len(lines) == 1 + len(reactive_chart_polygon(golden_sizing(3)))


def test_statcom_idealised_cross_polytope():
    assert statcom_ccv_idealised(2) == pytest.approx(2.0, abs=1e-15)
    assert statcom_ccv_idealised(3) == pytest.approx(4 / 3, abs=1e-15)
    assert statcom_ccv_idealised(4) == pytest.approx(2 / 3, abs=1e-15)


# ---------------------------------------------------------------------------
# Simpson quadrature PQ volumes
# ---------------------------------------------------------------------------

def test_pq_quadrature_reference_values():
    assert pq_ccv_quadrature(idealised()) == pytest.approx(1.744, abs=5e-3)
    fixed_val = pq_ccv_quadrature(fixed_sop(2))
    assert fixed_val == pytest.approx(0.943, abs=5e-4)
    # closed form for the hard-wired device: sqrt(2) * int 4 (1/4 - P^2) dP
    assert fixed_val == pytest.approx(2 * SQRT2 / 3, abs=1e-9)
    assert pq_ccv_quadrature(uniform_sizing(3)) == pytest.approx(0.995, abs=5e-4)


def test_pq_quadrature_agrees_with_elliptic():
    for d in [golden_sizing(3), bisection_sizing(3)]:
        quad = pq_ccv_quadrature(d, panels=2048)
        ell = pq_ccv_elliptic(d.alphas)
        assert abs(quad - ell) <= 1e-6


def test_pq_quadrature_richardson():
    for d in [golden_sizing(3), idealised()]:
        v1 = pq_ccv_quadrature(d, panels=1024)
        v2 = pq_ccv_quadrature(d, panels=2048)
        assert abs(v2 - v1) < 1e-7


def test_pq_quadrature_argument_errors():
    with pytest.raises(ValueError):
        pq_ccv_quadrature(golden_sizing(3), panels=1023)
    with pytest.raises(ValueError):
        pq_ccv_quadrature(golden_sizing(3), panels=16)
    with pytest.raises(UnsupportedOperationError):
        pq_ccv_quadrature(golden_sizing(3), m=3)


def test_idealised_cross_section_closed_centre():
    # at P = 0 the budget reduces to |Q1| + |Q2| <= 1, a diamond of area 2
    assert idealised_pq_cross_section_area(0.0) == pytest.approx(2.0, abs=1e-9)
    assert idealised_pq_cross_section_area(0.5) == 0.0
    assert idealised_pq_cross_section_area(0.7) == 0.0


# ---------------------------------------------------------------------------
# reference table
# ---------------------------------------------------------------------------

def test_table_reference_cells():
    rows = {r["design"]: r for r in compute_table1()}
    expect = {
        "fixed(2)": {"mpt": 0.5, "upf": SQRT2, "statcom": 1.0, "pq": 0.943},
        "uniform(3)": {"mpt": 1 / 3, "upf": 2 * SQRT2 / 3, "statcom": 4 / 3, "pq": 0.995},
        "bisection(3)": {"mpt": 0.5, "upf": SQRT2, "statcom": 1.5, "pq": 1.227},
        "golden(3)": {"mpt": 0.5, "upf": SQRT2, "statcom": 1.652, "pq": 1.357},
        "idealised": {"mpt": 0.5, "upf": SQRT2, "statcom": 2.0, "pq": 1.7447},
    }
    for design, cells in expect.items():
        for mode, want in cells.items():
            assert rows[design][mode] == pytest.approx(want, abs=5e-4), (design, mode)
