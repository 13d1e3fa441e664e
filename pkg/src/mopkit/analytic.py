"""Closed-form and quadrature capability chart volumes for two feeders.

Three routes are provided and cross-checked against each other: staircase
areas for reactive-only charts, an elliptic-integral expression for the
full PQ volume of three-converter devices whose largest converter is half
the device, and a graded composite Simpson rule that handles any design
(including the idealised budget device) by integrating reactive-plane
cross-section areas over the real-power axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .capability import enumerate_capacity_vectors
from .design import Design, DesignKind
from .errors import UnsupportedOperationError

SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# Complete elliptic integrals (parameter convention)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EllipticPair:
    """K(tau) and E(tau) with tau the parameter, i.e. K = int dphi / sqrt(1 - tau sin^2 phi)."""

    k_complete: float
    e_complete: float
    tau: float


def elliptic_ke(tau: float) -> EllipticPair:
    """Complete elliptic integrals by arithmetic-geometric mean iteration.

    Converges quadratically; terminates at 1e-15 relative, well inside the
    1e-14 contract for tau bounded away from 1.
    """
    if not 0.0 <= tau < 1.0:
        raise ValueError(f"parameter tau must lie in [0, 1), got {tau}")
    a, b = 1.0, math.sqrt(1.0 - tau)
    c = math.sqrt(tau)
    csum = 0.5 * c * c          # sum of 2^(n-1) c_n^2, n = 0 term
    pow2 = 0.5
    for _ in range(200):
        if abs(c) <= 1e-15 * a:
            break
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        pow2 *= 2.0
        csum += pow2 * c * c
    k = math.pi / (2.0 * a)
    e = k * (1.0 - csum)
    return EllipticPair(k, e, tau)


def w_integral(theta: float, gamma: float) -> float:
    """int_0^gamma sqrt((theta^2 - x^2)(gamma^2 - x^2)) dx for theta >= gamma >= 0.

    Closed form theta*((theta^2 + gamma^2) E(tau) - (theta^2 - gamma^2) K(tau))/3
    with tau = (gamma/theta)^2; the degenerate gamma = theta case reduces to
    2 theta^3 / 3 since the integrand becomes theta^2 - x^2.
    """
    if gamma < 0.0 or theta < gamma:
        raise ValueError(f"need theta >= gamma >= 0, got theta={theta}, gamma={gamma}")
    if theta == 0.0 or gamma == 0.0:
        return 0.0
    if gamma == theta:
        return 2.0 * theta**3 / 3.0
    tau = (gamma / theta) ** 2
    ek = elliptic_ke(tau)
    return theta * (
        (theta * theta + gamma * gamma) * ek.e_complete
        - (theta * theta - gamma * gamma) * ek.k_complete
    ) / 3.0


# ---------------------------------------------------------------------------
# Elliptic-integral PQ volume for 3-converter, 2-feeder devices
# ---------------------------------------------------------------------------

def pq_region_integrals(alphas) -> tuple[float, float, float]:
    """The three half-quadrant region integrals of the PQ volume.

    Valid for exactly three capacities sorted non-increasing with the
    largest equal to 0.5 (the region split below hinges on it).  The first
    region integrates (1/4 - P^2)/2 up to P = 1/2, which is exactly 1/24.
    """
    a = tuple(float(x) for x in alphas)
    if len(a) != 3:
        raise UnsupportedOperationError(f"elliptic route needs 3 converters, got {len(a)}")
    if abs(a[0] - 0.5) > 1e-12:
        raise UnsupportedOperationError(
            f"elliptic route needs the largest converter at 0.5 pu, got {a[0]}"
        )
    r1 = 1.0 / 24.0
    r2 = w_integral(a[0] + a[2], a[1]) - w_integral(a[0], a[1])
    r3 = w_integral(a[0] + a[1], a[2]) - w_integral(a[0] + a[2], a[2])
    return r1, r2, r3


def pq_ccv_elliptic(alphas) -> float:
    """PQ capability volume of a (2-feeder, 3-converter) device, closed form.

    16 sqrt(2) times the sum of the region integrals: 4 for reactive
    quadrant symmetry, 2 for the half quadrant, 2 for the sign of P, and
    sqrt(2) for the length measure along the power-balance line.
    """
    r1, r2, r3 = pq_region_integrals(alphas)
    return 16.0 * SQRT2 * (r1 + r2 + r3)


# ---------------------------------------------------------------------------
# Staircase areas (reactive-only charts)
# ---------------------------------------------------------------------------

def staircase_union_area(rects) -> float:
    """Area of a union of origin-anchored axis-aligned rectangles.

    Sorted by width descending; each rectangle adds a strip only where its
    height exceeds the running maximum, so dominated rectangles contribute
    nothing and the result is order-independent.
    """
    area = 0.0
    hmax = 0.0
    for w, h in sorted(rects, key=lambda r: (-r[0], -r[1])):
        if h > hmax:
            area += w * (h - hmax)
            hmax = h
    return area


def statcom_ccv_staircase(d: Design, m: int = 2) -> float:
    """Reactive-only capability area of a two-feeder device.

    Each capacity vector admits the reactive box |Q1| <= c1, |Q2| <= c2;
    the chart is the union, symmetric about both axes, so 4x the first
    quadrant staircase area.
    """
    if m != 2:
        raise UnsupportedOperationError("staircase area is a two-feeder construction")
    if d.kind is DesignKind.IDEALISED:
        raise UnsupportedOperationError("use statcom_ccv_idealised for the budget device")
    vecs = enumerate_capacity_vectors(d, m)
    return 4.0 * staircase_union_area([(v.caps[0], v.caps[1]) for v in vecs])


def statcom_ccv_idealised(m: int) -> float:
    """Reactive-only volume of the budget device: the unit cross-polytope, 2^m / m!."""
    if m < 2:
        raise ValueError(f"need at least 2 feeders, got {m}")
    return 2.0**m / math.factorial(m)


# ---------------------------------------------------------------------------
# PQ volume by graded composite Simpson quadrature
# ---------------------------------------------------------------------------

def pq_cross_section_area(P: float, vecs) -> float:
    """Reactive-plane cross-section area at real transfer P for capacity vectors.

    Each vector with min capacity >= |P| admits a reactive box of
    half-widths sqrt(c_i^2 - P^2); the area is 4x the staircase union of
    the quarter boxes.
    """
    aP = abs(P)
    rects = []
    for v in vecs:
        c1, c2 = v.caps
        if min(c1, c2) >= aP:
            rects.append((math.sqrt(c1 * c1 - P * P), math.sqrt(c2 * c2 - P * P)))
    if not rects:
        return 0.0
    return 4.0 * staircase_union_area(rects)


def idealised_pq_cross_section_area(P: float) -> float:
    """Cross-section area of sqrt(P^2+Q1^2) + sqrt(P^2+Q2^2) <= 1 at fixed P."""
    aP = abs(P)
    if aP >= 0.5:
        return 0.0
    q1_max = math.sqrt((1.0 - aP) ** 2 - P * P)

    # Integrate in q1 = q1_max sin(theta): the substitution's vanishing
    # derivative at the upper endpoint removes the square-root kink there.
    def q2_extent(theta):
        q1 = q1_max * math.sin(theta)
        rem = 1.0 - math.hypot(P, q1)
        return math.sqrt(max(rem * rem - P * P, 0.0)) * q1_max * math.cos(theta)

    val, _ = integrate.quad(q2_extent, 0.0, math.pi / 2.0, epsabs=1e-10, epsrel=1e-10, limit=200)
    return 4.0 * val


def _simpson_graded(f, a: float, b: float, panels: int) -> float:
    """Composite Simpson on P = a + (b-a) sin^2(theta).

    The substitution's vanishing endpoint derivative absorbs the square
    root kinks where a capacity circle closes, restoring fast convergence.
    """
    theta = np.linspace(0.0, math.pi / 2.0, panels + 1)
    p = a + (b - a) * np.sin(theta) ** 2
    weight = (b - a) * np.sin(2.0 * theta)
    y = np.array([f(x) for x in p]) * weight
    h = (math.pi / 2.0) / panels
    return float(h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))


def pq_ccv_quadrature(d: Design, m: int = 2, panels: int = 1024) -> float:
    """PQ capability volume of any two-feeder design by Simpson quadrature.

    Integrates the cross-section area over P >= 0 (the chart is even in P)
    and scales by 2 for the sign of P and sqrt(2) for the measure along
    the power-balance line.  The composite rule is graded piecewise
    between the capacity breakpoints where rectangles vanish.
    """
    if m != 2:
        raise UnsupportedOperationError("quadrature route is a two-feeder construction")
    if panels % 2 != 0 or panels < 32:
        raise ValueError(f"panel count must be even and >= 32, got {panels}")

    if d.kind is DesignKind.IDEALISED:
        return SQRT2 * 2.0 * _simpson_graded(idealised_pq_cross_section_area, 0.0, 0.5, panels)

    vecs = enumerate_capacity_vectors(d, m)
    p_max = max(min(v.caps) for v in vecs)
    if p_max <= 0.0:
        return 0.0
    breakpoints = sorted({min(v.caps) for v in vecs if 0.0 < min(v.caps) <= p_max})
    edges = [0.0] + breakpoints
    per_piece = max(8, -(-panels // len(breakpoints)) // 2 * 2)

    def area(P):
        return pq_cross_section_area(P, vecs)

    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += _simpson_graded(area, lo, hi, per_piece)
    return SQRT2 * 2.0 * total


# ---------------------------------------------------------------------------
# Two-feeder chart summaries
# ---------------------------------------------------------------------------

def reactive_chart_polygon(d: Design) -> list[tuple[float, float]]:
    """First-quadrant staircase boundary of a two-feeder reactive chart.

    Corner points (q1, q2) ordered by decreasing q1, ready for plotting or
    CSV export; the full chart is the four-way mirror of this boundary.
    """
    if d.kind is DesignKind.IDEALISED:
        return [(1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    corners = []
    hmax = 0.0
    vecs = sorted(enumerate_capacity_vectors(d, 2), key=lambda v: (-v.caps[0], -v.caps[1]))
    for v in vecs:
        c1, c2 = v.caps
        if c2 > hmax:
            corners.append((c1, hmax))
            corners.append((c1, c2))
            hmax = c2
    # degenerate all-on-one-feeder splits reach along the q1 axis
    top = vecs[0].caps[0]
    if corners and top > corners[0][0]:
        corners.insert(0, (top, 0.0))
    return corners


def write_chart_polygon_csv(d: Design, path, label: str | None = None) -> None:
    """Staircase corners as CSV rows design,q1,q2."""
    import csv

    name = label if label is not None else d.kind.value
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["design", "q1", "q2"])
        for q1, q2 in reactive_chart_polygon(d):
            writer.writerow([name, repr(float(q1)), repr(float(q2))])


def upf_ccv_two_feeder(d: Design) -> float:
    """Real-only volume for m = 2: the balanced-transfer segment length.

    The chart is the segment P1 = -P2 with |P1| up to the pair transfer
    limit t, of ambient length 2 t sqrt(2).
    """
    from .capability import max_power_transfer

    return 2.0 * SQRT2 * max_power_transfer(d, 2).maximum


def two_feeder_ccv(d: Design, mode, panels: int = 1024) -> float:
    """Analytic/quadrature CCV of a two-feeder design for a given mode."""
    from .capability import CapabilityMode, max_power_transfer

    if mode is CapabilityMode.MPT:
        return max_power_transfer(d, 2).maximum
    if mode is CapabilityMode.UPF:
        return upf_ccv_two_feeder(d)
    if mode is CapabilityMode.STATCOM:
        if d.kind is DesignKind.IDEALISED:
            return statcom_ccv_idealised(2)
        return statcom_ccv_staircase(d, 2)
    if mode is CapabilityMode.PQ:
        if d.kind is not DesignKind.IDEALISED and d.n == 3 and abs(d.alphas[0] - 0.5) <= 1e-12:
            return pq_ccv_elliptic(d.alphas)
        return pq_ccv_quadrature(d, 2, panels)
    raise ValueError(f"unknown mode {mode!r}")


def compute_table1(panels: int = 1024) -> list[dict]:
    """The five reference two-feeder designs evaluated in all four modes."""
    from .capability import CapabilityMode
    from .design import bisection_sizing, fixed_sop, golden_sizing, idealised, uniform_sizing

    designs = [
        ("fixed(2)", fixed_sop(2)),
        ("uniform(3)", uniform_sizing(3)),
        ("bisection(3)", bisection_sizing(3)),
        ("golden(3)", golden_sizing(3)),
        ("idealised", idealised()),
    ]
    rows = []
    for label, d in designs:
        rows.append(
            {
                "design": label,
                "n": d.n,
                "mpt": two_feeder_ccv(d, CapabilityMode.MPT),
                "upf": two_feeder_ccv(d, CapabilityMode.UPF),
                "statcom": two_feeder_ccv(d, CapabilityMode.STATCOM),
                "pq": two_feeder_ccv(d, CapabilityMode.PQ, panels),
            }
        )
    return rows
