import math

import numpy as np
import pytest

from mopkit.capability import (
    CapabilityMode,
    CapacityVector,
    InjectionPoint,
    MultiplexerAssignment,
    assignment_count,
    disaggregate,
    enumerate_capacity_vectors,
    feasible_mask,
    is_feasible,
    max_power_transfer,
    write_capacity_vectors_csv,
)
from mopkit.design import (
    bisection_sizing,
    fixed_sop,
    golden_sizing,
    idealised,
    split_refinement,
    uniform_sizing,
)
from mopkit.errors import EnumerationLimitError, UnsupportedOperationError


def caps_set(d, m):
    return {v.caps for v in enumerate_capacity_vectors(d, m)}


def test_enumerate_uniform3_two_feeders():
    got = caps_set(uniform_sizing(3), 2)
    want = {(1.0, 0.0), (0.0, 1.0)}
    assert len(got) == 4
    for w in want:
        assert w in got
    two_thirds = sorted(got)[2]  # (2/3, 1/3)
    assert two_thirds == pytest.approx((2 / 3, 1 / 3), abs=1e-12)


def test_enumerate_golden3_two_feeders():
    got = sorted(caps_set(golden_sizing(3), 2), reverse=True)
    want = [
        (1.0, 0.0),
        (0.809017, 0.190983),
        (0.690983, 0.309017),
        (0.5, 0.5),
        (0.309017, 0.690983),
        (0.190983, 0.809017),
        (0.0, 1.0),
    ]
    assert len(got) == 7
    for g, w in zip(got, want):
        assert g == pytest.approx(w, abs=1e-6)


def test_enumerate_fixed_is_singleton():
    vecs = enumerate_capacity_vectors(fixed_sop(4), 4)
    assert len(vecs) == 1
    assert vecs[0].caps == (0.25, 0.25, 0.25, 0.25)
    with pytest.raises(ValueError):
        enumerate_capacity_vectors(fixed_sop(4), 3)


def test_enumerate_idealised_unsupported():
    with pytest.raises(UnsupportedOperationError):
        enumerate_capacity_vectors(idealised(), 2)


def test_enumeration_cap():
    d = uniform_sizing(12)
    assert assignment_count(d, 4) == 4**12
    with pytest.raises(EnumerationLimitError):
        enumerate_capacity_vectors(d, 4)  # 4^12 > 10^7
    # raising the cap works because dedup keeps the frontier tiny
    vecs = enumerate_capacity_vectors(d, 4, limit=4**12)
    assert len(vecs) == math.comb(12 + 3, 3)


def test_capacity_vectors_sum_to_one():
    for d in [uniform_sizing(4), bisection_sizing(5), golden_sizing(4)]:
        for v in enumerate_capacity_vectors(d, 3):
            assert math.fsum(v.caps) == pytest.approx(1.0, abs=1e-11)


def test_multiset_bound_for_uniform_designs():
    for n in (3, 4, 5):
        for m in (2, 3):
            vecs = enumerate_capacity_vectors(uniform_sizing(n), m)
            assert len(vecs) <= math.comb(n + m - 1, m - 1)


def test_is_feasible_examples():
    s = InjectionPoint((0.4, -0.4), (0.0, 0.0))
    assert is_feasible(fixed_sop(2), 2, s, CapabilityMode.UPF)
    # uniform(3) tops out at 1/3 per pair, so 0.4 is out
    assert not is_feasible(uniform_sizing(3), 2, s, CapabilityMode.UPF)
    assert is_feasible(idealised(), 3, InjectionPoint((0.5, -0.5, 0.0), (0.0, 0.0, 0.0)))
    assert not is_feasible(idealised(), 3, InjectionPoint((0.6, -0.6, 0.0), (0.0, 0.0, 0.0)))


def test_is_feasible_validates_dimensions_and_modes():
    with pytest.raises(ValueError):
        is_feasible(fixed_sop(2), 2, InjectionPoint((0.1, 0.0, -0.1), (0.0, 0.0, 0.0)))
    with pytest.raises(ValueError):
        is_feasible(
            fixed_sop(2), 2, InjectionPoint((0.1, -0.1), (0.2, 0.0)), CapabilityMode.UPF
        )
    with pytest.raises(ValueError):
        is_feasible(
            fixed_sop(2), 2, InjectionPoint((0.1, -0.1), (0.0, 0.0)), CapabilityMode.STATCOM
        )


def test_max_power_transfer_examples():
    assert max_power_transfer(golden_sizing(3), 2).maximum == pytest.approx(0.5, abs=1e-12)
    assert max_power_transfer(uniform_sizing(3), 2).maximum == pytest.approx(1 / 3, abs=1e-11)
    assert max_power_transfer(fixed_sop(2), 2).maximum == pytest.approx(0.5, abs=1e-12)
    mpt = max_power_transfer(idealised(), 4)
    assert mpt.maximum == 0.5
    assert all(v == 0.5 for v in mpt.pairs.values())
    assert (1, 1) not in mpt.pairs
    assert len(mpt.pairs) == 12


def test_disaggregate_proportional_split():
    # one feeder carrying 0.3 pu over converters of 0.15 and 0.30 pu
    d = bisection_sizing(3)  # (0.5, 0.25, 0.25) -> use alphas 0.25+0.5 on feeder 1
    # converters sized 0.15/0.30 need a bespoke design
    from mopkit.design import Design, DesignKind

    d = Design((0.4, 0.3, 0.15, 0.15), DesignKind.MULTIPLEXED)
    b = MultiplexerAssignment((2, 1, 1, 2))  # 0.3 and 0.15 pu on feeder 1
    s = InjectionPoint((0.3, -0.3), (0.0, 0.0))
    parts = disaggregate(s, b, d)
    assert parts[1] == pytest.approx(0.2)  # 0.30 pu converter
    assert parts[2] == pytest.approx(0.1)  # 0.15 pu converter
    # feeder sums recover the injection
    assert parts[1] + parts[2] == pytest.approx(0.3)
    assert parts[0] + parts[3] == pytest.approx(-0.3)
    # no converter loaded above its rating
    for alpha, part in zip(d.alphas, parts):
        assert abs(part) <= alpha + 1e-12


def test_disaggregate_single_and_zero():
    d = golden_sizing(3)
    b = MultiplexerAssignment((1, 2, 2))
    s = InjectionPoint((0.5, -0.5), (0.0, 0.0))
    parts = disaggregate(s, b, d)
    assert parts[0] == pytest.approx(0.5)  # single converter carries the feeder
    zero = disaggregate(InjectionPoint((0.0, 0.0), (0.0, 0.0)), b, d)
    assert zero == (0j, 0j, 0j)


def test_disaggregate_rejects_uncovered_feeder():
    d = golden_sizing(3)
    b = MultiplexerAssignment((1, 1, 1))  # nothing on feeder 2
    with pytest.raises(ValueError):
        disaggregate(InjectionPoint((0.3, -0.3), (0.0, 0.0)), b, d)


def _random_feasible_points(d, m, rng, count):
    """Rejection-sample feasible injections for a design."""
    vecs = enumerate_capacity_vectors(d, m)
    caps = np.array([v.caps for v in vecs])
    out = []
    while len(out) < count:
        p_free = rng.uniform(-1, 1, size=(4 * count, m - 1))
        p = np.hstack([p_free, -p_free.sum(axis=1, keepdims=True)])
        q = rng.uniform(-1, 1, size=(4 * count, m))
        mags = np.hypot(p, q)
        ok = (mags[:, None, :] <= caps[None, :, :] + 1e-12).all(axis=2).any(axis=1)
        for k in np.nonzero(ok)[0]:
            out.append((p[k], q[k]))
            if len(out) == count:
                break
    return out


def test_omega_dominance_property():
    # any point feasible for a unit-capacity design fits the idealised budget
    rng = np.random.default_rng(2024)
    for d in [fixed_sop(2), uniform_sizing(3), golden_sizing(4), bisection_sizing(4)]:
        pts = _random_feasible_points(d, 2, rng, 2500)
        for p, q in pts:
            assert np.hypot(p, q).sum() <= 1.0 + 1e-9


def test_split_refinement_monotonicity_property():
    rng = np.random.default_rng(7)
    d = golden_sizing(3)
    refined = split_refinement(d, 2, 0.4)
    pts = _random_feasible_points(d, 2, rng, 10000)
    mags = np.array([np.hypot(p, q) for p, q in pts])
    assert feasible_mask(refined, 2, mags).all()


def test_fixed_matches_single_vector_check():
    rng = np.random.default_rng(11)
    d = fixed_sop(3)
    p_free = rng.uniform(-1, 1, size=(5000, 2))
    p = np.hstack([p_free, -p_free.sum(axis=1, keepdims=True)])
    q = rng.uniform(-1, 1, size=(5000, 3))
    mags = np.hypot(p, q)
    direct = (mags <= 1 / 3 + 1e-12).all(axis=1)
    assert (feasible_mask(d, 3, mags) == direct).all()


def test_capacity_vector_csv(tmp_path):
    vecs = enumerate_capacity_vectors(golden_sizing(3), 2)
    path = tmp_path / "vectors.csv"
    write_capacity_vectors_csv(vecs, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "cap_1,cap_2"
    assert len(lines) == 1 + len(vecs)


def test_assignment_capacity_vector():
    d = golden_sizing(3)
    cv = MultiplexerAssignment((1, 2, 1)).capacity_vector(d, 2)
    assert cv.caps == pytest.approx((d.alphas[0] + d.alphas[2], d.alphas[1]))
    with pytest.raises(ValueError):
        MultiplexerAssignment((1, 3, 1)).capacity_vector(d, 2)
    with pytest.raises(ValueError):
        MultiplexerAssignment((0, 1, 1))
    with pytest.raises(ValueError):
        CapacityVector((-0.1, 1.1))
