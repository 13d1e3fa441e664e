"""Capability charts: which complex power transfers a device can realise.

A multiplexer assignment wires each converter to one feeder; the induced
per-feeder connected capacity is what limits the apparent power drawn from
each feeder.  Only the aggregate capacity per feeder matters for
feasibility, so the m^n raw assignments collapse to a much smaller
deduplicated set of capacity vectors that is enumerated once per design
and cached.
"""

from __future__ import annotations

import csv
import enum
import functools
from dataclasses import dataclass

import numpy as np

from .design import Design, DesignKind
from .errors import EnumerationLimitError, UnsupportedOperationError

# Capacity comparisons use <= cap + FEAS_TOL to avoid boundary flapping in
# Monte Carlo counts.
FEAS_TOL = 1e-12

DEFAULT_ENUMERATION_CAP = 10**7


class CapabilityMode(enum.Enum):
    PQ = "pq"
    UPF = "upf"
    STATCOM = "statcom"
    MPT = "mpt"


@dataclass(frozen=True)
class MultiplexerAssignment:
    """Feeder index (1..m) that each converter's multiplexer selects."""

    feeders: tuple[int, ...]

    def __post_init__(self):
        if any(f < 1 for f in self.feeders):
            raise ValueError("feeder indices are 1-based")

    def capacity_vector(self, d: Design, m: int) -> "CapacityVector":
        """Aggregate connected capacity per feeder induced by this assignment."""
        if len(self.feeders) != d.n:
            raise ValueError(f"assignment has {len(self.feeders)} entries for n={d.n}")
        if any(f > m for f in self.feeders):
            raise ValueError(f"feeder index exceeds m={m}")
        caps = [0.0] * m
        for alpha, f in zip(d.alphas, self.feeders):
            caps[f - 1] += alpha
        return CapacityVector(tuple(caps))


@dataclass(frozen=True)
class CapacityVector:
    """Per-feeder connected converter capacity, pu on the device base."""

    caps: tuple[float, ...]

    def __post_init__(self):
        if any(c < 0.0 for c in self.caps):
            raise ValueError("capacities are non-negative")

    @property
    def m(self) -> int:
        return len(self.caps)


@dataclass(frozen=True)
class InjectionPoint:
    """Complex power drawn from each feeder into the device (pu).

    Positive real part means power flows from the feeder into the device.
    """

    p: tuple[float, ...]
    q: tuple[float, ...]

    def __post_init__(self):
        if len(self.p) != len(self.q):
            raise ValueError("p and q must have equal length")

    @property
    def m(self) -> int:
        return len(self.p)

    def magnitudes(self) -> np.ndarray:
        return np.hypot(np.asarray(self.p), np.asarray(self.q))


def enumerate_capacity_vectors(
    d: Design, m: int, limit: int = DEFAULT_ENUMERATION_CAP
) -> tuple[CapacityVector, ...]:
    """All distinct per-feeder capacity vectors a design can realise.

    Multiplexed designs yield the deduplicated set of B*alpha over every
    assignment (componentwise dedup at 1e-12); fixed designs yield the
    single hard-wired split.  Sorted lexicographically descending so the
    output order is deterministic.
    """
    if m < 2:
        raise ValueError(f"need at least 2 feeders, got {m}")
    if d.kind is DesignKind.IDEALISED:
        raise UnsupportedOperationError(
            "idealised design has a continuum of capacity splits; use the budget form"
        )
    if d.kind is DesignKind.FIXED:
        if m != d.n:
            raise ValueError(f"fixed design implies m={d.n} feeders, got m={m}")
        return (CapacityVector(tuple([1.0 / m] * m)),)
    if m**d.n > limit:
        raise EnumerationLimitError(
            f"{m}^{d.n} assignments exceed the enumeration cap {limit}"
        )
    return _enumerate_multiplexed(d.alphas, m)


@functools.lru_cache(maxsize=256)
def _enumerate_multiplexed(alphas: tuple[float, ...], m: int) -> tuple[CapacityVector, ...]:
    # Incremental dedup: extend one converter at a time, keyed on partial
    # sums rounded at 1e-12.  Keeps the frontier at the deduplicated size
    # instead of m^n.  Values stay exact float sums; key collisions keep
    # the lexicographically smallest representative for determinism.
    frontier: dict[tuple[float, ...], tuple[float, ...]] = {(0.0,) * m: (0.0,) * m}
    for alpha in alphas:
        nxt: dict[tuple[float, ...], tuple[float, ...]] = {}
        for caps in frontier.values():
            for i in range(m):
                grown = caps[:i] + (caps[i] + alpha,) + caps[i + 1:]
                key = tuple(round(c, 12) for c in grown)
                held = nxt.get(key)
                if held is None or grown < held:
                    nxt[key] = grown
        frontier = nxt
    return tuple(CapacityVector(c) for c in sorted(frontier.values(), reverse=True))


@functools.lru_cache(maxsize=256)
def _capacity_matrix(d: Design, m: int) -> np.ndarray:
    """(K, m) array of capacity vectors for vectorised feasibility tests."""
    vecs = enumerate_capacity_vectors(d, m)
    return np.array([v.caps for v in vecs], dtype=float)


def feasible_mask(d: Design, m: int, magnitudes: np.ndarray) -> np.ndarray:
    """Vectorised membership test for a batch of apparent-power magnitudes.

    ``magnitudes`` is (N, m) with entry [k, i] = |S_i| of sample k.  A
    sample is feasible when some capacity vector covers every feeder
    (idealised: when the magnitudes sum to at most the unit budget).
    """
    mags = np.atleast_2d(np.asarray(magnitudes, dtype=float))
    if mags.shape[1] != m:
        raise ValueError(f"magnitude rows have {mags.shape[1]} entries, expected {m}")
    if d.kind is DesignKind.IDEALISED:
        return mags.sum(axis=1) <= 1.0 + FEAS_TOL
    caps = _capacity_matrix(d, m)
    covered = mags[:, None, :] <= caps[None, :, :] + FEAS_TOL
    return covered.all(axis=2).any(axis=1)


def is_feasible(
    d: Design, m: int, s: InjectionPoint, mode: CapabilityMode = CapabilityMode.PQ
) -> bool:
    """Whether injection s lies inside the design's capability chart.

    Lossless converter model: per feeder, apparent power must not exceed
    the connected capacity for some multiplexer assignment; the idealised
    device instead requires the magnitudes to fit the unit budget.
    """
    if s.m != m:
        raise ValueError(f"injection has {s.m} feeders, expected {m}")
    if mode is CapabilityMode.UPF and any(qi != 0.0 for qi in s.q):
        raise ValueError("UPF mode requires all reactive injections to be zero")
    if mode is CapabilityMode.STATCOM and any(pi != 0.0 for pi in s.p):
        raise ValueError("STATCOM mode requires all real injections to be zero")
    return bool(feasible_mask(d, m, s.magnitudes()[None, :])[0])


@dataclass(frozen=True)
class MaxPowerTransfer:
    """Feeder-to-feeder transfer limits; keys are 1-based ordered pairs."""

    pairs: dict[tuple[int, int], float]
    maximum: float


def max_power_transfer(d: Design, m: int) -> MaxPowerTransfer:
    """Largest balanced transfer for each ordered feeder pair.

    A transfer of t pu from feeder i to feeder j needs capacity t on both,
    so the pair limit is max over capacity vectors of min(cap_i, cap_j).
    The idealised device splits its unit budget across the pair: 0.5 pu.
    """
    if m < 2:
        raise ValueError(f"need at least 2 feeders, got {m}")
    pairs: dict[tuple[int, int], float] = {}
    if d.kind is DesignKind.IDEALISED:
        for i in range(1, m + 1):
            for j in range(1, m + 1):
                if i != j:
                    pairs[(i, j)] = 0.5
        return MaxPowerTransfer(pairs, 0.5)
    caps = _capacity_matrix(d, m)
    for i in range(1, m + 1):
        for j in range(1, m + 1):
            if i != j:
                pairs[(i, j)] = float(np.minimum(caps[:, i - 1], caps[:, j - 1]).max())
    return MaxPowerTransfer(pairs, max(pairs.values()))


def disaggregate(
    s: InjectionPoint, b: MultiplexerAssignment, d: Design
) -> tuple[complex, ...]:
    """Per-converter complex powers under assignment b.

    Each feeder's power splits across its connected converters in
    proportion to converter capacity, so no converter exceeds its own
    rating whenever the feeder total fits the connected capacity.
    """
    m = s.m
    cv = b.capacity_vector(d, m)
    mags = s.magnitudes()
    for i in range(m):
        if cv.caps[i] <= 0.0 and mags[i] > 0.0:
            raise ValueError(f"feeder {i + 1} carries power but has no connected capacity")
    out = []
    for alpha, f in zip(d.alphas, b.feeders):
        feeder_power = complex(s.p[f - 1], s.q[f - 1])
        cap = cv.caps[f - 1]
        if cap <= 0.0:
            if feeder_power != 0:
                raise ValueError(f"feeder {f} carries power but has no connected capacity")
            out.append(0j)
            continue
        if mags[f - 1] > cap + FEAS_TOL:
            raise ValueError(
                f"feeder {f} apparent power {mags[f - 1]:.6g} exceeds connected capacity {cap:.6g}"
            )
        out.append(feeder_power * (alpha / cap))
    return tuple(out)


def write_capacity_vectors_csv(vectors, path) -> None:
    """One row per capacity vector, columns cap_1..cap_m."""
    vectors = list(vectors)
    if not vectors:
        raise ValueError("no capacity vectors to write")
    m = vectors[0].m
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"cap_{i + 1}" for i in range(m)])
        for v in vectors:
            writer.writerow([repr(c) for c in v.caps])


def assignment_count(d: Design, m: int) -> int:
    """Raw multiplexer configuration count m^n before deduplication."""
    if d.kind is DesignKind.IDEALISED:
        raise UnsupportedOperationError("idealised design has no finite assignment count")
    return m**d.n

