"""Monte Carlo estimation of capability chart volumes.

Samples are drawn uniformly in a mode-specific box that provably contains
the chart; the estimate is the box volume times the feasible fraction,
with the binomial standard deviation reported alongside.  Real powers are
sampled on the power-balance hyperplane through their first m-1
coordinates, which contributes a sqrt(m) surface-measure factor to the
box volume so that volumes are measured in the ambient injection space.

Every sample owns a fixed-size block of a counter-based Philox stream
keyed by the seed, so estimates are bit-identical regardless of chunking
or worker count.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .capability import CapabilityMode, feasible_mask
from .design import Design
from .errors import UnsupportedOperationError

_DEFAULT_CHUNK = 1 << 16


@dataclass(frozen=True)
class CcvEstimate:
    """Volume estimate with its sampling standard deviation.

    estimate = sample_volume * n_feasible / n_total and
    sigma = sample_volume * sqrt(f (1 - f) / n_total); both are
    recomputable from the stored counts.
    """

    estimate: float
    sigma: float
    n_total: int
    n_feasible: int
    sample_volume: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "sigma": self.sigma,
            "n_total": self.n_total,
            "n_feasible": self.n_feasible,
            "volume": self.sample_volume,
            "seed": self.seed,
        }


def sample_space_dims(mode: CapabilityMode, m: int) -> int:
    """Free coordinates drawn per sample."""
    if mode is CapabilityMode.UPF:
        return m - 1
    if mode is CapabilityMode.STATCOM:
        return m
    if mode is CapabilityMode.PQ:
        return 2 * m - 1
    raise UnsupportedOperationError(
        "pair transfer is a scalar limit, not a volume; use max_power_transfer"
    )


def sample_space_volume(mode: CapabilityMode, m: int) -> float:
    """Volume of the sampling box in ambient injection measure.

    Each free coordinate spans [-1, 1]; modes with real powers carry the
    sqrt(m) factor that maps the (m-1)-coordinate parameterisation of the
    zero-sum hyperplane to its ambient surface measure.
    """
    if mode is CapabilityMode.UPF:
        return 2.0 ** (m - 1) * math.sqrt(m)
    if mode is CapabilityMode.STATCOM:
        return 2.0**m
    if mode is CapabilityMode.PQ:
        return 2.0 ** (2 * m - 1) * math.sqrt(m)
    raise UnsupportedOperationError(
        "pair transfer is a scalar limit, not a volume; use max_power_transfer"
    )


def _sample_magnitudes(
    mode: CapabilityMode, m: int, seed: int, start: int, count: int
) -> np.ndarray:
    """Apparent-power magnitudes |S_i| for samples [start, start+count).

    Sample k consumes Philox counter blocks [k*blk, (k+1)*blk) of the
    stream keyed by seed (one block yields four 64-bit draws), so the
    values depend only on (seed, k).
    """
    dims = sample_space_dims(mode, m)
    blocks = -(-dims // 4)
    bitgen = np.random.Philox(key=seed)
    bitgen.advance(start * blocks)
    u = np.random.Generator(bitgen).random((count, 4 * blocks))[:, :dims]
    x = 2.0 * u - 1.0

    if mode is CapabilityMode.STATCOM:
        return np.abs(x)
    p_free = x[:, : m - 1]
    p_last = -p_free.sum(axis=1, keepdims=True)
    p = np.hstack([p_free, p_last])
    if mode is CapabilityMode.UPF:
        return np.abs(p)
    q = x[:, m - 1:]
    return np.hypot(p, q)


def estimate_ccv(
    d: Design,
    m: int,
    mode: CapabilityMode,
    n_total: int,
    seed: int,
    chunk_size: int = _DEFAULT_CHUNK,
    workers: int = 1,
) -> CcvEstimate:
    """Monte Carlo capability volume estimate for one design and mode.

    Deterministic for a given (design, m, mode, n_total, seed) no matter
    how the work is chunked or how many workers count the chunks.
    """
    if n_total < 1:
        raise ValueError(f"sample count must be positive, got {n_total}")
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    volume = sample_space_volume(mode, m)

    starts = list(range(0, n_total, chunk_size))

    def count_chunk(start: int) -> int:
        count = min(chunk_size, n_total - start)
        mags = _sample_magnitudes(mode, m, seed, start, count)
        return int(feasible_mask(d, m, mags).sum())

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            n_feasible = sum(pool.map(count_chunk, starts))
    else:
        n_feasible = sum(count_chunk(s) for s in starts)

    f = n_feasible / n_total
    estimate = volume * f
    sigma = volume * math.sqrt(f * (1.0 - f) / n_total)
    return CcvEstimate(estimate, sigma, n_total, n_feasible, volume, seed)


def derived_seed(seed: int, index: int) -> int:
    """Independent 64-bit child seed for sweep entry ``index``."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def convergence_sweep(
    d: Design,
    m: int,
    mode: CapabilityMode,
    n_grid,
    seed: int,
    chunk_size: int = _DEFAULT_CHUNK,
    workers: int = 1,
) -> list[CcvEstimate]:
    """One estimate per sample count, each on its own derived stream.

    The per-entry seed is recorded in the estimate, so any row of the
    sweep can be reproduced standalone with estimate_ccv.
    """
    counts = list(n_grid)
    if not counts:
        raise ValueError("sample grid must be non-empty")
    if any(b <= a for a, b in zip(counts, counts[1:])):
        raise ValueError("sample grid must be strictly increasing")
    return [
        estimate_ccv(d, m, mode, n, derived_seed(seed, i), chunk_size, workers)
        for i, n in enumerate(counts)
    ]


def write_sweep_csv(estimates, path) -> None:
    """Sweep rows with 95% confidence band edges (estimate +/- 1.96 sigma)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_total", "estimate", "sigma", "ci95_lo", "ci95_hi", "seed"])
        for e in estimates:
            writer.writerow(
                [
                    e.n_total,
                    repr(e.estimate),
                    repr(e.sigma),
                    repr(e.estimate - 1.96 * e.sigma),
                    repr(e.estimate + 1.96 * e.sigma),
                    e.seed,
                ]
            )
