"""Converter sizing strategies for multiplexed soft open points.

A device design is a per-unit capacity vector for its ac/dc converters
(summing to 1 on the total device base) plus a reconfigurability kind:
hard-wired (each converter permanently on its own feeder), multiplexed
(any converter can connect to any feeder), or the idealised limit of
infinitely many infinitesimal converters.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

from .errors import InvalidDesignError, UnsupportedOperationError

GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0

# Absolute tolerance for per-unit capacity comparisons throughout the package.
ALPHA_TOL = 1e-12


class DesignKind(str, enum.Enum):
    FIXED = "fixed"
    MULTIPLEXED = "multiplexed"
    IDEALISED = "idealised"


@dataclass(frozen=True)
class Design:
    """Per-unit converter capacities, sorted non-increasing, summing to 1.

    ``FIXED`` designs wire converter j permanently to feeder j, so the
    feeder count is implied by the converter count.  ``IDEALISED`` carries
    an empty capacity tuple: it stands for the continuum limit of uniform
    sizing and its capability set is a continuous budget constraint.
    """

    alphas: tuple[float, ...]
    kind: DesignKind

    def __post_init__(self):
        if self.kind is DesignKind.IDEALISED:
            if self.alphas:
                raise InvalidDesignError("idealised design carries no explicit capacities")
            return
        if len(self.alphas) < 2:
            raise InvalidDesignError(
                f"{self.kind.value} design needs at least 2 converters, got {len(self.alphas)}"
            )
        if any(a <= 0.0 for a in self.alphas):
            raise InvalidDesignError("capacities must be strictly positive")
        if any(self.alphas[i] < self.alphas[i + 1] for i in range(len(self.alphas) - 1)):
            raise InvalidDesignError("capacities must be sorted non-increasing")
        total = math.fsum(self.alphas)
        if abs(total - 1.0) > ALPHA_TOL:
            raise InvalidDesignError(f"capacities must sum to 1, got {total!r}")

    @property
    def n(self) -> int:
        """Number of converters (0 for the idealised design)."""
        return len(self.alphas)

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind.value, "alphas": list(self.alphas)})

    @classmethod
    def from_json(cls, text: str) -> "Design":
        obj = json.loads(text)
        return cls(tuple(obj["alphas"]), DesignKind(obj["kind"]))


def uniform_sizing(n: int) -> Design:
    """Multiplexed design with n equally sized converters of rating 1/n."""
    _require_converter_count(n)
    return Design(tuple([1.0 / n] * n), DesignKind.MULTIPLEXED)


def bisection_sizing(n: int) -> Design:
    """Multiplexed design: 0.5 pu, then successive halvings, last entry duplicated.

    The first converter is 0.5 pu, the next n-2 each half the preceding
    one, and the nth repeats the (n-1)th so the total is exactly 1.
    """
    _require_converter_count(n)
    alphas = [0.5]
    for _ in range(n - 2):
        alphas.append(alphas[-1] / 2.0)
    alphas.append(alphas[-1])
    return Design(tuple(alphas), DesignKind.MULTIPLEXED)


def golden_sizing(n: int) -> Design:
    """Multiplexed design grown by golden-ratio splits of the smallest converter.

    Starts from [0.5, 0.5]; each step removes the smallest entry s and
    inserts s/phi and s*(2-phi).  Ties on the smallest entry resolve to
    the last (lowest-sorted) position.
    """
    _require_converter_count(n)
    alphas = [0.5, 0.5]
    for _ in range(n - 2):
        alphas.sort(reverse=True)
        s = alphas.pop()
        alphas.extend([s * (GOLDEN_RATIO - 1.0), s * (2.0 - GOLDEN_RATIO)])
    alphas.sort(reverse=True)
    return Design(tuple(alphas), DesignKind.MULTIPLEXED)


def fixed_sop(m: int) -> Design:
    """Conventional hard-wired device: m converters of 1/m, one per feeder."""
    if m < 2:
        raise InvalidDesignError(f"fixed device needs at least 2 feeders, got {m}")
    return Design(tuple([1.0 / m] * m), DesignKind.FIXED)


def idealised() -> Design:
    """Idealised device: continuum of infinitesimal reconfigurable converters."""
    return Design((), DesignKind.IDEALISED)


def split_refinement(d: Design, index: int, fraction: float) -> Design:
    """Split one converter of a multiplexed design into two fragments.

    Entry ``index`` of size s is replaced by s*fraction and s*(1-fraction);
    the result is re-sorted.  Every point feasible for d stays feasible for
    the refined design because the two fragments can be co-assigned.
    """
    if d.kind is not DesignKind.MULTIPLEXED:
        raise UnsupportedOperationError(f"cannot split a {d.kind.value} design")
    if not 0 <= index < d.n:
        raise IndexError(f"converter index {index} out of range for n={d.n}")
    if not 0.0 < fraction < 1.0:
        raise InvalidDesignError(f"split fraction must lie in (0, 1), got {fraction}")
    s = d.alphas[index]
    alphas = list(d.alphas[:index]) + list(d.alphas[index + 1:])
    alphas.extend([s * fraction, s * (1.0 - fraction)])
    alphas.sort(reverse=True)
    return Design(tuple(alphas), DesignKind.MULTIPLEXED)


def _require_converter_count(n: int) -> None:
    if n < 2:
        raise InvalidDesignError(f"need at least 2 converters, got {n}")
