"""Attribute-vector encoding, basin distributions and the relevance index."""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Union

NORMAL = 0
INTRUSION = 1


class PatternError(ValueError):
    pass


@dataclass(frozen=True)
class PatternVector:
    cells: tuple[int, ...]
    label: Optional[int] = None

    def __post_init__(self) -> None:
        cells = tuple(int(c) for c in self.cells)
        if not cells or any(c not in (0, 1) for c in cells):
            raise PatternError("pattern cells must be a nonempty bit vector")
        object.__setattr__(self, "cells", cells)

    @property
    def bits(self) -> str:
        return "".join(map(str, self.cells))

    @classmethod
    def from_bits(cls, bits: str, label: Optional[int] = None) -> "PatternVector":
        if not bits or set(bits) - {"0", "1"}:
            raise PatternError(f"not a bit string: {bits!r}")
        return cls(tuple(int(b) for b in bits), label)


Thresholds = Sequence[Union[float, Sequence[float]]]


def encode_pattern(raw: Sequence[float], thresholds: Thresholds, label: Optional[int] = None) -> PatternVector:
    """Quantize a real attribute vector into bits.

    Each attribute has either one cut point or an ascending list of them; every
    cut contributes one bit, set when the attribute is >= the cut.
    """
    if len(raw) != len(thresholds):
        raise PatternError(f"{len(raw)} attributes but {len(thresholds)} threshold entries")
    bits = []
    for value, cuts in zip(raw, thresholds):
        if isinstance(cuts, (int, float)):
            cuts = (cuts,)
        cuts = tuple(cuts)
        if not cuts:
            raise PatternError("attribute with no cut points")
        if any(b < a for a, b in zip(cuts, cuts[1:])):
            raise PatternError(f"cut points not ordered: {cuts}")
        bits.extend(1 if value >= c else 0 for c in cuts)
    return PatternVector(tuple(bits), label)


# attractor id -> {class id: count}
BasinDistribution = Mapping[int, Mapping[int, int]]


def relevance_index(dist: BasinDistribution) -> float:
    """Pattern-weighted mean of per-basin majority fraction; 1.0 iff every basin is single-class."""
    total = 0
    majority = 0
    for hist in dist.values():
        n = sum(hist.values())
        if n == 0:
            continue
        total += n
        majority += max(hist.values())
    if total == 0:
        raise PatternError("relevance index of an empty distribution")
    return majority / total


def majority_class(labels: Iterable[int]) -> int:
    counts: dict[int, int] = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    if not counts:
        raise PatternError("no labels")
    return min(counts, key=lambda c: (-counts[c], c))


def make_two_class_dataset(count: int, cells: int = 8, seed: int = 0) -> list[PatternVector]:
    """Synthetic traffic patterns: normal ones start ``00``, intrusions start ``11``.

    The remaining bits are uniform noise; labels alternate so the classes are balanced.
    """
    if cells < 2:
        raise PatternError("need at least 2 cells")
    rng = random.Random(seed)
    out = []
    for i in range(count):
        label = INTRUSION if i % 2 else NORMAL
        head = (label, label)
        out.append(PatternVector(head + tuple(rng.randint(0, 1) for _ in range(cells - 2)), label))
    return out
