"""Elementary binary and fuzzy one-dimensional cellular automata.

Binary lattices are tuples of 0/1 with a null boundary (cells past either end
read as 0). Rules use Wolfram numbering: bit ``4*l + 2*c + r`` of the rule
number is the next state for neighborhood ``(l, c, r)``.

For exhaustive work a lattice of length n is also packed into an int with
cell 0 as the most significant bit, so integer order equals lexicographic
order of the cell tuples.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Hashable, Sequence

import numpy as np

MAX_ENUM_CELLS = 16
DEFAULT_QUANTIZATION = 256


class CaError(ValueError):
    pass


class NoConvergence(CaError):
    def __init__(self, max_steps: int):
        super().__init__(f"no attractor cycle detected within {max_steps} steps")
        self.max_steps = max_steps


class LatticeTooLarge(CaError):
    pass


@dataclass(frozen=True)
class CaRule:
    rule_number: int

    def __post_init__(self) -> None:
        if not 0 <= self.rule_number <= 255:
            raise CaError(f"rule number must be in [0, 255], got {self.rule_number}")

    @property
    def table(self) -> tuple[int, ...]:
        """Next-state bits indexed by the neighborhood value ``4*l + 2*c + r``."""
        return tuple((self.rule_number >> i) & 1 for i in range(8))

    @classmethod
    def from_table(cls, table: Sequence[int]) -> "CaRule":
        if len(table) != 8 or any(b not in (0, 1) for b in table):
            raise CaError("rule table must be 8 bits")
        return cls(sum(b << i for i, b in enumerate(table)))

    def __call__(self, left: int, center: int, right: int) -> int:
        return (self.rule_number >> (4 * left + 2 * center + right)) & 1


def step_binary(rule: CaRule, cells: Sequence[int]) -> tuple[int, ...]:
    n = len(cells)
    if n < 1:
        raise CaError("lattice must have at least one cell")
    r = rule.rule_number
    padded = (0, *cells, 0)
    return tuple((r >> (4 * padded[i] + 2 * padded[i + 1] + padded[i + 2])) & 1 for i in range(n))


# Additive rules and the neighbor offsets they XOR/OR together.
_ADDITIVE_DEPS = {
    60: (-1, 0),
    90: (-1, 1),
    102: (0, 1),
    150: (-1, 0, 1),
    170: (1,),
    204: (0,),
    240: (-1,),
}


@dataclass(frozen=True)
class DependencyMatrix:
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(int(v) for v in row) for row in self.entries)
        object.__setattr__(self, "entries", rows)
        n = len(rows)
        if n < 1:
            raise CaError("dependency matrix must be at least 1x1")
        for i, row in enumerate(rows):
            if len(row) != n:
                raise CaError(f"dependency matrix is not square (row {i} has {len(row)} entries)")
            if any(v not in (0, 1) for v in row):
                raise CaError(f"row {i} has entries outside {{0, 1}}")
            if not any(row):
                raise CaError(f"row {i} is all zero")

    @property
    def size(self) -> int:
        return len(self.entries)

    @classmethod
    def from_rules(cls, rules: Sequence[int]) -> "DependencyMatrix":
        """Matrix form of a hybrid CA built from additive rules (60, 90, 102, 150, 170, 204, 240).

        Each cell's row marks the neighbors its rule depends on; neighbors past
        the lattice ends are dropped (null boundary).
        """
        n = len(rules)
        rows = []
        for i, rn in enumerate(rules):
            if rn not in _ADDITIVE_DEPS:
                raise CaError(f"rule {rn} has no dependency-matrix form")
            row = [0] * n
            for off in _ADDITIVE_DEPS[rn]:
                if 0 <= i + off < n:
                    row[i + off] = 1
            rows.append(tuple(row))
        return cls(tuple(rows))

    def to_text(self) -> str:
        return ",".join("".join(str(v) for v in row) for row in self.entries)

    @classmethod
    def from_text(cls, text: str) -> "DependencyMatrix":
        return cls(tuple(tuple(int(c) for c in row) for row in text.split(",")))


def step_fuzzy(T: DependencyMatrix, state: Sequence) -> tuple:
    """One fuzzy step: ``min(1, sum_j T[i][j] * s[j])`` for each cell.

    AND is the product and OR the bounded sum. Binary inputs stay binary, in
    which case the step is a plain boolean OR over each cell's dependencies.
    """
    if T.size != len(state):
        raise CaError(f"matrix is {T.size}x{T.size} but state has {len(state)} cells")
    out = []
    for row in T.entries:
        acc = 0
        for t, s in zip(row, state):
            if t:
                acc += s
        out.append(1 if acc >= 1 else acc)
    return tuple(out)


def _quantizer(resolution: int) -> Callable[[tuple], tuple]:
    def key(state: tuple) -> tuple:
        if all(isinstance(v, (int, np.integer)) for v in state):
            return tuple(int(v) for v in state)
        return tuple(round(float(v) * resolution) for v in state)

    return key


def evolve_to_attractor(
    step: Callable[[tuple], tuple],
    initial: Sequence,
    max_steps: int = 1000,
    resolution: int = DEFAULT_QUANTIZATION,
) -> tuple[Hashable, int]:
    """Iterate ``step`` until a state recurs.

    Returns ``(attractor_id, transient_length)``. The id is the smallest state
    on the detected cycle. Integer (binary) states are compared exactly; fuzzy
    states are compared after quantizing to multiples of ``1/resolution``, in
    which case the id is given in grid units.
    """
    if max_steps < 1:
        raise CaError("max_steps must be >= 1")
    key = _quantizer(resolution)
    state = tuple(initial)
    seen: dict[tuple, int] = {}
    trail: list[tuple] = []
    for i in range(max_steps + 1):
        k = key(state)
        if k in seen:
            start = seen[k]
            return min(trail[start:]), start
        seen[k] = i
        trail.append(k)
        state = tuple(step(state))
    raise NoConvergence(max_steps)


def pack(cells: Sequence[int]) -> int:
    v = 0
    for c in cells:
        v = (v << 1) | int(c)
    return v


def unpack(value: int, n: int) -> tuple[int, ...]:
    return tuple((value >> (n - 1 - i)) & 1 for i in range(n))


def successor_table(rule: CaRule, n: int) -> np.ndarray:
    """Packed successor of every packed state of an n-cell lattice."""
    if n < 1:
        raise CaError("lattice must have at least one cell")
    if n > MAX_ENUM_CELLS:
        raise LatticeTooLarge(f"n={n} exceeds the enumeration limit of {MAX_ENUM_CELLS}")
    states = np.arange(1 << n, dtype=np.int64)
    table = np.array(rule.table, dtype=np.int64)
    out = np.zeros_like(states)
    for i in range(n):
        shift = n - 1 - i
        c = (states >> shift) & 1
        left = (states >> (shift + 1)) & 1 if i > 0 else np.zeros_like(states)
        right = (states >> (shift - 1)) & 1 if i < n - 1 else np.zeros_like(states)
        out |= table[4 * left + 2 * c + right] << shift
    return out


@dataclass(frozen=True)
class BasinPartition:
    """Every state of an n-cell lattice labelled with its attractor id (both packed)."""

    n: int
    attractor_of: tuple[int, ...]

    @property
    def basins(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {}
        for s, a in enumerate(self.attractor_of):
            out.setdefault(a, []).append(s)
        return {a: tuple(v) for a, v in sorted(out.items())}

    def __len__(self) -> int:
        return len(set(self.attractor_of))


def basins_from_successors(succ: Sequence[int]) -> tuple[int, ...]:
    """Label each node of a functional graph with the smallest node of its terminal cycle."""
    size = len(succ)
    label = [-1] * size
    for start in range(size):
        if label[start] >= 0:
            continue
        path = []
        pos: dict[int, int] = {}
        s = start
        while label[s] < 0 and s not in pos:
            pos[s] = len(path)
            path.append(s)
            s = int(succ[s])
        if label[s] >= 0:
            lab = label[s]
        else:
            lab = min(path[pos[s]:])
        for p in path:
            label[p] = lab
    return tuple(label)


@lru_cache(maxsize=4096)
def enumerate_basins(rule: CaRule, n: int) -> BasinPartition:
    succ = successor_table(rule, n)
    return BasinPartition(n, basins_from_successors(succ.tolist()))


def binary_attractor(rule: CaRule, cells: Sequence[int]) -> int:
    """Packed attractor id of one lattice, via the cached full partition when it fits."""
    n = len(cells)
    if n <= MAX_ENUM_CELLS:
        return enumerate_basins(rule, n).attractor_of[pack(cells)]
    att, _ = evolve_to_attractor(lambda s: step_binary(rule, s), cells, max_steps=1 << 20)
    return pack(att)


def matrix_attractor(T: DependencyMatrix, cells: Sequence[int]) -> int:
    """Packed attractor id of a binary lattice under a dependency matrix."""
    att, _ = evolve_to_attractor(lambda s: step_fuzzy(T, s), tuple(int(c) for c in cells),
                                 max_steps=(1 << min(T.size, 20)) + 1)
    return pack(att)
