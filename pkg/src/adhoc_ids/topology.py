"""Ad hoc network model: node placement, radio links, hop distances and battery state.

Energy values are kept as :class:`fractions.Fraction` so that drain accounting
in the simulator is exact (initial minus final energy equals the sum of all
drains, with no float residue).
"""
from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Optional


class Role(str, Enum):
    MEMBER = "Member"
    MONITOR = "Monitor"
    DEAD = "Dead"

    @property
    def code(self) -> str:
        return {"Member": "m", "Monitor": "M", "Dead": "D"}[self.value]


class TopologyError(ValueError):
    pass


class UnknownNodeError(TopologyError):
    pass


class DeadNodeError(TopologyError):
    pass


def as_energy(value) -> Fraction:
    """Convert a number (or numeric string) to an exact energy amount."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # go through repr so 0.1 means one tenth, not the binary approximation
        return Fraction(repr(value))
    return Fraction(value)


@dataclass
class NodeState:
    id: int
    x: float
    y: float
    radio_range: float
    energy: Fraction
    member_drain: Fraction
    monitor_drain: Fraction
    role: Role = Role.MEMBER

    def __post_init__(self) -> None:
        self.energy = as_energy(self.energy)
        self.member_drain = as_energy(self.member_drain)
        self.monitor_drain = as_energy(self.monitor_drain)
        if self.id < 0:
            raise TopologyError(f"node id must be >= 0, got {self.id}")
        if self.radio_range <= 0:
            raise TopologyError(f"radio_range must be > 0, got {self.radio_range}")
        if self.energy < 0:
            raise TopologyError(f"energy must be >= 0, got {self.energy}")
        check_drains(self.member_drain, self.monitor_drain)
        if self.energy == 0:
            self.role = Role.DEAD
        elif self.role is Role.DEAD:
            raise TopologyError(f"node {self.id} has energy but is marked Dead")

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)

    @property
    def alive(self) -> bool:
        return self.role is not Role.DEAD

    def drain_rate(self) -> Fraction:
        if self.role is Role.MONITOR:
            return self.monitor_drain
        if self.role is Role.MEMBER:
            return self.member_drain
        return Fraction(0)


def check_drains(member_drain: Fraction, monitor_drain: Fraction) -> None:
    # Both zero is allowed: a "no power change" scenario.
    if member_drain < 0 or monitor_drain < 0:
        raise TopologyError("drain rates must be nonnegative")
    if member_drain == 0 and monitor_drain == 0:
        return
    if member_drain <= 0:
        raise TopologyError("member_drain must be > 0 unless both drains are 0")
    if monitor_drain <= member_drain:
        raise TopologyError(
            f"monitor_drain ({monitor_drain}) must exceed member_drain ({member_drain})"
        )


def _short(x: float) -> str:
    # shortest text that parses back to the same float
    return str(int(x)) if float(x).is_integer() else repr(float(x))


@dataclass(frozen=True)
class EnergySpec:
    """Initial energy distribution: ``constant:V`` or ``uniform:LO:HI``.

    Uniform draws are rounded to 1/100 of a unit so they stay exact rationals.
    """

    kind: str = "uniform"
    low: float = 500.0
    high: float = 1000.0

    def __post_init__(self) -> None:
        if self.kind not in ("uniform", "constant"):
            raise TopologyError(f"unknown energy distribution {self.kind!r}")
        if self.low <= 0 or self.high < self.low:
            raise TopologyError(f"invalid energy bounds {self.low}..{self.high}")
        if self.kind == "constant" and self.high != self.low:
            raise TopologyError("constant energy spec needs low == high")

    @classmethod
    def parse(cls, text: str) -> "EnergySpec":
        parts = text.strip().split(":")
        try:
            if parts[0] == "constant" and len(parts) == 2:
                v = float(parts[1])
                return cls("constant", v, v)
            if parts[0] == "uniform" and len(parts) == 3:
                return cls("uniform", float(parts[1]), float(parts[2]))
        except ValueError as exc:
            raise TopologyError(f"bad energy spec {text!r}: {exc}") from None
        raise TopologyError(f"bad energy spec {text!r}")

    def __str__(self) -> str:
        if self.kind == "constant":
            return f"constant:{_short(self.low)}"
        return f"uniform:{_short(self.low)}:{_short(self.high)}"

    def draw(self, rng: random.Random) -> Fraction:
        if self.kind == "constant":
            return as_energy(self.low)
        return Fraction(round(rng.uniform(self.low, self.high) * 100), 100)


class Topology:
    """Node table plus the symmetric link relation over live nodes.

    Links are recomputed with :meth:`refresh_links` whenever a node dies or
    joins; between refreshes the adjacency is a consistent snapshot.
    """

    def __init__(self, nodes: Iterable[NodeState]):
        self.nodes: dict[int, NodeState] = {}
        for n in nodes:
            if n.id in self.nodes:
                raise TopologyError(f"duplicate node id {n.id}")
            self.nodes[n.id] = n
        self.adjacency: dict[int, frozenset[int]] = {}
        self.refresh_links()

    def refresh_links(self) -> None:
        live = [n for n in self.nodes.values() if n.alive]
        adj: dict[int, set[int]] = {n.id: set() for n in live}
        for i, a in enumerate(live):
            for b in live[i + 1:]:
                if math.dist(a.position, b.position) <= min(a.radio_range, b.radio_range):
                    adj[a.id].add(b.id)
                    adj[b.id].add(a.id)
        self.adjacency = {k: frozenset(v) for k, v in adj.items()}

    def add_node(self, node: NodeState) -> None:
        if node.id in self.nodes:
            raise TopologyError(f"duplicate node id {node.id}")
        self.nodes[node.id] = node
        self.refresh_links()

    def node(self, node_id: int) -> NodeState:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNodeError(f"unknown node {node_id}") from None

    def live_node(self, node_id: int) -> NodeState:
        n = self.node(node_id)
        if not n.alive:
            raise DeadNodeError(f"node {node_id} is dead")
        return n

    def live_ids(self) -> list[int]:
        return sorted(i for i, n in self.nodes.items() if n.alive)

    def links(self) -> list[tuple[int, int]]:
        return sorted((a, b) for a, nbrs in self.adjacency.items() for b in nbrs if a < b)

    def hop_distances(self, source: int, limit: Optional[int] = None) -> dict[int, int]:
        """Breadth-first hop counts from ``source`` to every reachable live node."""
        self.live_node(source)
        dist = {source: 0}
        queue = deque([source])
        while queue:
            u = queue.popleft()
            d = dist[u]
            if limit is not None and d >= limit:
                continue
            for v in self.adjacency[u]:
                if v not in dist:
                    dist[v] = d + 1
                    queue.append(v)
        return dist

    def components(self) -> list[frozenset[int]]:
        seen: set[int] = set()
        comps = []
        for i in self.live_ids():
            if i in seen:
                continue
            comp = frozenset(self.hop_distances(i))
            seen |= comp
            comps.append(comp)
        return comps

    def to_text(self) -> str:
        """Canonical serialization used for determinism checks."""
        lines = []
        for i in sorted(self.nodes):
            n = self.nodes[i]
            lines.append(
                f"node {n.id} {n.x!r} {n.y!r} {n.radio_range!r} {n.energy} "
                f"{n.member_drain} {n.monitor_drain} {n.role.value}"
            )
        lines += [f"link {a} {b}" for a, b in self.links()]
        return "\n".join(lines) + "\n"


def build_geometric(
    node_count: int,
    area_side: float,
    radio_range: float,
    energy_init: EnergySpec | str = EnergySpec(),
    seed: int = 0,
    member_drain=Fraction(1, 5),
    monitor_drain=Fraction(2),
) -> Topology:
    """Place ``node_count`` nodes uniformly at random in a square of side ``area_side``."""
    if node_count < 1:
        raise TopologyError(f"node_count must be >= 1, got {node_count}")
    if area_side <= 0 or radio_range <= 0:
        raise TopologyError("area_side and radio_range must be > 0")
    if isinstance(energy_init, str):
        energy_init = EnergySpec.parse(energy_init)
    rng = random.Random(seed)
    positions = [(rng.uniform(0, area_side), rng.uniform(0, area_side)) for _ in range(node_count)]
    nodes = [
        NodeState(
            id=i,
            x=x,
            y=y,
            radio_range=radio_range,
            energy=energy_init.draw(rng),
            member_drain=member_drain,
            monitor_drain=monitor_drain,
        )
        for i, (x, y) in enumerate(positions)
    ]
    return Topology(nodes)


def hop_distance(t: Topology, a: int, b: int) -> Optional[int]:
    """Shortest path length in hops, or ``None`` when ``b`` is unreachable from ``a``."""
    t.live_node(b)
    return t.hop_distances(a).get(b)


def neighbors_within(t: Topology, a: int, h: int) -> set[int]:
    if h < 1:
        raise TopologyError(f"hop radius must be >= 1, got {h}")
    dist = t.hop_distances(a, limit=h)
    dist.pop(a)
    return set(dist)


def supportable_duration(n: NodeState) -> Fraction | float:
    """Ticks the node could serve as a monitor before its battery runs out.

    This is the power-level metric. With zero drain the duration is infinite.
    """
    if not n.alive:
        raise DeadNodeError(f"node {n.id} is dead")
    if n.monitor_drain == 0:
        return math.inf
    return n.energy / n.monitor_drain
