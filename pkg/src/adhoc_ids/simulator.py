"""Tick-driven simulation of monitor election, energy drain and intrusion detection.

Each tick applies, in order:

1. energy drain by role (monitors pay ``monitor_drain``, members ``member_drain``),
   nodes reaching zero die and their links disappear;
2. scheduled events are delivered to the source's cluster monitor and classified;
3. node joins, then every monitor that died or fell below the threshold is handled:
   ``clustered`` mode re-elects inside the cluster and only falls back to a full
   election when the cluster cannot recover, ``spaid`` mode always re-runs the
   election over the whole network;
4. a :class:`TickRecord` is appended.

Election errors (no eligible monitor, or a component without one) end the run
early and are recorded in the summary.
"""
from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence

from .classifier import CaTree, build_tree, classify
from .election import (
    Cluster,
    ElectionError,
    GlobalRerunNeeded,
    JoinLocal,
    MonitorAssignment,
    apply_roles,
    build_pol,
    ca_parameter,
    form_clusters,
    handle_join,
    intra_cluster_reelect,
    reassign_stranded,
    select_monitors,
)
from .ga_evolve import GaConfig
from .patterns import NORMAL, PatternVector, make_two_class_dataset
from .topology import (
    EnergySpec,
    NodeState,
    Role,
    Topology,
    as_energy,
    build_geometric,
    check_drains,
)


class Mode(str, Enum):
    CLUSTERED = "clustered"
    SPAID = "spaid"


class ConfigError(ValueError):
    pass


class SimulationInvariantError(AssertionError):
    pass


def derive_seed(seed: int, name: str) -> int:
    """Named sub-seed, stable across processes and Python versions."""
    digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class Event:
    tick: int
    source: int
    pattern: PatternVector

    @property
    def label(self) -> int:
        return self.pattern.label


@dataclass(frozen=True)
class Join:
    tick: int
    x: float
    y: float
    energy: Fraction


@dataclass(frozen=True)
class ScenarioConfig:
    node_count: int
    area_side: float = 300.0
    radio_range: float = 100.0
    energy_init: EnergySpec = EnergySpec("uniform", 500.0, 1000.0)
    member_drain: Fraction = Fraction(1, 5)
    monitor_drain: Fraction = Fraction(2)
    threshold: Fraction = Fraction(50)
    initial_hop_radius: int = 1
    mode: Mode = Mode.CLUSTERED
    ticks: int = 1000
    seed: int = 0
    generated_events: int = 100
    events: tuple[Event, ...] = ()
    joins: tuple[Join, ...] = ()
    train_size: int = 200
    pattern_cells: int = 8
    basin_target: int = 8
    depth_limit: int = 4
    purity_stop: float = 0.95
    ga_population: int = 40
    ga_generations: int = 50
    ga_mutation_rate: float = 0.02
    ga_elite_fraction: float = 0.1
    ga_cull_fraction: float = 0.3

    def __post_init__(self) -> None:
        for name in ("member_drain", "monitor_drain", "threshold"):
            object.__setattr__(self, name, as_energy(getattr(self, name)))
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.node_count < 1:
            raise ConfigError("node_count must be >= 1")
        if self.area_side <= 0 or self.radio_range <= 0:
            raise ConfigError("area_side and radio_range must be > 0")
        if self.ticks < 1:
            raise ConfigError("ticks must be >= 1")
        if self.threshold < 0:
            raise ConfigError("threshold must be >= 0")
        if self.initial_hop_radius < 1:
            raise ConfigError("initial_hop_radius must be >= 1")
        try:
            check_drains(self.member_drain, self.monitor_drain)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.generated_events < 0 or self.train_size < 1 or self.pattern_cells < 2:
            raise ConfigError("generated_events >= 0, train_size >= 1, pattern_cells >= 2 required")
        if self.basin_target < 2 or self.depth_limit < 0 or not 0 < self.purity_stop <= 1:
            raise ConfigError("basin_target >= 2, depth_limit >= 0, purity_stop in (0, 1] required")
        for ev in self.events:
            if not 1 <= ev.tick <= self.ticks or len(ev.pattern.cells) != self.pattern_cells:
                raise ConfigError(f"event {ev} is outside the run or has the wrong pattern length")
        self.ga_config()

    def ga_config(self) -> GaConfig:
        try:
            return GaConfig(
                self.ga_population,
                self.ga_generations,
                self.ga_mutation_rate,
                self.ga_elite_fraction,
                self.ga_cull_fraction,
                derive_seed(self.seed, "ga"),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class TickRecord:
    tick: int
    energies: tuple[Fraction, ...]
    roles: tuple[Role, ...]
    monitor_energy: Fraction
    drained_energy: Fraction
    events: tuple[str, ...]
    detections: tuple[str, ...]
    coverage: float

    @property
    def live(self) -> int:
        return sum(r is not Role.DEAD for r in self.roles)

    @property
    def monitors(self) -> int:
        return sum(r is Role.MONITOR for r in self.roles)


@dataclass
class RunSummary:
    mode: Mode
    seed: int
    ticks_completed: int = 0
    total_monitoring_energy: Fraction = Fraction(0)
    total_drained_energy: Fraction = Fraction(0)
    full_reruns: int = 0
    intra_cluster_reelections: int = 0
    stranded_reassignments: int = 0
    # most roles changed by one in-cluster re-election, minus its stranded members
    reelection_role_excess: int = 0
    mean_coverage: float = 0.0
    events_delivered: int = 0
    events_dropped: int = 0
    true_positives: int = 0
    false_positives: int = 0
    true_negatives: int = 0
    false_negatives: int = 0
    misses: int = 0
    final_live_nodes: int = 0
    terminated: str = "none"
    initial_monitors: tuple[int, ...] = ()

    @property
    def detection_accuracy(self) -> Optional[float]:
        if not self.events_delivered:
            return None
        return (self.true_positives + self.true_negatives) / self.events_delivered


@dataclass(frozen=True)
class Alert:
    monitor: int
    predicted: int


@dataclass(frozen=True)
class Miss:
    pass


MISS = Miss()


def detect(node_root: dict[int, int], t: Topology, tree: CaTree, event: Event):
    """Route an event to its cluster monitor; that monitor classifies it or the event is missed."""
    root = node_root.get(event.source)
    if root is None or not t.node(root).alive:
        return MISS
    return Alert(root, classify(tree, event.pattern))


def outcome(result, label: int) -> str:
    intrusive = label != NORMAL
    if isinstance(result, Miss):
        return "fn" if intrusive else "tn"
    flagged = result.predicted != NORMAL
    if intrusive:
        return "tp" if flagged else "fn"
    return "fp" if flagged else "tn"


def train_classifier(cfg: ScenarioConfig) -> CaTree:
    train = make_two_class_dataset(cfg.train_size, cfg.pattern_cells, derive_seed(cfg.seed, "train"))
    return build_tree(train, cfg.basin_target, cfg.depth_limit, cfg.purity_stop, cfg.ga_config())


def build_topology(cfg: ScenarioConfig) -> Topology:
    return build_geometric(
        cfg.node_count,
        cfg.area_side,
        cfg.radio_range,
        cfg.energy_init,
        derive_seed(cfg.seed, "topology"),
        cfg.member_drain,
        cfg.monitor_drain,
    )


def build_schedule(cfg: ScenarioConfig) -> list[Event]:
    """Explicit events plus ``generated_events`` random ones, ordered by tick."""
    seed = derive_seed(cfg.seed, "schedule")
    patterns = make_two_class_dataset(cfg.generated_events, cfg.pattern_cells, seed)
    rng = random.Random(seed)
    generated = [
        Event(rng.randint(1, cfg.ticks), rng.randrange(cfg.node_count), p) for p in patterns
    ]
    return sorted(list(cfg.events) + generated, key=lambda e: e.tick)


@dataclass
class _State:
    t: Topology
    clusters: dict[int, Cluster] = field(default_factory=dict)
    node_root: dict[int, int] = field(default_factory=dict)
    hop_radius: int = 1

    def install(self, a: MonitorAssignment) -> None:
        self.hop_radius = a.hop_radius
        self.clusters = {c.root: c for c in form_clusters(self.t, a)}
        self.reindex()
        apply_roles(self.t, self.clusters)

    def reindex(self) -> None:
        self.node_root = {}
        for root, c in self.clusters.items():
            self.node_root[root] = root
            for m in c.members:
                self.node_root[m] = root

    def assignment(self) -> MonitorAssignment:
        return MonitorAssignment(self.hop_radius, frozenset(self.clusters), dict(self.node_root))

    def coverage(self) -> float:
        live = self.t.live_ids()
        if not live:
            return 0.0
        covered = 0
        for root, c in self.clusters.items():
            if not self.t.node(root).alive:
                continue
            reach = self.t.hop_distances(root, limit=self.hop_radius)
            covered += 1 + sum(1 for m in c.members if m in reach)
        return covered / len(live)


def run(cfg: ScenarioConfig, tree: Optional[CaTree] = None) -> tuple[RunSummary, list[TickRecord]]:
    if tree is None:
        tree = train_classifier(cfg)
    state = _State(build_topology(cfg))
    t = state.t
    schedule = build_schedule(cfg)
    joins = sorted(cfg.joins, key=lambda j: j.tick)
    summary = RunSummary(cfg.mode, cfg.seed)
    records: list[TickRecord] = []
    monitor_energy = Fraction(0)
    drained = Fraction(0)
    coverage_sum = 0.0

    def full_election() -> None:
        pol = build_pol(t, cfg.threshold)
        a = select_monitors(t, pol, cfg.initial_hop_radius)
        state.install(a)
        check_coverage()

    def check_coverage() -> None:
        for root, c in state.clusters.items():
            reach = t.hop_distances(root, limit=state.hop_radius)
            if not c.members <= reach.keys():
                raise SimulationInvariantError(f"cluster {root} has members beyond the hop radius")

    try:
        full_election()
    except ElectionError as exc:
        summary.terminated = f"{exc.category}@0"
        summary.final_live_nodes = len(t.live_ids())
        return summary, records
    summary.initial_monitors = tuple(sorted(state.clusters))

    coverage = state.coverage()
    ev_idx = 0
    join_idx = 0
    for tick in range(1, cfg.ticks + 1):
        # (1) drain
        died = False
        for node in t.nodes.values():
            if not node.alive:
                continue
            d = min(node.energy, node.drain_rate())
            node.energy -= d
            drained += d
            if node.role is Role.MONITOR:
                monitor_energy += d
            if node.energy == 0 and d > 0:
                node.role = Role.DEAD
                died = True
        if died:
            t.refresh_links()
            for c in state.clusters.values():
                c.members = {m for m in c.members if t.node(m).alive}
            state.reindex()

        # (2) detection
        detections = []
        while ev_idx < len(schedule) and schedule[ev_idx].tick == tick:
            ev = schedule[ev_idx]
            ev_idx += 1
            if ev.source not in t.nodes or not t.node(ev.source).alive:
                summary.events_dropped += 1
                detections.append("dropped")
                continue
            res = detect(state.node_root, t, tree, ev)
            code = outcome(res, ev.label)
            summary.events_delivered += 1
            if isinstance(res, Miss):
                summary.misses += 1
            setattr(summary, _COUNTER[code], getattr(summary, _COUNTER[code]) + 1)
            detections.append(code if isinstance(res, Alert) else f"miss-{code}")

        # (3) joins and threshold checks
        events: list[str] = []
        rerun = False
        changed = died
        while join_idx < len(joins) and joins[join_idx].tick == tick:
            j = joins[join_idx]
            join_idx += 1
            new_id = max(t.nodes) + 1
            t.add_node(NodeState(new_id, j.x, j.y, cfg.radio_range, j.energy,
                                 cfg.member_drain, cfg.monitor_drain))
            changed = True
            res = handle_join(t, new_id, state.assignment(), cfg.threshold)
            if isinstance(res, JoinLocal):
                state.clusters[res.monitor].members.add(new_id)
                state.node_root[new_id] = res.monitor
                events.append(f"join:{new_id}->{res.monitor}")
            else:
                events.append(f"join:{new_id}")
                rerun = True

        failing = [
            r for r in sorted(state.clusters)
            if not t.node(r).alive or ca_parameter(t, r) < cfg.threshold
        ]
        if failing and cfg.mode is Mode.SPAID:
            rerun = True
        elif failing and not rerun:
            for root in failing:
                if root not in state.clusters:
                    continue
                ok = _reelect_in_cluster(state, root, cfg.threshold, summary, events)
                changed = True
                if not ok:
                    rerun = True
                    break

        if rerun:
            summary.full_reruns += 1
            events.append("full")
            changed = True
            try:
                full_election()
            except ElectionError as exc:
                summary.terminated = f"{exc.category}@{tick}"

        # (4) record
        if changed:
            coverage = state.coverage()
        coverage_sum += coverage
        records.append(TickRecord(
            tick,
            tuple(n.energy for _, n in sorted(t.nodes.items())),
            tuple(n.role for _, n in sorted(t.nodes.items())),
            monitor_energy,
            drained,
            tuple(events),
            tuple(detections),
            coverage,
        ))
        summary.ticks_completed = tick
        if summary.terminated != "none":
            break

    summary.total_monitoring_energy = monitor_energy
    summary.total_drained_energy = drained
    summary.mean_coverage = coverage_sum / len(records) if records else 0.0
    summary.final_live_nodes = len(t.live_ids())
    return summary, records


_COUNTER = {"tp": "true_positives", "fp": "false_positives", "tn": "true_negatives", "fn": "false_negatives"}


def _reelect_in_cluster(state: _State, root: int, threshold, summary: RunSummary, events: list[str]) -> bool:
    """Re-root one cluster in place; False when a full election is needed."""
    t = state.t
    cluster = state.clusters[root]
    scope = cluster.nodes
    touched: set[int] = set()

    def scoped_param(topo: Topology, n: int):
        touched.add(n)
        return ca_parameter(topo, n)

    roles_before = {i: n.role for i, n in t.nodes.items()}
    res = intra_cluster_reelect(t, cluster, threshold, scoped_param)
    if not touched <= scope:
        raise SimulationInvariantError(
            f"re-election of cluster {root} read nodes {sorted(touched - scope)} outside it"
        )
    if isinstance(res, GlobalRerunNeeded):
        return False
    moves = {}
    if res.stranded:
        others = [r for r in state.clusters if r != root and t.node(r).alive]
        moves = reassign_stranded(t, res.stranded, others, state.hop_radius)
        if isinstance(moves, GlobalRerunNeeded):
            return False

    del state.clusters[root]
    state.clusters[res.new_root] = Cluster(res.new_root, set(res.members), state.hop_radius)
    for node, target in moves.items():
        state.clusters[target].members.add(node)
    state.reindex()
    old = t.node(root)
    if old.alive:
        old.role = Role.MEMBER
    t.node(res.new_root).role = Role.MONITOR

    changed_roles = sum(1 for i, n in t.nodes.items() if roles_before[i] is not n.role)
    if changed_roles > 2 + len(res.stranded):
        raise SimulationInvariantError(f"re-election changed {changed_roles} roles")
    summary.reelection_role_excess = max(summary.reelection_role_excess, changed_roles - len(res.stranded))
    summary.intra_cluster_reelections += 1
    summary.stranded_reassignments += len(moves)
    events.append(f"intra:{root}->{res.new_root}")
    return True


@dataclass
class SeedComparison:
    seed: int
    primary: RunSummary
    baseline: RunSummary

    @property
    def energy_delta(self) -> Fraction:
        return self.primary.total_monitoring_energy - self.baseline.total_monitoring_energy

    @property
    def rerun_delta(self) -> int:
        return self.primary.full_reruns - self.baseline.full_reruns

    @property
    def coverage_delta(self) -> float:
        return self.primary.mean_coverage - self.baseline.mean_coverage


@dataclass
class CompareReport:
    primary_mode: Mode
    baseline_mode: Mode
    rows: list[SeedComparison]
    # (mode, seed) -> [(tick, cumulative monitoring energy)]
    series: dict[tuple[Mode, int], list[tuple[int, Fraction]]]
    traces: dict[tuple[Mode, int], list[TickRecord]] = field(default_factory=dict)

    def _mean(self, values) -> float:
        values = list(values)
        return sum(values) / len(values) if values else 0.0

    @property
    def mean_energy_delta(self) -> float:
        return self._mean(float(r.energy_delta) for r in self.rows)

    @property
    def mean_rerun_delta(self) -> float:
        return self._mean(r.rerun_delta for r in self.rows)

    @property
    def mean_coverage_delta(self) -> float:
        return self._mean(r.coverage_delta for r in self.rows)

    @property
    def rerun_win_fraction(self) -> float:
        """Share of seeds where the primary mode needed no more full reruns than the baseline."""
        return self._mean(1.0 if r.rerun_delta <= 0 else 0.0 for r in self.rows)

    def mean_reruns(self, which: str) -> float:
        return self._mean(getattr(r, which).full_reruns for r in self.rows)


def energy_series(records: Sequence[TickRecord]) -> list[tuple[int, Fraction]]:
    return [(r.tick, r.monitor_energy) for r in records]


def compare(
    cfg: ScenarioConfig,
    seeds: Sequence[int],
    primary: Mode = Mode.CLUSTERED,
    baseline: Mode = Mode.SPAID,
) -> CompareReport:
    """Paired runs of two modes on identical topologies, schedules and classifiers."""
    if not seeds:
        raise ConfigError("compare needs at least one seed")
    rows = []
    series = {}
    traces = {}
    for seed in seeds:
        base_cfg = replace(cfg, seed=seed)
        tree = train_classifier(base_cfg)
        out = {}
        for mode in (primary, baseline):
            summary, records = run(replace(base_cfg, mode=mode), tree)
            out[mode] = summary
            series[(mode, seed)] = energy_series(records)
            traces[(mode, seed)] = records
        rows.append(SeedComparison(seed, out[primary], out[baseline]))
    return CompareReport(primary, baseline, rows, series, traces)
