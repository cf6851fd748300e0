"""Power-aware monitor election with cluster-local re-election.

A node's CA parameter defaults to its supportable duration (ticks it could
monitor before its battery runs out). Any callable ``(topology, node_id) ->
value`` can be passed as ``param`` to substitute another score.

Candidates are ranked best-first (descending parameter, ties to the lower
id). A node votes for the highest-ranked working-set candidate within the
hop radius; working-set members vote for themselves.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .topology import Role, Topology, supportable_duration

Param = Callable[[Topology, int], object]


class ElectionError(RuntimeError):
    category = "ElectionError"


class NoEligibleMonitors(ElectionError):
    category = "NoEligibleMonitors"


class IsolatedIneligibleNode(ElectionError):
    category = "IsolatedIneligibleNode"

    def __init__(self, nodes: Iterable[int]):
        self.nodes = tuple(sorted(nodes))
        super().__init__(f"no eligible monitor can ever reach nodes {list(self.nodes)}")


class IncompleteAssignment(ElectionError):
    category = "IncompleteAssignment"


class WorkingSetInvariantError(ElectionError):
    category = "WorkingSetInvariantError"


def ca_parameter(t: Topology, n: int):
    return supportable_duration(t.live_node(n))


def rank_key(value, node_id: int):
    return (-value, node_id)


@dataclass(frozen=True)
class Pol:
    order: tuple[int, ...]
    threshold: object
    params: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.order)

    def __iter__(self):
        return iter(self.order)


@dataclass
class MonitorAssignment:
    hop_radius: int
    monitors: frozenset[int]
    vote_map: dict[int, int]
    working_set: tuple[int, ...] = ()
    # represented-node count after each kept working-set extension, final radius only
    represented_history: tuple[int, ...] = ()


@dataclass
class Cluster:
    root: int
    members: set[int]
    hop_radius: int

    @property
    def nodes(self) -> set[int]:
        return self.members | {self.root}


def build_pol(t: Topology, threshold, param: Param = ca_parameter) -> Pol:
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    params = {i: param(t, i) for i in t.live_ids()}
    eligible = [i for i, v in params.items() if v >= threshold]
    eligible.sort(key=lambda i: rank_key(params[i], i))
    return Pol(tuple(eligible), threshold, {i: params[i] for i in eligible})


def vote(
    t: Topology,
    ws: Sequence[int],
    h: int,
    param: Param = ca_parameter,
    params: Optional[dict] = None,
) -> dict[int, int]:
    """Map each represented live node to the candidate it votes for."""
    if not ws:
        raise ValueError("working set is empty")
    if h < 1:
        raise ValueError("hop radius must be >= 1")
    if params is None:
        params = {c: param(t, c) for c in ws}
    ranked = sorted(ws, key=lambda c: rank_key(params[c], c))
    votes: dict[int, int] = {c: c for c in ws}
    for c in ranked:
        for node in t.hop_distances(c, limit=h):
            votes.setdefault(node, c)
    return votes


def _check_components(t: Topology, pol: Pol) -> None:
    eligible = set(pol.order)
    stranded: set[int] = set()
    for comp in t.components():
        if not comp & eligible:
            stranded |= comp
    if stranded:
        raise IsolatedIneligibleNode(stranded)


def select_monitors(t: Topology, pol: Pol, h0: int = 1, param: Param = ca_parameter) -> MonitorAssignment:
    """Grow a working set along the POL, escalating the hop radius until every live node is represented."""
    if not pol.order:
        raise NoEligibleMonitors("the parameter-ordered list is empty")
    if h0 < 1:
        raise ValueError("initial hop radius must be >= 1")
    _check_components(t, pol)
    params = dict(pol.params) or {c: param(t, c) for c in pol.order}
    live = len(t.live_ids())
    h = h0
    while True:
        ws = [pol.order[0]]
        votes = vote(t, ws, h, params=params)
        history = [len(votes)]
        for cand in pol.order[1:]:
            if len(votes) == live:
                break
            trial = vote(t, ws + [cand], h, params=params)
            if len(trial) > len(votes):
                ws.append(cand)
                votes = trial
                if history[-1] >= len(votes):
                    raise WorkingSetInvariantError("working set grew without new representation")
                history.append(len(votes))
        if len(votes) == live:
            return MonitorAssignment(h, frozenset(votes.values()), votes, tuple(ws), tuple(history))
        if h >= live:
            # unreachable once every component holds an eligible node
            raise WorkingSetInvariantError(f"coverage incomplete at hop radius {h}")
        h += 1


def form_clusters(t: Topology, a: MonitorAssignment) -> list[Cluster]:
    live = t.live_ids()
    missing = [i for i in live if i not in a.vote_map]
    if missing:
        raise IncompleteAssignment(f"nodes {missing} are not represented")
    clusters = {m: Cluster(m, set(), a.hop_radius) for m in sorted(a.monitors)}
    for node in live:
        root = a.vote_map[node]
        if node != root:
            clusters[root].members.add(node)
    return [clusters[m] for m in sorted(clusters)]


@dataclass(frozen=True)
class GlobalRerunNeeded:
    reason: str


@dataclass(frozen=True)
class Reelected:
    new_root: int
    old_root: int
    members: frozenset[int]
    stranded: frozenset[int]


def intra_cluster_reelect(t: Topology, c: Cluster, threshold, param: Param = ca_parameter):
    """Pick a replacement root from within the cluster.

    Only the cluster's own nodes are scored. Members left beyond the hop
    radius of the new root come back in ``stranded``; the caller may hand them
    to another monitor (see :func:`reassign_stranded`).
    """
    root = t.node(c.root)
    if root.alive and param(t, c.root) >= threshold:
        raise ValueError(f"root {c.root} still meets the threshold")
    scores = {}
    for m in sorted(c.members):
        if t.node(m).alive:
            scores[m] = param(t, m)
    qualified = [m for m, v in scores.items() if v >= threshold]
    if not qualified:
        return GlobalRerunNeeded(f"no member of cluster {c.root} meets the threshold")
    new_root = min(qualified, key=lambda m: rank_key(scores[m], m))
    reach = t.hop_distances(new_root, limit=c.hop_radius)
    others = set(scores) - {new_root}
    if root.alive:
        others.add(c.root)
    kept = frozenset(m for m in others if m in reach)
    stranded = frozenset(others - kept)
    return Reelected(new_root, c.root, kept, stranded)


def reassign_stranded(t: Topology, stranded: Iterable[int], roots: Iterable[int], h: int):
    """Nearest other monitor within ``h`` hops for each stranded node (ties to the lower id)."""
    roots = sorted(roots)
    out = {}
    for node in sorted(stranded):
        dist = t.hop_distances(node, limit=h)
        near = [(dist[r], r) for r in roots if r in dist]
        if not near:
            return GlobalRerunNeeded(f"stranded node {node} has no monitor within {h} hops")
        out[node] = min(near)[1]
    return out


@dataclass(frozen=True)
class JoinLocal:
    monitor: int


def handle_join(t: Topology, new_id: int, a: MonitorAssignment, threshold, param: Param = ca_parameter):
    value = param(t, new_id)
    best = max((param(t, m) for m in a.monitors if t.node(m).alive), default=None)
    if value >= threshold and (best is None or value > best):
        return GlobalRerunNeeded(f"joining node {new_id} outranks every monitor")
    dist = t.hop_distances(new_id, limit=a.hop_radius)
    near = [(dist[m], m) for m in a.monitors if m in dist and m != new_id]
    if not near:
        return GlobalRerunNeeded(f"joining node {new_id} has no monitor within {a.hop_radius} hops")
    return JoinLocal(min(near)[1])


def apply_roles(t: Topology, monitors: Iterable[int]) -> None:
    monitors = set(monitors)
    for n in t.nodes.values():
        if n.alive:
            n.role = Role.MONITOR if n.id in monitors else Role.MEMBER
