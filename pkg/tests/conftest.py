from __future__ import annotations

from fractions import Fraction

import pytest

from adhoc_ids.topology import NodeState, Topology

ACCEPTANCE_LINES: list[str] = []


def line_topology(energies, spacing=10.0, monitor_drain=Fraction(2), member_drain=Fraction(1, 5)):
    """Nodes 0..n-1 on a line, each linked only to its immediate neighbors."""
    return Topology(
        NodeState(i, i * spacing, 0.0, spacing * 1.05, Fraction(e), member_drain, monitor_drain)
        for i, e in enumerate(energies)
    )


def placed_topology(points, radio_range=10.5, energies=None):
    energies = energies or [100] * len(points)
    return Topology(
        NodeState(i, x, y, radio_range, Fraction(e), Fraction(1, 5), Fraction(2))
        for i, ((x, y), e) in enumerate(zip(points, energies))
    )


def to_networkx(t: Topology):
    import networkx as nx

    g = nx.Graph()
    g.add_nodes_from(t.live_ids())
    g.add_edges_from(t.links())
    return g


@pytest.fixture
def acceptance_report():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
