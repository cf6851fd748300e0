"""Brute-force reference implementations used only by the tests."""
from __future__ import annotations

import itertools


def rule_next(rule_number, left, center, right):
    # straight from the Wolfram table: bit index is the neighborhood read as binary
    return (rule_number >> int(f"{left}{center}{right}", 2)) & 1


def brute_step(rule_number, cells):
    n = len(cells)
    out = []
    for i in range(n):
        left = cells[i - 1] if i > 0 else 0
        right = cells[i + 1] if i < n - 1 else 0
        out.append(rule_next(rule_number, left, cells[i], right))
    return tuple(out)


def brute_basins(rule_number, n):
    """State tuple -> smallest state (as tuple) on the terminal cycle it reaches."""
    states = list(itertools.product((0, 1), repeat=n))
    succ = {s: brute_step(rule_number, s) for s in states}
    label = {}
    for s in states:
        x = s
        for _ in range(len(states)):  # after 2^n steps we are surely on the cycle
            x = succ[x]
        cycle = [x]
        y = succ[x]
        while y != x:
            cycle.append(y)
            y = succ[y]
        label[s] = min(cycle)
    return label
