"""Inverted tree of CA classifiers over attractor basins.

Each internal node holds a CA (elementary rule or dependency matrix). A
pattern is routed to the child keyed by the attractor it falls into under
that CA; leaves carry a class id. Impure basins get their own CA, so the
most specific splits end up closest to the leaves.

Serialized form (one record per line, nodes in preorder)::

    catree 1
    cells <n>
    classes <class ids, space separated>
    depth_limit <d>
    node <id> leaf <class>
    node <id> rule <rule number> <majority class>
    node <id> matrix <row bits,row bits,...> <majority class>
    edge <parent id> <attractor bits> <child id>
    end
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .ca_engine import CaRule, DependencyMatrix, pack, unpack
from .ga_evolve import (
    Chromosome,
    Encoding,
    GaConfig,
    RULE_ENCODING,
    attractor_of,
    basin_distribution,
    evolve,
)
from .patterns import (
    BasinDistribution,
    PatternError,
    PatternVector,
    encode_pattern,
    majority_class,
    relevance_index,
)

__all__ = [
    "BasinDistribution",
    "CaTree",
    "CaTreeNode",
    "ClassifierError",
    "PatternVector",
    "build_tree",
    "classify",
    "encode_pattern",
    "relevance_index",
    "training_accuracy",
]


class ClassifierError(ValueError):
    pass


@dataclass
class CaTreeNode:
    majority: int
    ca: Union[CaRule, DependencyMatrix, None] = None
    children: dict[int, "CaTreeNode"] = field(default_factory=dict)

    @property
    def is_leaf(self) -> bool:
        return self.ca is None

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(c.depth() for c in self.children.values())


@dataclass
class CaTree:
    root: CaTreeNode
    cells: int
    classes: tuple[int, ...]
    depth_limit: int

    @property
    def class_count(self) -> int:
        return len(self.classes)

    @property
    def depth(self) -> int:
        return self.root.depth()

    def to_text(self) -> str:
        lines = [
            "catree 1",
            f"cells {self.cells}",
            "classes " + " ".join(map(str, self.classes)),
            f"depth_limit {self.depth_limit}",
        ]
        counter = 0

        def emit(node: CaTreeNode) -> int:
            nonlocal counter
            my_id = counter
            counter += 1
            if node.is_leaf:
                lines.append(f"node {my_id} leaf {node.majority}")
                return my_id
            if isinstance(node.ca, CaRule):
                lines.append(f"node {my_id} rule {node.ca.rule_number} {node.majority}")
            else:
                lines.append(f"node {my_id} matrix {node.ca.to_text()} {node.majority}")
            for att in sorted(node.children):
                child_id = emit(node.children[att])
                bits = "".join(map(str, unpack(att, self.cells)))
                lines.append(f"edge {my_id} {bits} {child_id}")
            return my_id

        emit(self.root)
        lines.append("end")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CaTree":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        try:
            if lines[0] != "catree 1":
                raise ClassifierError("not a catree file")
            cells = int(lines[1].split()[1])
            classes = tuple(int(v) for v in lines[2].split()[1:])
            depth_limit = int(lines[3].split()[1])
            nodes: dict[int, CaTreeNode] = {}
            for ln in lines[4:]:
                parts = ln.split()
                if parts[0] == "node":
                    nid, kind = int(parts[1]), parts[2]
                    if kind == "leaf":
                        nodes[nid] = CaTreeNode(int(parts[3]))
                    elif kind == "rule":
                        nodes[nid] = CaTreeNode(int(parts[4]), CaRule(int(parts[3])))
                    elif kind == "matrix":
                        nodes[nid] = CaTreeNode(int(parts[4]), DependencyMatrix.from_text(parts[3]))
                    else:
                        raise ClassifierError(f"unknown node kind {kind!r}")
                elif parts[0] == "edge":
                    parent, bits, child = int(parts[1]), parts[2], int(parts[3])
                    nodes[parent].children[pack(int(b) for b in bits)] = nodes[child]
                elif parts[0] == "end":
                    break
                else:
                    raise ClassifierError(f"unknown record {parts[0]!r}")
            else:
                raise ClassifierError("missing end record")
            return cls(nodes[0], cells, classes, depth_limit)
        except (IndexError, KeyError, ValueError) as exc:
            if isinstance(exc, ClassifierError):
                raise
            raise ClassifierError(f"malformed catree text: {exc}") from None


def _node_seed(base: int, path: str) -> int:
    digest = hashlib.sha256(f"{base}/{path}".encode()).digest()
    return int.from_bytes(digest[:4], "big")


def build_tree(
    train: Sequence[PatternVector],
    k: int = 4,
    depth_limit: int = 4,
    purity_stop: float = 0.95,
    ga_config: GaConfig = GaConfig(),
    encoding: Optional[Encoding] = None,
) -> CaTree:
    """Grow a CA tree over labelled patterns.

    At each node a GA searches for the CA whose basins best separate the
    classes. The GA score is the relevance index scaled by
    ``min(1, k / occupied basins)``, so CAs that shatter the node's patterns
    into many small basins do not win by memorizing them. A node becomes a
    leaf when its majority fraction reaches ``purity_stop``, at
    ``depth_limit``, or when no CA splits its patterns.
    """
    if not train:
        raise ClassifierError("empty training set")
    if k < 2:
        raise ClassifierError(f"k must be >= 2, got {k}")
    if depth_limit < 0:
        raise ClassifierError("depth_limit must be >= 0")
    cells = len(train[0].cells)
    if any(len(p.cells) != cells for p in train):
        raise ClassifierError("training patterns have mixed lengths")
    if any(p.label is None for p in train):
        raise ClassifierError("training patterns must be labelled")
    if encoding is None:
        encoding = RULE_ENCODING
    if encoding.kind == "matrix" and encoding.cells != cells:
        raise ClassifierError("matrix encoding size does not match pattern length")

    def grow(patterns: list[PatternVector], depth: int, path: str) -> CaTreeNode:
        labels = [p.label for p in patterns]
        majority = majority_class(labels)
        share = labels.count(majority) / len(labels)
        if share >= purity_stop or depth >= depth_limit:
            return CaTreeNode(majority)

        def score(c: Chromosome) -> float:
            dist = basin_distribution(encoding.decode(c.genome), patterns)
            return relevance_index(dist) * min(1.0, k / len(dist))

        result = evolve(ga_config.with_seed(_node_seed(ga_config.seed, path)), patterns, encoding, score)
        ca = encoding.decode(result.best.genome)
        groups: dict[int, list[PatternVector]] = {}
        for p in patterns:
            groups.setdefault(attractor_of(ca, p.cells), []).append(p)
        if len(groups) < 2:
            return CaTreeNode(majority)
        node = CaTreeNode(majority, ca)
        for att in sorted(groups):
            node.children[att] = grow(groups[att], depth + 1, f"{path}.{att}")
        return node

    root = grow(list(train), 0, "r")
    classes = tuple(sorted({p.label for p in train}))
    return CaTree(root, cells, classes, depth_limit)


def classify(tree: CaTree, p: PatternVector) -> int:
    if len(p.cells) != tree.cells:
        raise PatternError(f"pattern has {len(p.cells)} cells, tree expects {tree.cells}")
    node = tree.root
    while not node.is_leaf:
        child = node.children.get(attractor_of(node.ca, p.cells))
        if child is None:
            return node.majority
        node = child
    return node.majority


def training_accuracy(tree: CaTree, patterns: Sequence[PatternVector]) -> float:
    if not patterns:
        raise ClassifierError("no patterns")
    return sum(classify(tree, p) == p.label for p in patterns) / len(patterns)
