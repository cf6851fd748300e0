import itertools
import random

import pytest
from hypothesis import given, strategies as st

from adhoc_ids.ca_engine import CaRule
from adhoc_ids.classifier import (
    CaTree,
    CaTreeNode,
    ClassifierError,
    build_tree,
    classify,
    encode_pattern,
    relevance_index,
    training_accuracy,
)
from adhoc_ids.ga_evolve import Encoding, GaConfig, basin_distribution
from adhoc_ids.patterns import PatternError, PatternVector, majority_class, make_two_class_dataset

SMALL_GA = GaConfig(20, 15, seed=0)


def test_encode_pattern_examples():
    assert encode_pattern([0.0], [0.5]).cells == (0,)
    assert encode_pattern([0.9], [0.5]).cells == (1,)
    assert encode_pattern([0.2, 0.7], [0.5, 0.5]).bits == "01"
    assert encode_pattern([0.6], [[0.25, 0.5, 0.75]]).bits == "110"
    with pytest.raises(PatternError):
        encode_pattern([0.1, 0.2], [0.5])
    with pytest.raises(PatternError):
        encode_pattern([0.1], [[0.6, 0.2]])


def test_relevance_index_examples():
    assert relevance_index({0: {1: 5}}) == 1.0
    assert relevance_index({0: {0: 3, 1: 3}}) == 0.5
    assert relevance_index({0: {0: 3, 1: 1}, 1: {1: 4}}) == 0.875
    with pytest.raises(PatternError):
        relevance_index({})


dists = st.dictionaries(
    st.integers(0, 7),
    st.dictionaries(st.integers(0, 2), st.integers(0, 5), min_size=1, max_size=3),
    min_size=1, max_size=5,
).filter(lambda d: any(sum(h.values()) for h in d.values()))


@given(dists)
def test_relevance_index_one_iff_pure(d):
    pure = all(sum(1 for v in h.values() if v) <= 1 for h in d.values())
    ri = relevance_index(d)
    assert 0 < ri <= 1
    assert (ri == 1.0) == pure


def test_single_class_gives_leaf():
    train = [PatternVector(p.cells, 3) for p in make_two_class_dataset(20, 6, seed=0)]
    tree = build_tree(train, ga_config=SMALL_GA)
    assert tree.depth == 0
    assert classify(tree, PatternVector((0,) * 6)) == 3


def test_separable_classes_give_depth_one():
    # class = first bit; with k=16 the identity rule alone separates every pattern
    train = [PatternVector(b, b[0]) for b in itertools.product((0, 1), repeat=4)]
    tree = build_tree(train, k=16, ga_config=SMALL_GA)
    assert tree.depth == 1
    assert training_accuracy(tree, train) == 1.0


def test_two_cluster_dataset_training_accuracy():
    train = make_two_class_dataset(200, 8, seed=1)
    tree = build_tree(train, ga_config=GaConfig(seed=1))
    # replay routing independently of classify()
    correct = 0
    for p in train:
        node = tree.root
        while not node.is_leaf:
            att = basin_distribution(node.ca, [PatternVector(p.cells, 0)])
            (key,) = att
            if key not in node.children:
                break
            node = node.children[key]
        correct += node.majority == p.label
    assert correct / len(train) >= 0.9


def test_build_tree_errors():
    with pytest.raises(ClassifierError):
        build_tree([])
    train = make_two_class_dataset(10, 6)
    with pytest.raises(ClassifierError):
        build_tree(train, k=1)
    with pytest.raises(ClassifierError):
        build_tree(train + [PatternVector((0, 1, 0), 0)])


def test_depth_limit_respected():
    rng = random.Random(0)
    # labels are noise, so the tree keeps splitting until the limit
    train = [PatternVector(tuple(rng.randint(0, 1) for _ in range(8)), rng.randint(0, 1)) for _ in range(120)]
    for limit in (0, 1, 2):
        tree = build_tree(train, k=4, depth_limit=limit, ga_config=SMALL_GA)
        assert tree.depth <= limit


def test_classify_unseen_basin_falls_back_to_parent_majority():
    root = CaTreeNode(1, CaRule(204), {0b0000: CaTreeNode(0)})
    tree = CaTree(root, 4, (0, 1), 2)
    assert classify(tree, PatternVector((0, 0, 0, 0))) == 0
    assert classify(tree, PatternVector((1, 0, 1, 0))) == 1
    with pytest.raises(PatternError):
        classify(tree, PatternVector((1, 0)))


def test_training_patterns_reach_pure_leaf_class():
    train = make_two_class_dataset(100, 8, seed=4)
    tree = build_tree(train, ga_config=GaConfig(seed=4))
    for p in train:
        node = tree.root
        while not node.is_leaf:
            node = node.children[next(iter(basin_distribution(node.ca, [PatternVector(p.cells, 0)])))]
        assert classify(tree, p) == node.majority


def test_held_out_determinism():
    train = make_two_class_dataset(200, 8, seed=5)
    held = make_two_class_dataset(50, 8, seed=500)
    a = build_tree(train, ga_config=GaConfig(seed=5))
    b = build_tree(train, ga_config=GaConfig(seed=5))
    assert [classify(a, p) for p in held] == [classify(b, p) for p in held]
    assert a.to_text() == b.to_text()


def test_serialization_round_trip():
    train = make_two_class_dataset(120, 8, seed=6)
    tree = build_tree(train, k=3, ga_config=GaConfig(seed=6))
    text = tree.to_text()
    back = CaTree.from_text(text)
    assert back.to_text() == text
    assert [classify(back, p) for p in train] == [classify(tree, p) for p in train]


def test_serialization_round_trip_matrix_encoding():
    train = make_two_class_dataset(60, 5, seed=7)
    tree = build_tree(train, k=3, ga_config=GaConfig(20, 10, seed=7), encoding=Encoding("matrix", 5))
    back = CaTree.from_text(tree.to_text())
    assert back.to_text() == tree.to_text()
    assert [classify(back, p) for p in train] == [classify(tree, p) for p in train]


def test_from_text_rejects_garbage():
    with pytest.raises(ClassifierError):
        CaTree.from_text("hello\n")
    with pytest.raises(ClassifierError):
        CaTree.from_text("catree 1\ncells 4\nclasses 0\ndepth_limit 1\nnode 0 leaf 0\n")


def test_majority_tie_goes_to_lower_class():
    assert majority_class([2, 1, 2, 1]) == 1
