import math
import random

import pytest
from hypothesis import given, strategies as st

from cartwheels.adtree import (
    ADTree,
    BitsetCounter,
    ClassHistogram,
    build_adtree,
    class_masks_from_labels,
    entropy,
    query_counts,
    split_entropy,
)
from cartwheels.descriptors import Descriptor, DescriptorFamily, ObjectUniverse
from cartwheels.expressions import Literal

# labeling of o1..o5 from the greedy cover: X4, X1, X1, X2, X4
CLASSES = ("X1", "X2", "X4")
GREEDY_LABELS = [2, 0, 0, 1, 2]


def as_named(h):
    return h.as_dict(CLASSES)


@pytest.fixture
def greedy(toy):
    u, _, y = toy
    return build_adtree(y, GREEDY_LABELS, u, max_query_depth=3)


def test_root_histogram(greedy):
    assert as_named(query_counts(greedy, [])) == {"X4": 2, "X1": 2, "X2": 1}


def test_positive_query(greedy):
    assert as_named(query_counts(greedy, [Literal(1)])) == {"X1": 2, "X2": 1}


def test_two_literal_query(greedy):
    assert as_named(query_counts(greedy, [Literal(2), Literal(1)])) == {"X1": 1}


def test_negated_queries_by_subtraction(greedy):
    # !Y3 & !Y1 reaches only o4
    assert as_named(query_counts(greedy, [Literal(2, True), Literal(0, True)])) == {"X2": 1}


def test_contradiction_is_empty(greedy):
    assert query_counts(greedy, [Literal(1), Literal(1, True)]).total == 0


def test_query_too_deep(greedy):
    with pytest.raises(ValueError, match="exceeds"):
        query_counts(greedy, [Literal(i) for i in range(4)])


def test_unknown_feature(toy):
    u, _, y = toy
    tree = build_adtree(y, GREEDY_LABELS, u, 2, feature_indices=[0, 1])
    with pytest.raises(ValueError, match="not a feature"):
        tree.query_counts([Literal(3)])


def test_split_entropy_greedy_y3(greedy):
    expect = 0.4 * 1.0 + 0.6 * math.log2(3)
    assert split_entropy(greedy, [], 2) == pytest.approx(expect, abs=1e-12)
    assert split_entropy(greedy, [], 2) == pytest.approx(1.3510, abs=1e-4)


def test_pure_split_has_zero_entropy():
    feats = [(0, 0b0011)]
    tree = ADTree(feats, [0b0011, 0b1100], 0b1111, 2)
    assert split_entropy(tree, [], 0) == 0.0


def test_useless_split_keeps_parent_entropy():
    # classes {o1,o3} / {o2,o4}; feature {o1,o2} splits each class in half
    tree = ADTree([(0, 0b0011)], [0b0101, 0b1010], 0b1111, 2)
    assert split_entropy(tree, [], 0) == pytest.approx(query_counts(tree, []).entropy())


def test_split_entropy_empty_context_is_infinite():
    tree = ADTree([(0, 0b01), (1, 0b10)], [0b11], 0b11, 3)
    assert split_entropy(tree, [Literal(0), Literal(1)], 0) == math.inf


def test_depth_zero_rejected(toy):
    u, _, y = toy
    with pytest.raises(ValueError):
        build_adtree(y, GREEDY_LABELS, u, max_query_depth=0)


def test_single_object_universe():
    u = ObjectUniverse(("a",))
    tree = ADTree([(0, 0)], [1], u.full, 2)
    assert query_counts(tree, []).total == 1


def test_labeling_must_be_total(toy):
    u, _, y = toy
    with pytest.raises(ValueError):
        build_adtree(y, [0, 1], u, 2)


def test_sparse_nodes_only():
    # features 0 and 1 are disjoint, so their conjunction node is never built
    tree = ADTree([(0, 0b0011), (1, 0b1100)], [0b1111], 0b1111, 2)
    assert tree.node_count == 3
    lazy = ADTree([(0, 0b0011), (1, 0b1100)], [0b1111], 0b1111, 2, lazy=True)
    assert lazy.node_count == 1
    lazy.query_counts([Literal(0)])
    assert lazy.node_count == 2


def test_entropy_helpers():
    assert entropy([2, 2]) == 1.0
    assert entropy([0, 5]) == 0.0
    assert entropy([]) == 0.0
    assert ClassHistogram((3, 1)) - ClassHistogram((1, 1)) == ClassHistogram((2, 0))


@st.composite
def instances(draw):
    n = draw(st.integers(1, 12))
    k = draw(st.integers(1, 6))
    masks = draw(st.lists(st.integers(0, (1 << n) - 1), min_size=k, max_size=k))
    n_classes = draw(st.integers(1, 4))
    labels = draw(st.lists(st.integers(0, n_classes - 1), min_size=n, max_size=n))
    return n, masks, labels, n_classes


def _context(draw_ints, k):
    rng = random.Random(draw_ints)
    size = rng.randint(0, min(2, k - 1))
    idx = rng.sample(range(k), size)
    return [Literal(i, rng.random() < 0.5) for i in idx]


@given(instances(), st.integers(0, 10**6))
def test_yes_plus_no_is_parent(inst, ctx_seed):
    n, masks, labels, n_classes = inst
    k = len(masks)
    cm = class_masks_from_labels(labels, n_classes)
    tree = ADTree(list(enumerate(masks)), cm, (1 << n) - 1, 3)
    ctx = _context(ctx_seed, k)
    used = {lit.index for lit in ctx}
    for f in range(k):
        if f in used:
            continue
        yes = tree.query_counts([*ctx, Literal(f)])
        no = tree.query_counts([*ctx, Literal(f, True)])
        assert yes.total + no.total == tree.query_counts(ctx).total


@given(instances(), st.integers(0, 10**6), st.randoms())
def test_split_entropy_invariant_under_label_renaming(inst, ctx_seed, rnd):
    n, masks, labels, n_classes = inst
    perm = list(range(n_classes))
    rnd.shuffle(perm)
    renamed = [perm[c] for c in labels]
    full = (1 << n) - 1
    a = ADTree(list(enumerate(masks)), class_masks_from_labels(labels, n_classes), full, 3)
    b = BitsetCounter(list(enumerate(masks)), class_masks_from_labels(renamed, n_classes), full, 3)
    ctx = _context(ctx_seed, len(masks))
    used = {lit.index for lit in ctx}
    for f in range(len(masks)):
        if f not in used:
            assert split_entropy(a, ctx, f) == pytest.approx(split_entropy(b, ctx, f), abs=1e-12)


def test_bitset_and_adtree_agree_on_random_family():
    rng = random.Random(3)
    u = ObjectUniverse(tuple(f"o{i}" for i in range(80)))
    descs = [Descriptor(f"D{i}", rng.getrandbits(80) | 1 << i) for i in range(20)]
    descs.append(Descriptor("rest", u.full & ~descs[0].members))
    fam = DescriptorFamily("Y", u, descs)
    labels = [rng.randrange(3) for _ in range(80)]
    tree = build_adtree(fam, labels, u, 3, lazy=True)
    bits = BitsetCounter([(i, fam.members(i)) for i in range(len(fam))], class_masks_from_labels(labels), u.full, 3)
    for _ in range(300):
        idx = rng.sample(range(len(fam)), rng.randint(0, 3))
        q = [Literal(i, rng.random() < 0.5) for i in idx]
        assert tree.query_counts(q) == bits.query_counts(q)
