"""Counting structures for class histograms under literal conjunctions.

:class:`ADTree` is a sparse all-dimensions tree: a node exists for every
non-empty conjunction of positive feature literals (features taken in index
order) up to ``max_query_depth``. Counts under negated literals are derived
by subtraction, ``n(C & !f) = n(C) - n(C & f)``.

:class:`BitsetCounter` answers the same queries by direct bitset
intersection and is used for small universes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .descriptors import DescriptorFamily, ObjectUniverse
from .expressions import Literal

INF = math.inf


def entropy(counts: Iterable[int]) -> float:
    """Shannon entropy in bits of a count vector (0 log 0 = 0)."""
    counts = sorted(c for c in counts if c)
    n = sum(counts)
    if n == 0:
        return 0.0
    return -sum(c / n * math.log2(c / n) for c in counts)


@dataclass(frozen=True)
class ClassHistogram:
    counts: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.counts)

    def entropy(self) -> float:
        return entropy(self.counts)

    def as_dict(self, labels: Sequence[str] | None = None) -> dict:
        names = labels if labels is not None else range(len(self.counts))
        return {name: c for name, c in zip(names, self.counts) if c}

    def __sub__(self, other: ClassHistogram) -> ClassHistogram:
        return ClassHistogram(tuple(a - b for a, b in zip(self.counts, other.counts)))


def weighted_split_entropy(parent: ClassHistogram, yes: ClassHistogram) -> float:
    n = parent.total
    if n == 0:
        return INF
    no = parent - yes
    return yes.total / n * yes.entropy() + no.total / n * no.entropy()


def class_masks_from_labels(labeling: Sequence[int], n_classes: int | None = None) -> list[int]:
    k = (max(labeling) + 1 if labeling else 0) if n_classes is None else n_classes
    masks = [0] * k
    for pos, c in enumerate(labeling):
        masks[c] |= 1 << pos
    return masks


class _Counter:
    """Shared query plumbing for both counting strategies."""

    def __init__(self, features: Sequence[tuple[int, int]], class_masks: Sequence[int], max_query_depth: int) -> None:
        if max_query_depth < 1:
            raise ValueError(f"max_query_depth must be >= 1, got {max_query_depth}")
        self.max_query_depth = max_query_depth
        self.class_masks = tuple(class_masks)
        self.feature_ids = tuple(i for i, _ in features)
        self.feature_masks = tuple(m for _, m in features)
        self._pos = {i: p for p, i in enumerate(self.feature_ids)}
        if len(self._pos) != len(self.feature_ids):
            raise ValueError("duplicate feature index")

    def _hist(self, mask: int) -> tuple[int, ...]:
        return tuple((mask & c).bit_count() for c in self.class_masks)

    def _positions(self, query: Sequence[Literal]) -> tuple[list[int], list[int]] | None:
        if len(query) > self.max_query_depth:
            raise ValueError(f"query of {len(query)} literals exceeds max depth {self.max_query_depth}")
        sign: dict[int, bool] = {}
        for lit in query:
            try:
                p = self._pos[lit.index]
            except KeyError:
                raise ValueError(f"descriptor {lit.index} is not a feature of this counter") from None
            if sign.get(p, lit.negated) != lit.negated:
                return None
            sign[p] = lit.negated
        pos = sorted(p for p, neg in sign.items() if not neg)
        neg = sorted(p for p, neg in sign.items() if neg)
        return pos, neg

    def query_counts(self, query: Sequence[Literal]) -> ClassHistogram:
        split = self._positions(query)
        if split is None:
            return ClassHistogram((0,) * len(self.class_masks))
        return ClassHistogram(self._count(split[0], split[1]))

    def _count(self, pos: list[int], neg: list[int]) -> tuple[int, ...]:
        raise NotImplementedError

    def split_entropy(self, context: Sequence[Literal], candidate: int) -> float:
        if len(context) + 1 > self.max_query_depth:
            raise ValueError("context too deep for this counter")
        parent = self.query_counts(context)
        if parent.total == 0:
            return INF
        yes = self.query_counts([*context, Literal(candidate)])
        return weighted_split_entropy(parent, yes)


class _Node:
    __slots__ = ("mask", "counts", "last", "depth", "children")

    def __init__(self, mask: int, counts: tuple[int, ...], last: int, depth: int) -> None:
        self.mask = mask
        self.counts = counts
        self.last = last
        self.depth = depth
        self.children: dict[int, _Node | None] | None = None


class ADTree(_Counter):
    """Sparse AD-tree; with ``lazy=True`` each child node is built on first lookup."""

    def __init__(
        self,
        features: Sequence[tuple[int, int]],
        class_masks: Sequence[int],
        universe_mask: int,
        max_query_depth: int,
        lazy: bool = False,
    ) -> None:
        super().__init__(features, class_masks, max_query_depth)
        self.lazy = lazy
        self.root = _Node(universe_mask, self._hist(universe_mask), -1, 0)
        self.node_count = 1
        if not lazy:
            stack = [self.root]
            while stack:
                node = stack.pop()
                stack.extend(self._expand(node).values())

    def _expand(self, node: _Node) -> dict[int, _Node]:
        children: dict[int, _Node] = {}
        if node.depth < self.max_query_depth:
            for j in range(node.last + 1, len(self.feature_masks)):
                m = node.mask & self.feature_masks[j]
                if m:
                    children[j] = _Node(m, self._hist(m), j, node.depth + 1)
        node.children = children
        self.node_count += len(children)
        return children

    def _child(self, node: _Node, j: int) -> _Node | None:
        if not self.lazy:
            return node.children.get(j) if node.children else None
        if node.children is None:
            node.children = {}
        if j in node.children:
            return node.children[j]
        child = None
        m = node.mask & self.feature_masks[j]
        if m and j > node.last and node.depth < self.max_query_depth:
            child = _Node(m, self._hist(m), j, node.depth + 1)
            self.node_count += 1
        node.children[j] = child
        return child

    def _lookup(self, pos: list[int]) -> tuple[int, ...]:
        node = self.root
        for j in pos:
            child = self._child(node, j)
            if child is None:
                return (0,) * len(self.class_masks)
            node = child
        return node.counts

    def _count(self, pos: list[int], neg: list[int]) -> tuple[int, ...]:
        if not neg:
            return self._lookup(pos)
        first, rest = neg[0], neg[1:]
        whole = self._count(pos, rest)
        with_first = self._count(sorted([*pos, first]), rest)
        return tuple(a - b for a, b in zip(whole, with_first))


class BitsetCounter(_Counter):
    def __init__(
        self,
        features: Sequence[tuple[int, int]],
        class_masks: Sequence[int],
        universe_mask: int,
        max_query_depth: int,
    ) -> None:
        super().__init__(features, class_masks, max_query_depth)
        self.universe_mask = universe_mask

    def _count(self, pos: list[int], neg: list[int]) -> tuple[int, ...]:
        m = self.universe_mask
        for p in pos:
            m &= self.feature_masks[p]
        for p in neg:
            m &= ~self.feature_masks[p]
        return self._hist(m)


def build_adtree(
    features: DescriptorFamily,
    labeling: Sequence[int],
    universe: ObjectUniverse,
    max_query_depth: int,
    feature_indices: Sequence[int] | None = None,
    lazy: bool = False,
) -> ADTree:
    """AD-tree over ``features`` (or the given subset) for a class-id-per-object labeling."""
    if len(labeling) != len(universe):
        raise ValueError("labeling must assign a class to every object")
    idx = list(range(len(features))) if feature_indices is None else list(feature_indices)
    feats = [(i, features.members(i)) for i in idx]
    return ADTree(feats, class_masks_from_labels(labeling), universe.full, max_query_depth, lazy=lazy)


def query_counts(tree: _Counter, query: Sequence[Literal]) -> ClassHistogram:
    return tree.query_counts(query)


def split_entropy(tree: _Counter, context: Sequence[Literal], candidate: int) -> float:
    return tree.split_entropy(context, candidate)
