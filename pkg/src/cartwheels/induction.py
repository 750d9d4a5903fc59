"""Depth-limited classification trees over descriptor-membership features."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

from .adtree import ADTree, BitsetCounter, ClassHistogram, weighted_split_entropy
from .adtree import _Counter as Counter
from .descriptors import DescriptorFamily
from .expressions import Literal, SetExpression, canonicalize

log = logging.getLogger(__name__)

# float noise below this is treated as a tie
_EPS = 1e-12


@dataclass(frozen=True)
class InductionPolicy:
    depth_limit: int
    root_random_prob: float = 0.1
    min_leaf_size: int = 1
    forbid: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        if self.depth_limit < 1:
            raise ValueError("depth_limit must be >= 1")
        if self.min_leaf_size < 1:
            raise ValueError("min_leaf_size must be >= 1")
        if not 0.0 <= self.root_random_prob <= 1.0:
            raise ValueError("root_random_prob must lie in [0, 1]")


@dataclass(frozen=True)
class LabeledDataset:
    """Objects of ``family.universe`` with one class id each.

    ``label_names`` holds the rendered canonical label of each class and is
    used for deterministic tie-breaking.
    """

    family: DescriptorFamily
    features: tuple[int, ...]
    assignment: tuple[int, ...]
    label_names: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.assignment) != len(self.family.universe):
            raise ValueError("every object needs exactly one label")
        if any(not 0 <= c < len(self.label_names) for c in self.assignment):
            raise ValueError("assignment refers to an unknown class")

    @classmethod
    def from_class_masks(
        cls,
        family: DescriptorFamily,
        features: Sequence[int],
        class_masks: Sequence[int],
        label_names: Sequence[str],
    ) -> LabeledDataset:
        n = len(family.universe)
        assignment = [-1] * n
        for c, m in enumerate(class_masks):
            for pos in range(n):
                if m >> pos & 1:
                    if assignment[pos] != -1:
                        raise ValueError(f"object {family.universe.objects[pos]} has two labels")
                    assignment[pos] = c
        if -1 in assignment:
            missing = [family.universe.objects[i] for i, c in enumerate(assignment) if c == -1]
            raise ValueError(f"unlabeled objects: {', '.join(missing)}")
        return cls(family, tuple(sorted(features)), tuple(assignment), tuple(label_names))

    @cached_property
    def class_masks(self) -> tuple[int, ...]:
        masks = [0] * len(self.label_names)
        for pos, c in enumerate(self.assignment):
            masks[c] |= 1 << pos
        return tuple(masks)

    def histogram(self, mask: int) -> ClassHistogram:
        return ClassHistogram(tuple((mask & c).bit_count() for c in self.class_masks))


@dataclass
class Leaf:
    objects: int
    path: tuple[Literal, ...]
    label: int | None = None
    flags: set[str] = field(default_factory=set)

    @property
    def depth(self) -> int:
        return len(self.path)


@dataclass
class Decision:
    descriptor: int
    yes: TreeNode
    no: TreeNode
    path: tuple[Literal, ...]
    objects: int

    @property
    def depth(self) -> int:
        return len(self.path)


TreeNode = Union[Leaf, Decision]


def leaves(node: TreeNode) -> list[Leaf]:
    """Leaves in yes-before-no depth-first order."""
    if isinstance(node, Leaf):
        return [node]
    return leaves(node.yes) + leaves(node.no)


def decisions(node: TreeNode) -> list[Decision]:
    if isinstance(node, Leaf):
        return []
    return [node, *decisions(node.yes), *decisions(node.no)]


def make_counter(
    data: LabeledDataset, features: Sequence[int], max_query_depth: int, bitset_cutoff: int = 64
) -> Counter:
    """AD-tree for large universes, direct bitset counting at or below ``bitset_cutoff`` objects."""
    feats = [(i, data.family.members(i)) for i in features]
    full = data.family.universe.full
    if len(data.family.universe) <= bitset_cutoff:
        return BitsetCounter(feats, data.class_masks, full, max_query_depth)
    return ADTree(feats, data.class_masks, full, max_query_depth, lazy=True)


def induce_tree(
    data: LabeledDataset,
    policy: InductionPolicy,
    rng: random.Random,
    counter: Counter | None = None,
) -> TreeNode:
    """Greedy entropy-driven top-down induction with optional random root moves."""
    features = [f for f in data.features if f not in policy.forbid]
    full = data.family.universe.full
    if not features:
        log.warning("no admissible feature in family %s; growing a single leaf", data.family.family_id)
        return Leaf(full, (), flags={"no-features"})
    if counter is None:
        counter = make_counter(data, features, policy.depth_limit + 1)
    members = data.family.members

    def grow(path: tuple[Literal, ...], mask: int) -> TreeNode:
        hist = counter.query_counts(path)
        if len(path) >= policy.depth_limit or sum(1 for c in hist.counts if c) <= 1:
            return Leaf(mask, path)
        used = {lit.index for lit in path}
        scored = []
        for f in features:
            if f in used:
                continue
            yes = counter.query_counts([*path, Literal(f)])
            if yes.total < policy.min_leaf_size or hist.total - yes.total < policy.min_leaf_size:
                continue
            scored.append((round(weighted_split_entropy(hist, yes), 12), f))
        if not scored:
            return Leaf(mask, path)
        if not path and policy.root_random_prob > 0 and rng.random() < policy.root_random_prob:
            best = rng.choice(sorted(f for _, f in scored))
        else:
            score, best = min(scored)
            if score >= hist.entropy() - _EPS:
                return Leaf(mask, path)
        m = members(best)
        return Decision(
            best,
            grow((*path, Literal(best)), mask & m),
            grow((*path, Literal(best, True)), mask & ~m),
            path,
            mask,
        )

    return grow((), full)


def assign_leaf_labels(
    tree: TreeNode, data: LabeledDataset, rng: random.Random, distinct: bool = False
) -> TreeNode:
    """Label leaves by majority class, keeping at least two labels in play.

    With ``distinct=True`` every class labels at most one leaf (greedy by
    count); leaves left over get ``label=None`` and match nothing.
    """
    names = data.label_names
    k = len(names)
    leafs = leaves(tree)
    hists = [data.histogram(leaf.objects) for leaf in leafs]

    def majority(h: ClassHistogram) -> int:
        return min(range(k), key=lambda c: (-h.counts[c], names[c]))

    for leaf, h in zip(leafs, hists):
        if h.total == 0:
            leaf.label = rng.randrange(k)
            leaf.flags.add("empty")
        else:
            leaf.label = majority(h)

    if len(leafs) == 1:
        leafs[0].flags.add("degenerate")
        return tree

    if distinct:
        pairs = sorted(
            ((-h.counts[c], names[c], i, c) for i, h in enumerate(hists) for c in range(k) if h.counts[c]),
        )
        taken: set[int] = set()
        owner: dict[int, int] = {}
        for _, _, i, c in pairs:
            if i in owner or c in taken:
                continue
            owner[i] = c
            taken.add(c)
        for i, leaf in enumerate(leafs):
            if "empty" not in leaf.flags:
                leaf.label = owner.get(i)
        return tree

    if len({leaf.label for leaf in leafs}) == 1:
        i = rng.randrange(len(leafs))
        leaf, h = leafs[i], hists[i]
        current = leaf.label
        others = [c for c in range(k) if c != current and h.counts[c]]
        if others:
            leaf.label = min(others, key=lambda c: (-h.counts[c], names[c]))
        elif k > 1:
            leaf.label = rng.choice([c for c in range(k) if c != current])
        else:
            leaf.flags.add("degenerate")
        leaf.flags.add("relabeled")
    return tree


@dataclass(frozen=True)
class Region:
    """A class region read off a labeled tree: the union of its leaves' paths."""

    label: int | None
    expression: SetExpression
    leaves: tuple[Leaf, ...]

    @property
    def objects(self) -> int:
        m = 0
        for leaf in self.leaves:
            m |= leaf.objects
        return m

    @property
    def paths(self) -> tuple[tuple[Literal, ...], ...]:
        return tuple(leaf.path for leaf in self.leaves)


def read_off(tree: TreeNode, family_id: str, merge: bool = True) -> list[Region]:
    """Per-label set expressions of a labeled tree.

    Paths become conjunctions (no-edges negate), and leaves sharing a label
    are unioned when ``merge`` is set; otherwise every leaf is its own region.
    Unlabeled leaves always stand alone.
    """
    groups: dict[int, list[Leaf]] = {}
    singles: list[Leaf] = []
    for leaf in leaves(tree):
        if merge and leaf.label is not None:
            groups.setdefault(leaf.label, []).append(leaf)
        else:
            singles.append(leaf)
    regions = []
    for label in sorted(groups):
        ls = groups[label]
        expr = canonicalize(SetExpression._raw(family_id, [leaf.path for leaf in ls]))
        regions.append(Region(label, expr, tuple(ls)))
    for leaf in singles:
        expr = canonicalize(SetExpression._raw(family_id, [leaf.path]))
        regions.append(Region(leaf.label, expr, (leaf,)))
    return regions
