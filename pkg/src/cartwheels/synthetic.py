"""Synthetic descriptor families for testing and benchmarking."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .descriptors import (
    BucketSpec,
    Descriptor,
    DescriptorFamily,
    ObjectUniverse,
    bucketize_numeric,
    parse_numeric_rows,
)


def _random_subset(rng: random.Random, n: int, density: float) -> int:
    m = 0
    for pos in range(n):
        if rng.random() < density:
            m |= 1 << pos
    return m


def _proper(rng: random.Random, mask: int, n: int) -> int:
    full = (1 << n) - 1
    if mask == 0:
        mask = 1 << rng.randrange(n)
    if mask == full:
        mask &= ~(1 << rng.randrange(n))
    return mask


def _patch_cover(rng: random.Random, masks: list[int], n: int) -> list[int]:
    """Add uncovered objects to random descriptors without making any full."""
    full = (1 << n) - 1
    covered = 0
    for m in masks:
        covered |= m
    for pos in range(n):
        if covered >> pos & 1:
            continue
        order = list(range(len(masks)))
        rng.shuffle(order)
        for i in order:
            if (masks[i] | 1 << pos) != full:
                masks[i] |= 1 << pos
                covered |= 1 << pos
                break
    if covered != full:
        raise ValueError("cannot patch descriptors into a covering without making one equal to O")
    return masks


def random_family(
    rng: random.Random, universe: ObjectUniverse, family_id: str, n_descriptors: int, density: float = 0.4
) -> DescriptorFamily:
    n = len(universe)
    full = universe.full
    for _ in range(100):
        masks = [_proper(rng, _random_subset(rng, n, density), n) for _ in range(n_descriptors)]
        union = 0
        for m in masks:
            union |= m
        if union == full:
            break
        try:
            masks = _patch_cover(rng, masks, n)
            break
        except ValueError:
            continue
    else:
        raise ValueError(f"could not draw {n_descriptors} covering proper descriptors over {n} objects")
    return DescriptorFamily(
        family_id, universe, [Descriptor(f"{family_id}{i + 1}", m, "random") for i, m in enumerate(masks)]
    )


def random_instance(
    rng: random.Random, n_objects: int, n_x: int, n_y: int, density: float = 0.4
) -> tuple[ObjectUniverse, DescriptorFamily, DescriptorFamily]:
    if n_objects < 2:
        raise ValueError("need at least two objects for proper descriptors")
    universe = ObjectUniverse(tuple(f"o{i + 1}" for i in range(n_objects)))
    return universe, random_family(rng, universe, "X", n_x, density), random_family(rng, universe, "Y", n_y, density)


@dataclass(frozen=True)
class PlantedInstance:
    universe: ObjectUniverse
    x: DescriptorFamily
    y: DescriptorFamily
    support: int
    lhs_names: tuple[str, str]
    rhs_names: tuple[str, str]


def planted_instance(
    seed: int,
    n_objects: int = 100,
    n_descriptors: int = 40,
    support_size: int = 20,
    spill: int = 10,
    noise_density: float = 0.2,
) -> PlantedInstance:
    """Plant ``A & B <=> C & D`` with both sides denoting the same set S.

    Each planted descriptor is S plus ``spill`` objects outside S, and the
    spills of a pair are disjoint so the intersections are exactly S. The
    remaining descriptors are independent noise.
    """
    rng = random.Random(seed)
    n = n_objects
    universe = ObjectUniverse(tuple(f"g{i:03d}" for i in range(n)))
    objects = list(range(n))
    rng.shuffle(objects)
    s = objects[:support_size]
    rest = objects[support_size:]
    support = sum(1 << p for p in s)

    def planted_pair() -> tuple[int, int]:
        spills = rng.sample(rest, 2 * spill)
        a = support | sum(1 << p for p in spills[:spill])
        b = support | sum(1 << p for p in spills[spill:])
        return a, b

    def family(fid: str, names: tuple[str, str]) -> DescriptorFamily:
        a, b = planted_pair()
        masks = [_proper(rng, _random_subset(rng, n, noise_density), n) for _ in range(n_descriptors - 2)]
        masks = _patch_cover(rng, masks, n)
        desc = [Descriptor(f"{fid}{i + 1}", m, "noise") for i, m in enumerate(masks)]
        slots = sorted(rng.sample(range(n_descriptors), 2))
        desc.insert(slots[0], Descriptor(names[0], a, "planted"))
        desc.insert(slots[1], Descriptor(names[1], b, "planted"))
        return DescriptorFamily(fid, universe, desc)

    lhs_names = ("A_planted", "B_planted")
    rhs_names = ("C_planted", "D_planted")
    x = family("X", lhs_names)
    y = family("Y", rhs_names)
    return PlantedInstance(universe, x, y, support, lhs_names, rhs_names)


def large_instance(seed: int = 0) -> tuple[ObjectUniverse, DescriptorFamily, DescriptorFamily]:
    """74 objects and 824 distinct descriptors in the mix of a gene-expression study.

    X holds range descriptors bucketed from synthetic expression values plus
    k-means-style partitions (294 descriptors). Y holds every X descriptor
    plus category-like sets and a second block of range descriptors, so the
    two vocabularies overlap and the opposing-tree exclusion matters.
    """
    rng = random.Random(seed)
    n = 74
    universe = ObjectUniverse(tuple(f"ORF{i:03d}" for i in range(n)))
    boundaries = (-3.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0)

    def ranges(prefix: str, n_vars: int) -> list[Descriptor]:
        variables = [f"{prefix}{j}" for j in range(n_vars)]
        rows = [(ident, [rng.gauss(0, 1.5) for _ in variables]) for ident in universe.objects]
        matrix = parse_numeric_rows(variables, rows)
        return bucketize_numeric(matrix, [BucketSpec(v, boundaries) for v in variables], universe)

    x_desc = ranges("stress_t", 28)
    for k in range(7):
        labels = [rng.randrange(10) for _ in range(n)]
        for c in range(10):
            m = sum(1 << p for p, l in enumerate(labels) if l == c)
            if m:
                x_desc.append(Descriptor(f"cluster{k}_{c}", m, "cluster"))
    y_extra = ranges("histone_t", 19)
    target = 824
    i = 0
    while len(x_desc) + len(y_extra) < target:
        size = rng.randint(2, 15)
        m = sum(1 << p for p in rng.sample(range(n), size))
        y_extra.append(Descriptor(f"category{i}", m, "category"))
        i += 1
    x = DescriptorFamily("X", universe, x_desc)
    y = DescriptorFamily("Y", universe, x_desc + y_extra)
    return universe, x, y
