"""Brute-force enumeration of bias-admissible redescriptions on small inputs.

An expression is admissible under depth limit ``d`` when it is a union of at
most ``2**d`` conjunctions of at most ``d`` literals: every region a depth-``d``
tree can read off has that shape, and canonicalization and tightening only
remove literals. Enumeration runs over distinct support sets, so it is exact
while staying cheap for universes of a dozen objects or so.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .descriptors import DescriptorFamily
from .expressions import Literal, SetExpression, Threshold, canonicalize

DEFAULT_BOUND = 10**6


class OracleTooLarge(ValueError):
    pass


def _conjunctions(
    family: DescriptorFamily, max_literals: int, allow_negation: bool
) -> list[tuple[Literal, ...]]:
    polarities = (False, True) if allow_negation else (False,)
    out = []
    for k in range(1, max_literals + 1):
        for idx in itertools.combinations(range(len(family)), k):
            for negs in itertools.product(polarities, repeat=k):
                out.append(tuple(Literal(i, n) for i, n in zip(idx, negs)))
    return out


def _conj_mask(conj: tuple[Literal, ...], family: DescriptorFamily) -> int:
    full = family.universe.full
    m = full
    for lit in conj:
        d = family.members(lit.index)
        m &= (full & ~d) if lit.negated else d
    return m


def max_terms(depth: int, allow_disjunction: bool) -> int:
    return 2**depth if allow_disjunction else 1


def count_expressions(family: DescriptorFamily, depth: int, allow_negation=True, allow_disjunction=True) -> int:
    """Number of syntactically distinct admissible DNFs (before deduplication by support)."""
    n_conj = len(_conjunctions(family, depth, allow_negation))
    return sum(math.comb(n_conj, k) for k in range(1, max_terms(depth, allow_disjunction) + 1))


def admissible_supports(
    family: DescriptorFamily, depth: int, allow_negation: bool = True, allow_disjunction: bool = True
) -> dict[int, SetExpression]:
    """Every support set reachable by an admissible expression, with one witness expression."""
    fid = family.family_id
    conj_by_mask: dict[int, tuple[Literal, ...]] = {}
    for conj in _conjunctions(family, depth, allow_negation):
        conj_by_mask.setdefault(_conj_mask(conj, family), conj)
    witness: dict[int, list[tuple[Literal, ...]]] = {m: [c] for m, c in conj_by_mask.items()}
    frontier = dict(witness)
    for _ in range(max_terms(depth, allow_disjunction) - 1):
        nxt: dict[int, list[tuple[Literal, ...]]] = {}
        for m, terms in frontier.items():
            for cm, conj in conj_by_mask.items():
                u = m | cm
                if u not in witness and u not in nxt:
                    nxt[u] = terms + [conj]
        witness.update(nxt)
        frontier = nxt
    return {m: SetExpression._raw(fid, terms) for m, terms in witness.items()}


@dataclass(frozen=True)
class OraclePair:
    lhs_support: int
    rhs_support: int
    jaccard: Fraction
    complement_jaccard: Fraction
    lhs: SetExpression
    rhs: SetExpression


def _ratio(a: int, b: int) -> Fraction:
    union = (a | b).bit_count()
    return Fraction((a & b).bit_count(), union) if union else Fraction(1)


class Oracle:
    def __init__(
        self,
        x: DescriptorFamily,
        y: DescriptorFamily,
        depth_top: int = 2,
        depth_bottom: int = 2,
        negation: tuple[bool, bool] = (True, True),
        disjunction: tuple[bool, bool] = (True, True),
        bound: int = DEFAULT_BOUND,
    ) -> None:
        total = count_expressions(x, depth_top, negation[0], disjunction[0]) + count_expressions(
            y, depth_bottom, negation[1], disjunction[1]
        )
        if total > bound:
            raise OracleTooLarge(f"{total} admissible expressions exceed the oracle bound of {bound}")
        self.x, self.y = x, y
        self.full = x.universe.full
        self.lhs = admissible_supports(x, depth_top, negation[0], disjunction[0])
        self.rhs = admissible_supports(y, depth_bottom, negation[1], disjunction[1])

    def pair(self, a: int, b: int) -> OraclePair | None:
        """The enumerated entry for a support pair, or None if it is not admissible."""
        if a not in self.lhs or b not in self.rhs:
            return None
        f = self.full
        return OraclePair(a, b, _ratio(a, b), _ratio(f & ~a, f & ~b), self.lhs[a], self.rhs[b])

    def pairs(self, theta: Threshold, min_support: int = 1) -> Iterator[OraclePair]:
        """All admissible support pairs passing threshold, complement and support rules."""
        n = self.full.bit_count()
        lo, hi = min_support, n - min_support
        f = self.full
        rhs = sorted(m for m in self.rhs if lo <= m.bit_count() <= hi)
        for a in sorted(m for m in self.lhs if lo <= m.bit_count() <= hi):
            na = f & ~a
            for b in rhs:
                j = _ratio(a, b)
                if not theta.admits(j):
                    continue
                cj = _ratio(na, f & ~b)
                if not theta.admits(cj):
                    continue
                yield OraclePair(a, b, j, cj, canonicalize(self.lhs[a]), canonicalize(self.rhs[b]))
