"""Post-acceptance simplification of redescriptions.

Greedily drops literals and swaps range descriptors for their next-narrower
bucket while the Jaccard coefficient does not fall by more than a tolerance
and the redescription still passes the acceptance predicate.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .descriptors import DescriptorFamily
from .expressions import (
    Coefficient,
    Literal,
    Redescription,
    SetExpression,
    Threshold,
    canonicalize,
    make_redescription,
    render,
    render_literal,
)


@dataclass(frozen=True)
class TightenStep:
    action: str
    side: str
    term: str
    before: Coefficient
    after: Coefficient

    def as_dict(self) -> dict:
        return {
            "action": self.action,
            "side": self.side,
            "term": self.term,
            "jaccard_before": str(self.before),
            "jaccard_after": str(self.after),
        }


@dataclass(frozen=True)
class TightenResult:
    original: Redescription
    tightened: Redescription
    steps: tuple[TightenStep, ...]


def _moves(expr: SetExpression, family: DescriptorFamily) -> Iterator[tuple[str, str, SetExpression]]:
    conjs = [list(c) for c in expr.conjuncts]
    fid = expr.family_id
    for ci, conj in enumerate(conjs):
        for li, lit in enumerate(conj):
            rest = conj[:li] + conj[li + 1 :]
            new = conjs[:ci] + ([rest] if rest else []) + conjs[ci + 1 :]
            if new:
                yield "drop", render_literal(lit, family), SetExpression._raw(fid, new)
    for ci, conj in enumerate(conjs):
        for li, lit in enumerate(conj):
            inner = family.narrower(lit.index)
            if inner is None:
                continue
            swapped = Literal(inner, lit.negated)
            new = [list(c) for c in conjs]
            new[ci][li] = swapped
            term = f"{render_literal(lit, family)} -> {render_literal(swapped, family)}"
            yield "narrow", term, SetExpression._raw(fid, new)


def acceptable(r: Redescription, theta: Threshold, min_support: int, n_objects: int) -> bool:
    """The full acceptance predicate short of deduplication."""
    lo, hi = min_support, n_objects - min_support
    return (
        theta.admits(r.jaccard)
        and theta.admits(r.complement_jaccard)
        and lo <= r.lhs_support.bit_count() <= hi
        and lo <= r.rhs_support.bit_count() <= hi
    )


def tighten(
    r: Redescription,
    x_family: DescriptorFamily,
    y_family: DescriptorFamily,
    theta: Threshold,
    min_support: int = 1,
    tolerance: Fraction = Fraction(0),
) -> TightenResult:
    n = len(x_family.universe)
    current = r
    steps: list[TightenStep] = []
    while True:
        kept = None
        for side, family in (("X", x_family), ("Y", y_family)):
            expr = current.lhs if side == "X" else current.rhs
            for action, term, moved in _moves(expr, family):
                moved = canonicalize(moved)
                if moved.is_nothing or moved.is_everything or moved.literal_count() > expr.literal_count():
                    continue
                lhs, rhs = (moved, current.rhs) if side == "X" else (current.lhs, moved)
                cand = make_redescription(lhs, rhs, x_family, y_family, r.iteration, r.seed)
                if cand.jaccard.value < current.jaccard.value - tolerance:
                    continue
                if not acceptable(cand, theta, min_support, n):
                    continue
                kept = TightenStep(action, side, term, current.jaccard, cand.jaccard), cand
                break
            if kept:
                break
        if kept is None:
            break
        steps.append(kept[0])
        current = kept[1]
    return TightenResult(r, current, tuple(steps))


def describe(result: TightenResult, x_family: DescriptorFamily, y_family: DescriptorFamily) -> str:
    t = result.tightened
    return f"{render(t.lhs, x_family)} <=> {render(t.rhs, y_family)} ({len(result.steps)} steps)"
