"""Set-theoretic expressions over one descriptor family, and their metrics.

Expressions are kept in disjunctive normal form: a union of conjuncts, each an
intersection of (possibly complemented) descriptor literals. Two constants
exist: the empty union (``@none``, the empty set) and the single empty
conjunct (``@all``, the whole universe). Set difference ``A - B`` is written
``A & !B``.
"""

from __future__ import annotations

import functools
import logging
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import AbstractSet, Iterable, Sequence, Union

from .descriptors import DescriptorFamily, ObjectUniverse
from .minimize import MAX_VARIABLES, literals_of, minimum_cover, primes_by_consensus

log = logging.getLogger(__name__)

ALL_TOKEN = "@all"
NONE_TOKEN = "@none"


class ExpressionError(ValueError):
    pass


class ParseError(ExpressionError):
    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} at position {position}")
        self.position = position


@dataclass(frozen=True, order=True)
class Literal:
    index: int
    negated: bool = False

    def __invert__(self) -> Literal:
        return Literal(self.index, not self.negated)


Conjunct = tuple[Literal, ...]


@dataclass(frozen=True)
class SetExpression:
    family_id: str
    conjuncts: tuple[Conjunct, ...]

    def __post_init__(self) -> None:
        if self.conjuncts == ((),):
            return
        for conj in self.conjuncts:
            if not conj:
                raise ExpressionError("empty conjunct outside the @all constant")
            if len(set(conj)) != len(conj):
                raise ExpressionError(f"duplicate literal in conjunct {conj}")
            if len({lit.index for lit in conj}) != len(conj):
                raise ExpressionError(f"conjunct {conj} contains a literal and its negation")

    @classmethod
    def literal(cls, family_id: str, index: int, negated: bool = False) -> SetExpression:
        return cls(family_id, ((Literal(index, negated),),))

    @classmethod
    def conjunction(cls, family_id: str, literals: Iterable[Literal]) -> SetExpression:
        return normalize(cls._raw(family_id, [list(literals)]))

    @classmethod
    def everything(cls, family_id: str) -> SetExpression:
        return cls(family_id, ((),))

    @classmethod
    def nothing(cls, family_id: str) -> SetExpression:
        return cls(family_id, ())

    @classmethod
    def _raw(cls, family_id: str, conjuncts: Iterable[Iterable[Literal]]) -> SetExpression:
        """Build from loose conjunct lists, dropping contradictions."""
        kept = []
        for conj in conjuncts:
            uniq = sorted(set(conj))
            if len({l.index for l in uniq}) != len(uniq):
                continue
            if not uniq:
                return cls.everything(family_id)
            kept.append(tuple(uniq))
        return cls(family_id, tuple(kept))

    @property
    def is_everything(self) -> bool:
        return self.conjuncts == ((),)

    @property
    def is_nothing(self) -> bool:
        return not self.conjuncts

    def descriptors(self) -> list[int]:
        return sorted({lit.index for conj in self.conjuncts for lit in conj})

    def literal_count(self) -> int:
        return sum(len(c) for c in self.conjuncts)

    def has_negation(self) -> bool:
        return any(lit.negated for conj in self.conjuncts for lit in conj)

    def has_disjunction(self) -> bool:
        return len(self.conjuncts) > 1


def normalize(expr: SetExpression) -> SetExpression:
    """Canonical ordering only: sorted, deduplicated, no minimization."""
    if expr.is_everything or expr.is_nothing:
        return expr
    conjs = sorted({tuple(sorted(set(c))) for c in expr.conjuncts})
    return SetExpression(expr.family_id, tuple(conjs))


def _check_family(expr: SetExpression, family: DescriptorFamily) -> None:
    if expr.family_id != family.family_id:
        raise ExpressionError(
            f"expression over family {expr.family_id} evaluated against family {family.family_id}"
        )


def evaluate(expr: SetExpression, family: DescriptorFamily) -> int:
    """Object bitset denoted by ``expr``."""
    _check_family(expr, family)
    full = family.universe.full
    n = len(family)
    result = 0
    for conj in expr.conjuncts:
        acc = full
        for lit in conj:
            if not 0 <= lit.index < n:
                raise ExpressionError(f"dangling descriptor reference {lit.index} in family {family.family_id}")
            m = family.members(lit.index)
            acc &= (full & ~m) if lit.negated else m
        result |= acc
    return result


# -- metrics -----------------------------------------------------------------

SetLike = Union[int, AbstractSet]


def _sizes(a: SetLike, b: SetLike) -> tuple[int, int]:
    if isinstance(a, int) and isinstance(b, int):
        return (a & b).bit_count(), (a | b).bit_count()
    a, b = set(a), set(b)  # type: ignore[arg-type]
    return len(a & b), len(a | b)


@functools.total_ordering
@dataclass(frozen=True, eq=False)
class Coefficient:
    """Exact Jaccard-style ratio; keeps the raw counts it was built from."""

    intersection: int
    union: int

    def __post_init__(self) -> None:
        if not 0 <= self.intersection <= self.union:
            raise ValueError(f"invalid coefficient {self.intersection}/{self.union}")

    @property
    def degenerate(self) -> bool:
        """True for the empty-vs-empty convention (value 1)."""
        return self.union == 0

    @property
    def value(self) -> Fraction:
        return Fraction(1) if self.union == 0 else Fraction(self.intersection, self.union)

    @property
    def numerator(self) -> int:
        return self.value.numerator

    @property
    def denominator(self) -> int:
        return self.value.denominator

    @property
    def float_value(self) -> float:
        return float(self.value)

    def __float__(self) -> float:
        return float(self.value)

    def __str__(self) -> str:
        v = self.value
        return f"{v.numerator}/{v.denominator}"

    def __repr__(self) -> str:
        return f"Coefficient({self.intersection}/{self.union})"

    def _other(self, other: object) -> Fraction | float:
        if isinstance(other, Coefficient):
            return other.value
        if isinstance(other, (int, Fraction, float)):
            return other
        return NotImplemented  # type: ignore[return-value]

    def __eq__(self, other: object) -> bool:
        o = self._other(other)
        if o is NotImplemented:
            return NotImplemented
        return self.value == o

    def __lt__(self, other: object) -> bool:
        o = self._other(other)
        if o is NotImplemented:
            return NotImplemented
        return self.value < o

    def __hash__(self) -> int:
        return hash(self.value)


def jaccard(a: SetLike, b: SetLike) -> Coefficient:
    inter, union = _sizes(a, b)
    if union == 0:
        log.warning("jaccard of two empty sets; using the convention J = 1")
    return Coefficient(inter, union)


def _universe_mask(universe: ObjectUniverse | SetLike) -> SetLike:
    return universe.full if isinstance(universe, ObjectUniverse) else universe


def complement_jaccard(a: SetLike, b: SetLike, universe: ObjectUniverse | SetLike) -> Coefficient:
    full = _universe_mask(universe)
    if isinstance(full, int) and isinstance(a, int) and isinstance(b, int):
        return jaccard(full & ~a, full & ~b)
    full = set(full) if not isinstance(full, int) else full
    return jaccard(set(full) - set(a), set(full) - set(b))  # type: ignore[arg-type]


def _h(counts: Sequence[int], n: int) -> float:
    return -sum(c / n * math.log2(c / n) for c in counts if c)


def entropy_distance(a: SetLike, b: SetLike, universe: ObjectUniverse | SetLike) -> float:
    """H(A,B) - I(A;B) in bits, with A, B the membership indicators of a uniform object."""
    full = _universe_mask(universe)
    if isinstance(full, int):
        n = full.bit_count()
        a &= full  # type: ignore[operator]
        b &= full  # type: ignore[operator]
        n11 = (a & b).bit_count()  # type: ignore[operator]
        na, nb = a.bit_count(), b.bit_count()  # type: ignore[union-attr]
    else:
        full, a, b = set(full), set(a) & set(full), set(b) & set(full)
        n = len(full)
        n11, na, nb = len(a & b), len(a), len(b)
    if n == 0:
        raise ValueError("universe is empty")
    joint = (n11, na - n11, nb - n11, n - na - nb + n11)
    h_ab = _h(joint, n)
    d = 2 * h_ab - _h((na, n - na), n) - _h((nb, n - nb), n)
    return max(d, 0.0)


@dataclass(frozen=True)
class Threshold:
    """Acceptance threshold; ratios are exact, decimals get a small slack."""

    value: Fraction
    slack: Fraction = Fraction(0)
    text: str = field(default="", compare=False)

    @classmethod
    def parse(cls, text: str | float | Fraction) -> Threshold:
        if isinstance(text, Fraction):
            return cls(text, Fraction(0), str(text))
        s = str(text).strip()
        try:
            if "/" in s:
                return cls(Fraction(s), Fraction(0), s)
            return cls(Fraction(s), Fraction(1, 10**9), s)
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"cannot parse threshold {s!r}") from None

    def admits(self, c: Coefficient | Fraction) -> bool:
        v = c.value if isinstance(c, Coefficient) else c
        return v >= self.value - self.slack

    def __str__(self) -> str:
        return self.text or str(self.value)


# -- canonical form ----------------------------------------------------------


def canonicalize(expr: SetExpression) -> SetExpression:
    """Minimum-literal DNF of the expression's boolean function, deterministically ordered."""
    if expr.is_everything or expr.is_nothing:
        return expr
    variables = expr.descriptors()
    if len(variables) > MAX_VARIABLES:
        raise ExpressionError(
            f"expression mentions {len(variables)} descriptors; canonical form supports at most {MAX_VARIABLES}"
        )
    pos = {d: k for k, d in enumerate(variables)}
    implicants = []
    for conj in expr.conjuncts:
        value = care = 0
        for lit in conj:
            bit = 1 << pos[lit.index]
            care |= bit
            if not lit.negated:
                value |= bit
        implicants.append((value, care))
    n = len(variables)
    minterms = [m for m in range(1 << n) if any(m & c == v for v, c in implicants)]
    cover = minimum_cover(n, minterms, primes_by_consensus(implicants))
    conjs = [tuple(Literal(variables[k], neg) for k, neg in literals_of(p)) for p in cover]
    return normalize(SetExpression._raw(expr.family_id, conjs))


def canonical_key(expr: SetExpression) -> tuple:
    c = canonicalize(expr)
    return (c.family_id, c.conjuncts)


# -- rendering and parsing ---------------------------------------------------

_OPERATOR_CHARS = set('&|!()"')
_BARE_NAME = re.compile(r'[^\s&|!()"]+')


def _quote(name: str) -> str:
    if name and _BARE_NAME.fullmatch(name) and not name.startswith("@"):
        return name
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render_literal(lit: Literal, family: DescriptorFamily) -> str:
    name = _quote(family[lit.index].name)
    return f"!{name}" if lit.negated else name


def render(expr: SetExpression, family: DescriptorFamily) -> str:
    _check_family(expr, family)
    if expr.is_everything:
        return ALL_TOKEN
    if expr.is_nothing:
        return NONE_TOKEN
    parts = []
    for conj in expr.conjuncts:
        body = " & ".join(render_literal(l, family) for l in conj)
        parts.append(f"({body})" if len(conj) > 1 and len(expr.conjuncts) > 1 else body)
    return " | ".join(parts)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "&|!()":
            tokens.append((ch, ch, i))
            i += 1
        elif ch == '"':
            start = i
            i += 1
            buf = []
            while i < len(text) and text[i] != '"':
                if text[i] == "\\" and i + 1 < len(text):
                    i += 1
                buf.append(text[i])
                i += 1
            if i >= len(text):
                raise ParseError("unterminated quoted name", start)
            i += 1
            tokens.append(("NAME", "".join(buf), start))
        else:
            m = _BARE_NAME.match(text, i)
            assert m is not None
            word = m.group()
            kind = "CONST" if word in (ALL_TOKEN, NONE_TOKEN) else "NAME"
            tokens.append((kind, word, i))
            i = m.end()
    tokens.append(("END", "", len(text)))
    return tokens


# DNF as a list of literal sets; parsing distributes as it goes.
_Dnf = list[frozenset[Literal]]


def _and(a: _Dnf, b: _Dnf) -> _Dnf:
    out = []
    for x in a:
        for y in b:
            z = x | y
            if len({l.index for l in z}) == len(z):
                out.append(z)
    return out


class _Parser:
    def __init__(self, text: str, family: DescriptorFamily) -> None:
        self.tokens = _tokenize(text)
        self.pos = 0
        self.family = family

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def take(self, kind: str) -> tuple[str, str, int]:
        tok = self.peek()
        if tok[0] != kind:
            what = "end of input" if tok[0] == "END" else repr(tok[1])
            raise ParseError(f"expected {kind if kind != 'NAME' else 'descriptor name'}, found {what}", tok[2])
        self.pos += 1
        return tok

    # each production returns (dnf, dnf of the negation)
    def expr(self) -> tuple[_Dnf, _Dnf]:
        pos, neg = self.term()
        while self.peek()[0] == "|":
            self.pos += 1
            p2, n2 = self.term()
            pos, neg = pos + p2, _and(neg, n2)
        return pos, neg

    def term(self) -> tuple[_Dnf, _Dnf]:
        pos, neg = self.factor()
        while self.peek()[0] == "&":
            self.pos += 1
            p2, n2 = self.factor()
            pos, neg = _and(pos, p2), neg + n2
        return pos, neg

    def factor(self) -> tuple[_Dnf, _Dnf]:
        negate = False
        if self.peek()[0] == "!":
            self.pos += 1
            negate = True
        kind, value, at = self.peek()
        if kind == "(":
            self.pos += 1
            pos, neg = self.expr()
            self.take(")")
        elif kind == "CONST":
            self.pos += 1
            if value == ALL_TOKEN:
                pos, neg = [frozenset()], []
            else:
                pos, neg = [], [frozenset()]
        elif kind == "NAME":
            self.pos += 1
            if not self.family.has(value):
                raise ParseError(f"unknown descriptor {value!r} in family {self.family.family_id}", at)
            idx = self.family.index_of(value)
            pos, neg = [frozenset({Literal(idx)})], [frozenset({Literal(idx, True)})]
        else:
            what = "end of input" if kind == "END" else repr(value)
            raise ParseError(f"expected descriptor name or '(', found {what}", at)
        return (neg, pos) if negate else (pos, neg)


def parse(text: str, family: DescriptorFamily) -> SetExpression:
    """Parse the ``& | ! ( )`` grammar into a normalized DNF expression."""
    p = _Parser(text, family)
    dnf, _ = p.expr()
    p.take("END")
    return normalize(SetExpression._raw(family.family_id, dnf))


# -- redescriptions ----------------------------------------------------------


@dataclass(frozen=True)
class Redescription:
    lhs: SetExpression
    rhs: SetExpression
    jaccard: Coefficient
    complement_jaccard: Coefficient
    lhs_support: int
    rhs_support: int
    iteration: int = 0
    seed: int = 0

    def key(self) -> tuple:
        return (canonical_key(self.lhs), canonical_key(self.rhs))


def make_redescription(
    lhs: SetExpression,
    rhs: SetExpression,
    x_family: DescriptorFamily,
    y_family: DescriptorFamily,
    iteration: int = 0,
    seed: int = 0,
) -> Redescription:
    if lhs.family_id != x_family.family_id or rhs.family_id != y_family.family_id:
        raise ExpressionError("redescription sides must use the X and Y families respectively")
    a = evaluate(lhs, x_family)
    b = evaluate(rhs, y_family)
    full = x_family.universe.full
    return Redescription(lhs, rhs, jaccard(a, b), complement_jaccard(a, b, full), a, b, iteration, seed)
