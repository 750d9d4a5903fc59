"""Tabular (Quine-McCluskey) minimization of boolean functions.

An implicant is a pair ``(value, care)``: ``care`` has a bit set for every
variable the implicant mentions and ``value`` gives the required polarity of
those variables. A minterm ``m`` is covered when ``m & care == value``.
"""

from __future__ import annotations

from typing import Iterable

Implicant = tuple[int, int]

MAX_VARIABLES = 16


def prime_implicants(n_vars: int, minterms: Iterable[int]) -> list[Implicant]:
    full = (1 << n_vars) - 1
    current = {(m, full) for m in minterms}
    primes: set[Implicant] = set()
    while current:
        merged: set[Implicant] = set()
        used: set[Implicant] = set()
        for value, care in current:
            bits = care & ~value
            while bits:
                b = bits & -bits
                bits ^= b
                partner = (value | b, care)
                if partner in current:
                    merged.add((value, care & ~b))
                    used.add((value, care))
                    used.add(partner)
        primes |= current - used
        current = merged
    return sorted(primes, key=_implicant_key)


def _absorbs(a: Implicant, b: Implicant) -> bool:
    """True when implicant ``a`` covers every minterm of ``b``."""
    return a[1] & b[1] == a[1] and b[0] & a[1] == a[0]


def primes_by_consensus(implicants: Iterable[Implicant]) -> list[Implicant]:
    """All prime implicants of a sum of products, by iterated consensus.

    Works from the given terms rather than from minterms, so the cost tracks
    the size of the expression instead of ``3**n_vars``.
    """
    terms: list[Implicant] = []

    def add(t: Implicant) -> bool:
        if any(_absorbs(u, t) for u in terms):
            return False
        terms[:] = [u for u in terms if not _absorbs(t, u)]
        terms.append(t)
        return True

    for t in implicants:
        add(t)
    changed = True
    while changed:
        changed = False
        for a, b in [(a, b) for i, a in enumerate(terms) for b in terms[i + 1 :]]:
            if a not in terms or b not in terms:
                continue
            common = a[1] & b[1]
            clash = (a[0] ^ b[0]) & common
            if clash.bit_count() != 1:
                continue
            care = (a[1] | b[1]) & ~clash
            value = (a[0] | b[0]) & care
            if add((value, care)):
                changed = True
    return sorted(terms, key=_implicant_key)


def _implicant_key(imp: Implicant) -> tuple[tuple[int, bool], ...]:
    value, care = imp
    out = []
    var = 0
    while care >> var:
        if care >> var & 1:
            out.append((var, not (value >> var & 1)))
        var += 1
    return tuple(out)


def _covers(imp: Implicant, m: int) -> bool:
    return m & imp[1] == imp[0]


def minimum_cover(
    n_vars: int, minterms: Iterable[int], primes: list[Implicant] | None = None
) -> list[Implicant]:
    """Return a minimum-literal prime cover of the function.

    Ties on (literal count, term count) are broken by the sorted literal
    tuples, so the result is a canonical form of the function.
    """
    if n_vars > MAX_VARIABLES:
        raise ValueError(f"cannot minimize over {n_vars} variables (limit {MAX_VARIABLES})")
    terms = sorted(set(minterms))
    if not terms:
        return []
    if primes is None:
        primes = prime_implicants(n_vars, terms)
    covering = {m: [p for p in primes if _covers(p, m)] for m in terms}

    chosen: list[Implicant] = []
    uncovered = set(terms)
    changed = True
    while changed:
        changed = False
        for m in sorted(uncovered):
            if m not in uncovered:
                continue
            opts = covering[m]
            if len(opts) == 1:
                p = opts[0]
                chosen.append(p)
                uncovered = {u for u in uncovered if not _covers(p, u)}
                changed = True

    def cost(sel: list[Implicant]) -> tuple[int, int]:
        return sum(c.bit_count() for _, c in sel), len(sel)

    def key(sel: list[Implicant]) -> tuple:
        return cost(sel), tuple(sorted(_implicant_key(p) for p in sel))

    best: list[list[Implicant]] = []

    def search(sel: list[Implicant], left: frozenset[int]) -> None:
        if best and cost(sel) > cost(best[0]):
            return
        if not left:
            if not best or key(sel) < key(best[0]):
                best[:] = [list(sel)]
            return
        # branch on the minterm with the fewest options
        pivot = min(left, key=lambda m: (len(covering[m]), m))
        for p in covering[pivot]:
            if p in sel:
                continue
            sel.append(p)
            search(sel, frozenset(u for u in left if not _covers(p, u)))
            sel.pop()

    search(list(chosen), frozenset(uncovered))
    return sorted(best[0], key=_implicant_key)


def literals_of(imp: Implicant) -> tuple[tuple[int, bool], ...]:
    """``(variable, negated)`` pairs of an implicant in variable order."""
    return _implicant_key(imp)
