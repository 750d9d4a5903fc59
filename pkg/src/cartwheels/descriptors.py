"""Object universe and descriptor families.

Member sets are stored as Python ints used as bitsets: bit ``i`` is set when
the object at canonical position ``i`` belongs to the descriptor.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Mapping, Sequence

log = logging.getLogger(__name__)

FAMILY_IDS = ("X", "Y")


class StoreError(ValueError):
    """Raised for malformed or inconsistent input data."""


def iter_bits(mask: int) -> Iterator[int]:
    """Yield the positions of set bits in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True)
class ObjectUniverse:
    """The finite object set with a fixed canonical ordering."""

    objects: tuple[str, ...]
    index: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.objects:
            raise StoreError("universe is empty")
        index: dict[str, int] = {}
        for pos, ident in enumerate(self.objects):
            if ident in index:
                raise StoreError(f"duplicate object identifier {ident!r}")
            index[ident] = pos
        object.__setattr__(self, "index", index)

    def __len__(self) -> int:
        return len(self.objects)

    @property
    def full(self) -> int:
        return (1 << len(self.objects)) - 1

    def mask_of(self, identifiers: Iterable[str]) -> int:
        mask = 0
        for ident in identifiers:
            try:
                mask |= 1 << self.index[ident]
            except KeyError:
                raise StoreError(f"unknown object identifier {ident!r}") from None
        return mask

    def ids_of(self, mask: int) -> list[str]:
        return [self.objects[i] for i in iter_bits(mask)]


@dataclass(frozen=True)
class BucketRange:
    """Closed numeric range anchored at zero, e.g. ``[-1, 0]`` or ``[0, 2]``."""

    variable: str
    bound: float

    @property
    def low(self) -> float:
        return min(self.bound, 0.0)

    @property
    def high(self) -> float:
        return max(self.bound, 0.0)

    def contains(self, value: float) -> bool:
        return self.low <= value <= self.high


@dataclass(frozen=True)
class Descriptor:
    name: str
    members: int
    source_tag: str = ""
    bucket: BucketRange | None = None

    @property
    def size(self) -> int:
        return self.members.bit_count()


class DescriptorFamily:
    """An ordered, covering family of proper descriptors over one universe.

    Member sets never change after construction. ``active_mask`` is the only
    mutable part and records which descriptors a miner may still use.
    """

    def __init__(
        self,
        family_id: str,
        universe: ObjectUniverse,
        descriptors: Sequence[Descriptor],
    ) -> None:
        if family_id not in FAMILY_IDS:
            raise StoreError(f"family id must be one of {FAMILY_IDS}, got {family_id!r}")
        self.family_id = family_id
        self.universe = universe
        self.descriptors: tuple[Descriptor, ...] = tuple(descriptors)
        if not self.descriptors:
            raise StoreError(f"family {family_id} has no descriptors")
        self._by_name: dict[str, int] = {}
        full = universe.full
        covered = 0
        for i, d in enumerate(self.descriptors):
            if d.name in self._by_name:
                raise StoreError(f"duplicate descriptor name {d.name!r} in family {family_id}")
            if d.members & ~full:
                raise StoreError(f"descriptor {d.name!r} has members outside the universe")
            if d.members == 0 or d.members == full:
                raise StoreError(f"descriptor {d.name!r} is not a proper non-empty subset of O")
            self._by_name[d.name] = i
            covered |= d.members
        if covered != full:
            missing = universe.ids_of(full & ~covered)
            raise StoreError(f"family {family_id} does not cover O; uncovered: {', '.join(missing)}")
        self.active_mask: set[int] = set(range(len(self.descriptors)))
        self._narrower = _narrower_buckets(self.descriptors)

    def __len__(self) -> int:
        return len(self.descriptors)

    def __repr__(self) -> str:
        return f"DescriptorFamily({self.family_id!r}, {len(self)} descriptors, |O|={len(self.universe)})"

    def __getitem__(self, i: int) -> Descriptor:
        return self.descriptors[i]

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.descriptors]

    def index_of(self, name: str) -> int:
        try:
            return self._by_name[name]
        except KeyError:
            raise KeyError(f"unknown descriptor {name!r} in family {self.family_id}") from None

    def has(self, name: str) -> bool:
        return name in self._by_name

    def members(self, i: int) -> int:
        return self.descriptors[i].members

    def active_indices(self) -> list[int]:
        return sorted(self.active_mask)

    def deactivate(self, i: int) -> None:
        self.active_mask.discard(i)

    def narrower(self, i: int) -> int | None:
        """Index of the next-narrower bucket on the same variable and sign, if any."""
        return self._narrower.get(i)


def _narrower_buckets(descriptors: Sequence[Descriptor]) -> dict[int, int]:
    groups: dict[tuple[str, bool], list[tuple[float, int]]] = {}
    for i, d in enumerate(descriptors):
        if d.bucket is None:
            continue
        key = (d.bucket.variable, d.bucket.bound > 0)
        groups.setdefault(key, []).append((abs(d.bucket.bound), i))
    narrower = {}
    for items in groups.values():
        items.sort()
        for (_, inner), (_, outer) in zip(items, items[1:]):
            narrower[outer] = inner
    return narrower


# -- loaders -----------------------------------------------------------------


def load_universe(source: IO[str]) -> ObjectUniverse:
    """Read one object identifier per line; blank lines are skipped."""
    ids = [line.strip() for line in source]
    ids = [i for i in ids if i]
    if not ids:
        raise StoreError("universe file is empty")
    return ObjectUniverse(tuple(ids))


def read_descriptor_records(source: IO[str], universe: ObjectUniverse, source_tag: str = "") -> list[Descriptor]:
    """Parse ``name<TAB>id1,id2,...`` records without family-level checks."""
    descriptors = []
    for lineno, raw in enumerate(source, 1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        name, sep, rest = line.partition("\t")
        name = name.strip()
        if not sep or not name:
            raise StoreError(f"line {lineno}: expected 'name<TAB>id1,id2,...'")
        ids = [t.strip() for t in rest.split(",") if t.strip()]
        try:
            members = universe.mask_of(ids)
        except StoreError as exc:
            raise StoreError(f"line {lineno}: {exc}") from None
        descriptors.append(Descriptor(name, members, source_tag=source_tag))
    return descriptors


def load_descriptor_family(
    source: IO[str], universe: ObjectUniverse, family_id: str
) -> DescriptorFamily:
    """Read ``name<TAB>id1,id2,...`` records into a validated family."""
    return DescriptorFamily(family_id, universe, read_descriptor_records(source, universe, family_id))


def read_boolean_matrix(source: IO[str], universe: ObjectUniverse, source_tag: str = "") -> list[Descriptor]:
    """Parse a CSV whose header names descriptors and whose cells are 0/1."""
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise StoreError("boolean matrix is empty") from None
    names = [h.strip() for h in header[1:]]
    masks = [0] * len(names)
    for lineno, row in enumerate(reader, 2):
        if not row:
            continue
        if len(row) != len(header):
            raise StoreError(f"line {lineno}: expected {len(header)} cells, got {len(row)}")
        bit = universe.mask_of([row[0].strip()])
        for j, cell in enumerate(row[1:]):
            cell = cell.strip()
            if cell == "1":
                masks[j] |= bit
            elif cell != "0":
                raise StoreError(f"line {lineno}: cell {cell!r} is not 0 or 1")
    return [Descriptor(n, m, source_tag=source_tag) for n, m in zip(names, masks)]


def load_boolean_matrix(
    source: IO[str], universe: ObjectUniverse, family_id: str
) -> DescriptorFamily:
    return DescriptorFamily(family_id, universe, read_boolean_matrix(source, universe, family_id))


@dataclass(frozen=True)
class NumericMatrix:
    variables: tuple[str, ...]
    rows: Mapping[str, tuple[float, ...]]

    def column(self, variable: str) -> dict[str, float]:
        try:
            j = self.variables.index(variable)
        except ValueError:
            raise StoreError(f"bucket spec references missing column {variable!r}") from None
        return {ident: values[j] for ident, values in self.rows.items()}


def parse_numeric_rows(
    variables: Sequence[str], rows: Iterable[tuple[str, Sequence[object]]]
) -> NumericMatrix:
    parsed: dict[str, tuple[float, ...]] = {}
    for ident, cells in rows:
        values = []
        for var, cell in zip(variables, cells):
            try:
                value = float(cell)  # type: ignore[arg-type]
            except (TypeError, ValueError):
                raise StoreError(f"non-numeric cell {cell!r} for object {ident!r}, column {var!r}") from None
            if math.isnan(value):
                raise StoreError(f"NaN cell for object {ident!r}, column {var!r}")
            values.append(value)
        if len(values) != len(variables):
            raise StoreError(f"row {ident!r} has {len(values)} values, expected {len(variables)}")
        if ident in parsed:
            raise StoreError(f"duplicate row for object {ident!r}")
        parsed[ident] = tuple(values)
    return NumericMatrix(tuple(variables), parsed)


def load_numeric_matrix(source: IO[str]) -> NumericMatrix:
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise StoreError("numeric matrix is empty") from None
    variables = [h.strip() for h in header[1:]]
    rows = ((r[0].strip(), [c.strip() for c in r[1:]]) for r in reader if r)
    return parse_numeric_rows(variables, rows)


@dataclass(frozen=True)
class BucketSpec:
    variable: str
    boundaries: tuple[float, ...]

    def __post_init__(self) -> None:
        b = self.boundaries
        if not b:
            raise StoreError(f"bucket spec for {self.variable!r} has no boundaries")
        increasing = all(x < y for x, y in zip(b, b[1:]))
        decreasing = all(x > y for x, y in zip(b, b[1:]))
        if not (increasing or decreasing):
            raise StoreError(f"bucket boundaries for {self.variable!r} are not strictly monotone")
        if any(x == 0 for x in b):
            raise StoreError(f"bucket boundary 0 for {self.variable!r} has no range polarity")


def load_bucket_specs(source: IO[str]) -> list[BucketSpec]:
    """Read a YAML (or JSON) list of ``{variable, boundaries}`` mappings."""
    import yaml  # only needed for bucket specs; keeps CLI startup light

    doc = yaml.safe_load(source)
    if isinstance(doc, dict) and "buckets" in doc:
        doc = doc["buckets"]
    if not isinstance(doc, list):
        raise StoreError("bucket spec must be a list of {variable, boundaries} entries")
    specs = []
    for entry in doc:
        try:
            specs.append(BucketSpec(str(entry["variable"]), tuple(float(x) for x in entry["boundaries"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise StoreError(f"malformed bucket spec entry {entry!r}: {exc}") from None
    return specs


def _fmt_bound(x: float) -> str:
    return f"{x:g}"


def bucket_name(variable: str, bound: float) -> str:
    if bound < 0:
        return f"{variable}∈[{_fmt_bound(bound)},0]"
    return f"{variable}∈[0,{_fmt_bound(bound)}]"


def bucketize_numeric(
    matrix: NumericMatrix, specs: Sequence[BucketSpec], universe: ObjectUniverse
) -> list[Descriptor]:
    """Derive zero-anchored range descriptors from numeric columns.

    The result is a plain descriptor list; wrap it (possibly merged with other
    descriptors) in a :class:`DescriptorFamily` to get the covering check.
    """
    missing = [i for i in universe.objects if i not in matrix.rows]
    if missing:
        raise StoreError(f"numeric matrix lacks rows for: {', '.join(missing)}")
    extra = [i for i in matrix.rows if i not in universe.index]
    if extra:
        raise StoreError(f"numeric matrix has rows for unknown objects: {', '.join(extra)}")
    full = universe.full
    out = []
    for spec in specs:
        column = matrix.column(spec.variable)
        for bound in spec.boundaries:
            rng = BucketRange(spec.variable, bound)
            members = universe.mask_of(i for i, v in column.items() if rng.contains(v))
            name = bucket_name(spec.variable, bound)
            if members == 0 or members == full:
                log.info("dropping bucket %s: not a proper non-empty subset", name)
                continue
            out.append(Descriptor(name, members, source_tag=f"bucket:{spec.variable}", bucket=rng))
    return out
