import io

import pytest
from hypothesis import given, strategies as st

from cartwheels.descriptors import (
    BucketSpec,
    Descriptor,
    DescriptorFamily,
    NumericMatrix,
    ObjectUniverse,
    StoreError,
    bucketize_numeric,
    load_boolean_matrix,
    load_bucket_specs,
    load_descriptor_family,
    load_numeric_matrix,
    load_universe,
    parse_numeric_rows,
    read_descriptor_records,
)

TOY_X = "X1\to2,o3\nX2\to3,o4\nX3\to2,o4\nX4\to1,o5\n"


def universe(text="o1\no2\no3\no4\no5"):
    return load_universe(io.StringIO(text))


def test_universe_positions_follow_file_order():
    u = universe()
    assert len(u) == 5
    assert u.index["o3"] == 2
    assert u.objects == ("o1", "o2", "o3", "o4", "o5")


def test_single_object_universe():
    assert len(universe("a")) == 1


def test_duplicate_identifier_is_named():
    with pytest.raises(StoreError, match="'a'"):
        universe("a\nb\na")


def test_empty_universe_rejected():
    with pytest.raises(StoreError):
        universe("\n\n")


def test_load_toy_family():
    u = universe()
    x = load_descriptor_family(io.StringIO(TOY_X), u, "X")
    assert len(x) == 4
    assert u.ids_of(x.members(x.index_of("X1"))) == ["o2", "o3"]
    assert x.active_indices() == [0, 1, 2, 3]


def test_full_descriptor_is_not_proper():
    u = universe()
    with pytest.raises(StoreError, match="proper"):
        load_descriptor_family(io.StringIO(TOY_X + "D_all\to1,o2,o3,o4,o5\n"), u, "X")


def test_empty_descriptor_is_not_proper():
    with pytest.raises(StoreError, match="proper"):
        load_descriptor_family(io.StringIO(TOY_X + "D_none\t\n"), universe(), "X")


def test_uncovered_objects_listed():
    text = "".join(TOY_X.splitlines(keepends=True)[:3])
    with pytest.raises(StoreError, match="uncovered: o1, o5"):
        load_descriptor_family(io.StringIO(text), universe(), "X")


def test_unknown_object_reports_line():
    with pytest.raises(StoreError, match="line 2"):
        load_descriptor_family(io.StringIO("A\to1,o2\nB\to9\n"), universe(), "X")


def test_duplicate_descriptor_name():
    with pytest.raises(StoreError, match="duplicate descriptor"):
        load_descriptor_family(io.StringIO(TOY_X + "X1\to1\n"), universe(), "X")


def test_identical_member_sets_kept_as_distinct_descriptors():
    x = load_descriptor_family(io.StringIO(TOY_X + "X1bis\to2,o3\n"), universe(), "X")
    assert len(x) == 5
    assert x.members(0) == x.members(4)


def test_comments_and_blank_lines_skipped():
    text = "# header\n\n" + TOY_X
    assert len(read_descriptor_records(io.StringIO(text), universe())) == 4


def test_boolean_matrix():
    csv_text = "id,A,B\no1,1,0\no2,0,1\no3,1,1\n"
    fam = load_boolean_matrix(io.StringIO(csv_text), universe("o1\no2\no3"), "Y")
    assert fam.names == ["A", "B"]
    assert fam.universe.ids_of(fam.members(0)) == ["o1", "o3"]


def test_boolean_matrix_rejects_bad_cell():
    with pytest.raises(StoreError, match="not 0 or 1"):
        load_boolean_matrix(io.StringIO("id,A\no1,2\n"), universe("o1\no2"), "Y")


def test_deactivate_leaves_members_alone():
    x = load_descriptor_family(io.StringIO(TOY_X), universe(), "X")
    before = [d.members for d in x.descriptors]
    x.deactivate(1)
    assert x.active_indices() == [0, 2, 3]
    assert [d.members for d in x.descriptors] == before


def test_family_id_validated():
    with pytest.raises(StoreError):
        DescriptorFamily("Z", universe("a\nb"), [Descriptor("A", 1), Descriptor("B", 2)])


# -- bucketization ---------------------------------------------------------


def _column(values):
    u = ObjectUniverse(tuple(f"row{i + 1}" for i in range(len(values))))
    m = parse_numeric_rows(["v"], [(f"row{i + 1}", [v]) for i, v in enumerate(values)])
    return u, m


def test_negative_bucket():
    u, m = _column([-2, -1, 0.5, 3, 0.1])
    (d,) = bucketize_numeric(m, [BucketSpec("v", (-1.0,))], u)
    assert d.name == "v∈[-1,0]"
    assert u.ids_of(d.members) == ["row2"]


def test_bucket_covering_everything_is_dropped():
    u, m = _column([0.5, 1.5, 3])
    assert bucketize_numeric(m, [BucketSpec("v", (10.0,))], u) == []


def test_nested_positive_buckets():
    u, m = _column([0.5, 1.5, 3])
    d1, d2 = bucketize_numeric(m, [BucketSpec("v", (1.0, 2.0))], u)
    assert (d1.name, u.ids_of(d1.members)) == ("v∈[0,1]", ["row1"])
    assert (d2.name, u.ids_of(d2.members)) == ("v∈[0,2]", ["row1", "row2"])


def test_narrower_bucket_lookup():
    u, m = _column([0.5, 1.5, 3, -0.5, -2])
    ds = bucketize_numeric(m, [BucketSpec("v", (-3.0, -1.0, 1.0, 2.0))], u)
    fam = DescriptorFamily("X", u, ds + [Descriptor("rest", u.full & ~ds[0].members)])
    idx = {d.name: i for i, d in enumerate(fam.descriptors)}
    assert fam.narrower(idx["v∈[0,2]"]) == idx["v∈[0,1]"]
    assert fam.narrower(idx["v∈[-3,0]"]) == idx["v∈[-1,0]"]
    assert fam.narrower(idx["v∈[0,1]"]) is None
    assert fam.narrower(idx["rest"]) is None


def test_non_numeric_cell():
    with pytest.raises(StoreError, match="non-numeric"):
        load_numeric_matrix(io.StringIO("id,v\na,1\nb,x\n"))


def test_spec_for_missing_column():
    u, m = _column([1, 2])
    with pytest.raises(StoreError, match="missing column"):
        bucketize_numeric(m, [BucketSpec("w", (1.0,))], u)


def test_matrix_rows_must_match_universe():
    u = ObjectUniverse(("a", "b", "c"))
    m = NumericMatrix(("v",), {"a": (1.0,), "b": (2.0,)})
    with pytest.raises(StoreError, match="lacks rows"):
        bucketize_numeric(m, [BucketSpec("v", (1.0,))], u)


def test_bucket_spec_must_be_monotone():
    with pytest.raises(StoreError, match="monotone"):
        BucketSpec("v", (1.0, 3.0, 2.0))


def test_bucket_spec_yaml_and_json():
    specs = load_bucket_specs(io.StringIO("- variable: v\n  boundaries: [-1, 1, 2]\n"))
    assert specs == [BucketSpec("v", (-1.0, 1.0, 2.0))]
    specs = load_bucket_specs(io.StringIO('{"buckets": [{"variable": "w", "boundaries": [0.5]}]}'))
    assert specs == [BucketSpec("w", (0.5,))]


def test_bucket_spec_malformed():
    with pytest.raises(StoreError):
        load_bucket_specs(io.StringIO("- variable: v\n"))


@given(
    st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=12),
    st.sampled_from([-3.0, -1.0, -0.5, 0.5, 1.0, 2.5]),
)
def test_bucket_membership_matches_cell_scan(values, bound):
    u, m = _column(values)
    out = bucketize_numeric(m, [BucketSpec("v", (bound,))], u)
    lo, hi = (bound, 0.0) if bound < 0 else (0.0, bound)
    expect = {f"row{i + 1}" for i, v in enumerate(values) if lo <= v <= hi}
    if 0 < len(expect) < len(values):
        assert set(u.ids_of(out[0].members)) == expect
    else:
        assert out == []
