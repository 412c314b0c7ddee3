import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfaudit.generate import random_scm
from cfaudit.invariance import (
    ConstraintSet,
    MismatchedSupportError,
    Partition,
    UnionFind,
    Verdict,
    cda_constraints,
    cf_constraints,
    check_support_subset,
    compare_partitions,
    partition_from,
)
from cfaudit.scm import make_scm

GOOD = [f"good_1|{t}" for t in ("positive", "negative", "neutral")]
POOR = [f"poor_1|{t}" for t in ("positive", "negative", "neutral")]


@pytest.fixture
def independent():
    """X reads only U, so interventions on Z never move it."""
    return make_scm(
        [("Z", "exogenous", "ab"), ("U", "exogenous", "012"), ("X", "endogenous", "pqr")],
        {"Z": {"a": 1, "b": 0}, "U": {"0": "1/2", "1": "1/4", "2": "1/4"}},
        [("X", ["U"], {("0",): "p", ("1",): "q", ("2",): "r"})],
    )


def test_union_find():
    uf = UnionFind("abcde")
    assert uf.union("a", "b") and uf.union("c", "d") and uf.union("b", "d")
    assert not uf.union("a", "c")
    assert sorted(sorted(g) for g in uf.groups()) == [["a", "b", "c", "d"], ["e"]]


def test_cf_constraints(linear, review, independent):
    assert cf_constraints(linear, "X", "Z").peers("1") == {"-1", "1", "3"}
    assert cf_constraints(review, "X", "Z").peers("good_1|positive") == set(GOOD)
    cs = cf_constraints(independent, "X", "Z")
    assert all(peers == {x} for x, peers in cs.constraints)


def test_cda_constraints(linear, review, independent):
    assert cda_constraints(linear, "X", "Z").peers("1") == {"1", "3"}
    assert cda_constraints(review, "X", "Z").peers("good_1|positive") == {
        "good_1|positive",
        "good_1|negative",
    }
    cs = cda_constraints(independent, "X", "Z")
    assert all(peers == {x} for x, peers in cs.constraints)


def test_appendix_partitions(linear):
    cf = partition_from(cf_constraints(linear, "X", "Z"))
    cda = partition_from(cda_constraints(linear, "X", "Z"))
    assert cf.classes == (("-3", "-1", "1", "3"),)
    assert cda.classes == (("-3", "-1"), ("1", "3"))
    assert compare_partitions(cda, cf) is Verdict.CDA_STRICTLY_FINER


def test_review_full_support_partitions_coincide(review):
    # the neutral tone's own guessed context (like, certain) maps it to the
    # positive tone under do(dislike), which closes the gap at full support
    cf = partition_from(cf_constraints(review, "X", "Z"))
    cda = partition_from(cda_constraints(review, "X", "Z"))
    assert cf.classes == (tuple(GOOD), tuple(POOR))
    assert compare_partitions(cda, cf) is Verdict.EQUAL


def test_no_merges_gives_discrete_partition(independent):
    p = partition_from(cf_constraints(independent, "X", "Z"))
    assert p.classes == (("p",), ("q",), ("r",))
    assert compare_partitions(partition_from(cda_constraints(independent, "X", "Z")), p) is Verdict.EQUAL


def test_support_subset(linear, review, independent):
    for scm in (linear, review, independent):
        check = check_support_subset(scm, "X", "Z")
        assert check.holds and check.witness is None
    assert check_support_subset(review, "X", "Z").pairs_checked == 12


def test_zero_mass_inputs_excluded():
    scm = make_scm(
        [("Z", "exogenous", "ab"), ("X", "endogenous", "pqr")],
        {"Z": {"a": "1/2", "b": "1/2"}},
        [("X", ["Z"], {("a",): "p", ("b",): "q"})],
    )
    cs = cf_constraints(scm, "X", "Z")
    assert cs.support == ("p", "q")
    assert partition_from(cs).classes == (("p", "q"),)


def test_compare_inconsistent_and_mismatch():
    cf = Partition("X", (("a", "b"), ("c",)))
    straddle = Partition("X", (("a",), ("b", "c")))
    assert compare_partitions(straddle, cf) is Verdict.INCONSISTENT
    assert compare_partitions(cf, cf) is Verdict.EQUAL
    with pytest.raises(MismatchedSupportError):
        compare_partitions(Partition("X", (("a",),)), cf)


def test_partition_doc_roundtrip(linear):
    p = partition_from(cda_constraints(linear, "X", "Z"))
    assert Partition.from_doc(p.to_doc()) == p


DOMAIN = tuple("abcdefgh")


@st.composite
def constraint_sets(draw):
    support = draw(st.lists(st.sampled_from(DOMAIN), min_size=1, unique=True))
    support = tuple(v for v in DOMAIN if v in support)
    pairs = draw(
        st.lists(
            st.tuples(st.sampled_from(support), st.frozensets(st.sampled_from(support), max_size=3)),
            max_size=10,
        )
    )
    return ConstraintSet("X", DOMAIN, support, tuple(pairs))


@given(constraint_sets(), st.randoms())
def test_partition_order_independent(cs, rnd):
    shuffled = list(cs.constraints)
    rnd.shuffle(shuffled)
    permuted = ConstraintSet(cs.input_var, cs.domain, cs.support, tuple(shuffled))
    assert partition_from(permuted) == partition_from(cs)


@given(constraint_sets())
def test_partition_idempotent_and_covering(cs):
    p = partition_from(cs)
    assert sorted(v for c in p.classes for v in c) == sorted(cs.support)
    assert all(c for c in p.classes)
    for x, peers in cs.constraints:
        assert all(q in p.class_of(x) for q in peers)
    again = ConstraintSet("X", DOMAIN, cs.support, tuple((c[0], frozenset(c)) for c in p.classes))
    assert partition_from(again) == p
    firsts = [DOMAIN.index(c[0]) for c in p.classes]
    assert firsts == sorted(firsts)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2**32), st.sampled_from([0.0, 0.2, 0.5]))
def test_support_subset_on_random_models(seed, zero_mass):
    scm = random_scm(seed, zero_mass)
    assert check_support_subset(scm, "X", "Z").holds
    cf = partition_from(cf_constraints(scm, "X", "Z"))
    cda = partition_from(cda_constraints(scm, "X", "Z"))
    assert compare_partitions(cda, cf) is not Verdict.INCONSISTENT
