from fractions import Fraction

import pytest

import oracle
from cfaudit.generate import random_scms
from cfaudit.inference import (
    CounterfactualQuery,
    Distribution,
    ImpossibleEvidenceError,
    counterfactual,
    exogenous_posterior,
    guess_counterfactual,
    map_context,
    posterior,
)
from cfaudit.scm import QueryError, make_scm, marginal

F = Fraction


def cf(scm, target, do, evidence):
    return counterfactual(scm, CounterfactualQuery(target, do, evidence))


def test_abduction_linear(linear):
    assert posterior(linear, "U_X", {"X": "1"}).pmf == {"-1": 0, "0": F(1, 3), "1": F(2, 3)}
    assert posterior(linear, "U_X", {"X": "1", "Z": "-1"}).nonzero() == {"1": 1}


def test_full_exogenous_evidence_pins_world(review):
    evidence = {"U_X": "-1", "Z": "dislike", "C": "good_1", "U_Y": "0"}
    joint = posterior(review, ("X", "Y"), evidence)
    assert joint.nonzero() == {("good_1|positive", "helpful"): 1}


def test_impossible_evidence(linear):
    with pytest.raises(ImpossibleEvidenceError, match="X=3"):
        posterior(linear, "Z", {"X": "3", "Z": "-1"})
    with pytest.raises(QueryError, match="outside the domain"):
        posterior(linear, "Z", {"X": "5"})


def test_map_context(linear, review):
    g = map_context(linear, "Z", {"X": "1"})
    assert (g.value, g.tie) == ("-1", False)
    assert g.posterior.pmf == {"-1": F(2, 3), "1": F(1, 3)}
    g = map_context(review, "Z", {"X": "good_1|positive"})
    assert (g.value, g.tie) == ("like", False)
    assert g.posterior.pmf == {"like": F(9, 10), "dislike": F(1, 10)}


def test_map_tie_breaks_to_first_domain_value():
    scm = make_scm(
        [("Z", "exogenous", ["b", "a"]), ("U", "exogenous", "01"), ("X", "endogenous", "01")],
        {"Z": {"b": F(1, 2), "a": F(1, 2)}, "U": {"0": F(1, 3), "1": F(2, 3)}},
        [("X", ["U"], {("0",): "0", ("1",): "1"})],
    )
    g = map_context(scm, "Z", {"X": "1"})
    assert (g.value, g.tie) == ("b", True)


def test_appendix_counterfactuals(linear):
    assert cf(linear, "X", {"Z": "1"}, {"X": "1"}).nonzero() == {"1": F(1, 3), "3": F(2, 3)}
    assert cf(linear, "X", {"Z": "-1"}, {"X": "1"}).nonzero() == {"-1": F(1, 3), "1": F(2, 3)}


def test_review_counterfactual(review):
    # abducted reviewer type is 1 w.p. 9/10 and -1 w.p. 1/10
    dist = cf(review, "X", {"Z": "dislike"}, {"X": "good_1|positive"})
    assert dist.nonzero() == {"good_1|negative": F(9, 10), "good_1|positive": F(1, 10)}


def test_guess_counterfactuals(linear, review):
    assert guess_counterfactual(linear, "X", "Z", "1", {"X": "1"}).nonzero() == {"3": 1}
    assert guess_counterfactual(linear, "X", "Z", "-1", {"X": "1"}).nonzero() == {"1": 1}
    dist = guess_counterfactual(review, "X", "Z", "dislike", {"X": "good_1|positive"})
    assert dist.nonzero() == {"good_1|negative": 1}


def test_guess_with_own_context_returns_observation(linear, review):
    for scm, x in ((linear, "1"), (linear, "-3"), (review, "poor_1|neutral"), (review, "good_1|positive")):
        z_map = map_context(scm, "Z", {"X": x}).value
        assert guess_counterfactual(scm, "X", "Z", z_map, {"X": x}).nonzero() == {x: 1}


def test_multi_variable_intervention(review):
    dist = cf(review, "X", {"Z": "like", "C": "poor_1"}, {"X": "good_1|positive"})
    assert dist.nonzero() == {"poor_1|positive": F(9, 10), "poor_1|neutral": F(1, 10)}


def test_intervening_on_endogenous_variable(review):
    dist = cf(review, "Y", {"X": "poor_1|neutral"}, {"X": "good_1|negative"})
    assert dist.nonzero() == {"helpful": 1}


def test_distribution_doc_roundtrip(review):
    for dist in (
        cf(review, "X", {"Z": "dislike"}, {"X": "good_1|positive"}),
        posterior(review, ("Z", "U_X"), {"X": "good_1|positive"}),
    ):
        assert Distribution.from_doc(dist.to_doc()) == dist


@pytest.mark.parametrize("seed", range(30))
def test_matches_oracle_on_random_models(seed):
    scm = random_scms(1, base_seed=1000 + seed)[0]
    for target in scm.endogenous:
        for var in scm.names:
            for do_value in scm.domain(var):
                for x in scm.domain("X"):
                    expected = oracle.counterfactual(scm, target, {var: do_value}, {"X": x})
                    if expected is None:
                        with pytest.raises(ImpossibleEvidenceError):
                            cf(scm, target, {var: do_value}, {"X": x})
                        continue
                    dist = cf(scm, target, {var: do_value}, {"X": x})
                    assert dist.pmf == expected
                    assert dist.total() == 1


@pytest.mark.parametrize("seed", range(30))
def test_point_mass_abduction_gives_point_mass(seed):
    scm = random_scms(1, base_seed=2000 + seed)[0]
    for x, mass in marginal(scm, "X").pmf.items():
        if not mass:
            continue
        exo = exogenous_posterior(scm, {"X": x})
        if len(exo) != 1:
            continue
        for z in scm.domain("Z"):
            assert cf(scm, "X", {"Z": z}, {"X": x}).is_point_mass()
