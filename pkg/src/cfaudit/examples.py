"""The two worked models, a partition classifier, and end-to-end demos.

The linear model is ``X = Z + 2*U_X`` with ``Z`` uniform on {-1, 1} and
``U_X`` on {-1, 0, 1} with masses 2/5, 1/5, 2/5.  The review model
generates a review ``X = content|tone`` from content ``C``, reviewer
sentiment ``Z`` and reviewer type ``U_X`` (1 straightforward, -1 sarcastic),
with helpfulness ``Y`` determined by content alone.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from cfaudit import augment as aug
from cfaudit.inference import CounterfactualQuery, counterfactual, guess_counterfactual, map_context
from cfaudit.invariance import (
    Partition,
    Verdict,
    cda_constraints,
    cf_constraints,
    check_support_subset,
    compare_partitions,
    partition_from,
)
from cfaudit.scm import CfauditError, Scm, enumerate_worlds, format_rational, make_scm, validate

ABSTAIN = "abstain"
MAJORITY_GLOBAL = "majority_global"

TONES = ("positive", "negative", "neutral")
HELPFUL, NOT_HELPFUL = "helpful", "not_helpful"


class DemoAssertionError(CfauditError):
    pass


class DomainMismatchError(CfauditError):
    pass


# -- models ---------------------------------------------------------------


def build_linear_scm() -> Scm:
    z_dom, u_dom = (-1, 1), (-1, 0, 1)
    x_dom = (-3, -1, 1, 3)
    return make_scm(
        [("Z", "exogenous", z_dom), ("U_X", "exogenous", u_dom), ("X", "endogenous", x_dom)],
        {
            "Z": {-1: Fraction(1, 2), 1: Fraction(1, 2)},
            "U_X": {-1: Fraction(2, 5), 0: Fraction(1, 5), 1: Fraction(2, 5)},
        },
        [("X", ["Z", "U_X"], {(z, u): z + 2 * u for z in z_dom for u in u_dom})],
    )


# (reviewer type, sentiment) -> tone
TONE_TABLE = {
    ("1", "like"): "positive",
    ("1", "dislike"): "negative",
    ("-1", "like"): "neutral",
    ("-1", "dislike"): "positive",
}


def review_contents(n_contents: int = 2) -> list[str]:
    """``good_1, poor_1, good_2, poor_2, ...`` truncated to ``n_contents``."""
    out = []
    i = 1
    while len(out) < n_contents:
        out += [f"good_{i}", f"poor_{i}"]
        i += 1
    return out[:n_contents]


def review_x(content: str, tone: str) -> str:
    return f"{content}|{tone}"


def build_review_scm(
    p_straightforward: Fraction = Fraction(9, 10),
    p_like: Fraction = Fraction(1, 2),
    n_contents: int = 2,
) -> Scm:
    p_straightforward, p_like = Fraction(p_straightforward), Fraction(p_like)
    contents = review_contents(n_contents)
    xs = [review_x(c, t) for c in contents for t in TONES]
    x_table = {
        (c, z, u): review_x(c, TONE_TABLE[(u, z)])
        for c in contents
        for z in ("like", "dislike")
        for u in ("1", "-1")
    }
    y_table = {(c, "0"): HELPFUL if c.startswith("good") else NOT_HELPFUL for c in contents}
    return make_scm(
        [
            ("U_X", "exogenous", ("1", "-1")),
            ("Z", "exogenous", ("like", "dislike")),
            ("C", "exogenous", contents),
            ("U_Y", "exogenous", ("0",)),
            ("X", "endogenous", xs),
            ("Y", "endogenous", (HELPFUL, NOT_HELPFUL)),
        ],
        {
            "U_X": {"1": p_straightforward, "-1": 1 - p_straightforward},
            "Z": {"like": p_like, "dislike": 1 - p_like},
            "C": {c: Fraction(1, len(contents)) for c in contents},
            "U_Y": {"0": Fraction(1)},
        },
        [("X", ["C", "Z", "U_X"], x_table), ("Y", ["C", "U_Y"], y_table)],
    )


# -- partition classifier -------------------------------------------------


@dataclass
class PartitionClassifier:
    """Predicts the majority training label of the input's partition class."""

    partition: Partition
    label_var: str
    input_domain: tuple[str, ...]
    label_domain: tuple[str, ...]
    class_labels: dict[tuple[str, ...], str]
    tied: set[tuple[str, ...]] = field(default_factory=set)
    fallback: str = ABSTAIN
    global_label: str | None = None

    def predict(self, x: str) -> str | None:
        """Label for ``x``; ``None`` means the classifier abstains."""
        c = self.partition.class_of(x)
        if c is not None and c in self.class_labels:
            return self.class_labels[c]
        return self.global_label if self.fallback == MAJORITY_GLOBAL else None

    def abstention_set(self) -> set[str]:
        return {x for x in self.input_domain if self.predict(x) is None}


def _majority(counts: Counter, order: tuple[str, ...]) -> tuple[str, bool]:
    best = max(counts.values())
    winners = [y for y in order if counts.get(y) == best]
    return winners[0], len(winners) > 1


def fit_partition_classifier(
    train: Iterable[aug.LabeledExample],
    partition: Partition,
    scm: Scm,
    label_var: str,
    fallback: str = ABSTAIN,
) -> PartitionClassifier:
    if fallback not in (ABSTAIN, MAJORITY_GLOBAL):
        raise ValueError(f"unknown fallback {fallback!r}")
    label_domain = scm.domain(label_var)
    per_class: dict[tuple[str, ...], Counter] = {}
    overall: Counter = Counter()
    for ex in train:
        c = partition.class_of(ex.x)
        if c is None:
            raise ValueError(f"training input {ex.x!r} is outside the partition's support")
        per_class.setdefault(c, Counter())[ex.y] += ex.weight
        overall[ex.y] += ex.weight
    labels, tied = {}, set()
    for c, counts in per_class.items():
        labels[c], is_tie = _majority(counts, label_domain)
        if is_tie:
            tied.add(c)
    global_label = _majority(overall, label_domain)[0] if overall else None
    return PartitionClassifier(
        partition,
        label_var,
        scm.domain(partition.input_var),
        label_domain,
        labels,
        tied,
        fallback,
        global_label,
    )


@dataclass
class OodReport:
    accuracy: Fraction
    abstention_rate: Fraction
    per_class: dict[str, dict]
    n: int | None = None

    def to_doc(self) -> dict:
        return {
            "accuracy": format_rational(self.accuracy),
            "abstention_rate": format_rational(self.abstention_rate),
            "n": self.n,
            "per_class": self.per_class,
        }


def _check_domains(clf: PartitionClassifier, scm_test: Scm) -> None:
    if scm_test.domain(clf.partition.input_var) != clf.input_domain:
        raise DomainMismatchError("test model's input domain differs from the training model's")
    if scm_test.domain(clf.label_var) != clf.label_domain:
        raise DomainMismatchError("test model's label domain differs from the training model's")


def _class_key(clf: PartitionClassifier, x: str) -> str:
    c = clf.partition.class_of(x)
    return "{" + ", ".join(c) + "}" if c is not None else "<unseen>"


def _score(clf: PartitionClassifier, weighted: Iterable[tuple[str, str, Fraction]], n=None) -> OodReport:
    total = correct = abstained = Fraction(0)
    per_class: dict[str, dict] = {}
    for x, y, w in weighted:
        pred = clf.predict(x)
        row = per_class.setdefault(
            _class_key(clf, x), {"mass": Fraction(0), "correct": Fraction(0), "abstained": Fraction(0)}
        )
        total += w
        row["mass"] += w
        if pred is None:
            abstained += w
            row["abstained"] += w
        elif pred == y:
            correct += w
            row["correct"] += w
    per_class = {k: {f: format_rational(v / total) for f, v in row.items()} for k, row in per_class.items()}
    return OodReport(correct / total, abstained / total, per_class, n)


def ood_eval(clf: PartitionClassifier, scm_test: Scm, n: int, seed: int = 0) -> OodReport:
    """Score ``clf`` on ``n`` examples drawn from ``scm_test``.

    Abstentions count as errors.
    """
    _check_domains(clf, scm_test)
    sample = aug.sample_dataset(scm_test, clf.partition.input_var, clf.label_var, n, seed)
    return _score(clf, ((ex.x, ex.y, Fraction(1)) for ex in sample), n)


def ood_expected(clf: PartitionClassifier, scm_test: Scm) -> OodReport:
    """Exact expected accuracy of ``clf`` over the test model's worlds."""
    _check_domains(clf, scm_test)
    x_var = clf.partition.input_var
    return _score(
        clf,
        ((w[x_var], w[clf.label_var], w.probability) for w in enumerate_worlds(scm_test) if w.probability),
    )


# -- demos ----------------------------------------------------------------


@dataclass
class DemoReport:
    name: str
    data: dict
    checks: list[tuple[str, bool]] = field(default_factory=list)
    lines: list[str] = field(default_factory=list)

    def check(self, name: str, passed: bool) -> None:
        self.checks.append((name, bool(passed)))

    @property
    def ok(self) -> bool:
        return all(p for _, p in self.checks)

    def first_failure(self) -> str | None:
        return next((n for n, p in self.checks if not p), None)

    def to_doc(self) -> dict:
        return {
            "demo": self.name,
            "ok": self.ok,
            "checks": [{"name": n, "passed": p} for n, p in self.checks],
            **self.data,
        }

    def text(self) -> str:
        out = list(self.lines)
        out.append("")
        out += [f"[{'PASS' if p else 'FAIL'}] {n}" for n, p in self.checks]
        return "\n".join(out)


def _raise_if_failed(report: DemoReport, strict: bool) -> DemoReport:
    if strict and not report.ok:
        raise DemoAssertionError(f"{report.name} demo: {report.first_failure()}")
    return report


def run_appendix_demo(strict: bool = True) -> DemoReport:
    scm = build_linear_scm()
    report = DemoReport("appendix", {})
    report.check("linear model validates", validate(scm).ok)

    xs = [x for x in scm.domain("X")]
    counterfactuals = {}
    guesses = {}
    guessed_cf = {}
    for x in xs:
        g = map_context(scm, "Z", {"X": x})
        guesses[x] = {"z_map": g.value, "tie": g.tie, "posterior": g.posterior.to_doc()}
        for z in scm.domain("Z"):
            key = f"X(Z={z})|X={x}"
            counterfactuals[key] = counterfactual(
                scm, CounterfactualQuery("X", {"Z": z}, {"X": x})
            ).to_doc()
            guessed_cf[f"X(Z={z})|X={x},Z={g.value}"] = guess_counterfactual(
                scm, "X", "Z", z, {"X": x}
            ).to_doc()

    cf_part = partition_from(cf_constraints(scm, "X", "Z"))
    cda_part = partition_from(cda_constraints(scm, "X", "Z"))
    subset = check_support_subset(scm, "X", "Z")
    verdict = compare_partitions(cda_part, cf_part)

    report.data.update(
        {
            "map_context": guesses,
            "counterfactuals": counterfactuals,
            "guess_counterfactuals": guessed_cf,
            "cf_partition": cf_part.to_doc(),
            "cda_partition": cda_part.to_doc(),
            "support_subset": {"holds": subset.holds, "witness": subset.witness},
            "verdict": verdict.value,
        }
    )

    third, two_thirds = format_rational(Fraction(1, 3)), format_rational(Fraction(2, 3))
    zero, one = format_rational(Fraction(0)), format_rational(Fraction(1))
    report.check(
        "P(X(Z=1)|X=1) = {1: 1/3, 3: 2/3}",
        counterfactuals["X(Z=1)|X=1"]["pmf"] == {"-3": zero, "-1": zero, "1": third, "3": two_thirds},
    )
    report.check(
        "P(X(Z=-1)|X=1) = {-1: 1/3, 1: 2/3}",
        counterfactuals["X(Z=-1)|X=1"]["pmf"] == {"-3": zero, "-1": third, "1": two_thirds, "3": zero},
    )
    report.check("z_MAP(1) = -1", guesses["1"]["z_map"] == "-1" and not guesses["1"]["tie"])
    report.check(
        "P(X(Z=1)|X=1,Z=-1) is the point mass at 3",
        guessed_cf["X(Z=1)|X=1,Z=-1"]["pmf"]["3"] == one,
    )
    report.check(
        "P(X(Z=-1)|X=1,Z=-1) is the point mass at 1",
        guessed_cf["X(Z=-1)|X=1,Z=-1"]["pmf"]["1"] == one,
    )
    report.check("cf partition = {{-3,-1,1,3}}", cf_part.as_sets() == {frozenset({"-3", "-1", "1", "3"})})
    report.check(
        "cda partition = {{1,3},{-3,-1}}",
        cda_part.as_sets() == {frozenset({"1", "3"}), frozenset({"-3", "-1"})},
    )
    report.check("support subset holds", subset.holds)
    report.check("verdict = cda_strictly_finer", verdict is Verdict.CDA_STRICTLY_FINER)

    report.lines += [
        "Linear model X = Z + 2 U_X",
        "",
        "True counterfactuals:",
        *(f"  P({k}) = {_pmf_text(v)}" for k, v in counterfactuals.items()),
        "MAP contexts:",
        *(f"  z_MAP({x}) = {g['z_map']}{' (tie)' if g['tie'] else ''}" for x, g in guesses.items()),
        "Guessed-context counterfactuals:",
        *(f"  P({k}) = {_pmf_text(v)}" for k, v in guessed_cf.items()),
        "",
        f"cf partition:  {cf_part}",
        f"cda partition: {cda_part}",
        f"support subset: {'holds' if subset.holds else f'violated at {subset.witness}'}",
        f"verdict: {verdict.value}",
    ]
    return _raise_if_failed(report, strict)


def _pmf_text(doc: dict) -> str:
    return ", ".join(f"{k}: {Fraction(m)}" for k, m in doc["pmf"].items() if Fraction(m))


def _variant(scm_train: Scm, scm_test: Scm, data, test_n: int, test_seed: int) -> dict:
    results = {}
    classifiers = {}
    for mode, fn in (("guess", aug.guess_cda), ("full", aug.full_cda)):
        dataset = fn(scm_train, "X", "Y", "Z", data)
        part = partition_from(aug.induced_constraints(dataset))
        clf = fit_partition_classifier(dataset.training_examples(), part, scm_train, "Y")
        exact = ood_expected(clf, scm_test)
        sampled = ood_eval(clf, scm_test, test_n, test_seed)
        classifiers[mode] = clf
        results[mode] = {
            "augmented_records": len(dataset.augmented),
            "partition": part.to_doc(),
            "class_labels": {", ".join(c): y for c, y in clf.class_labels.items()},
            "abstains_on": sorted(clf.abstention_set(), key=clf.input_domain.index),
            "expected": exact.to_doc(),
            "sampled": sampled.to_doc(),
        }
    gap = Fraction(results["full"]["expected"]["accuracy"]) - Fraction(results["guess"]["expected"]["accuracy"])
    results["gap"] = format_rational(gap)
    results["monotone_abstention"] = classifiers["guess"].abstention_set() >= classifiers["full"].abstention_set()
    return results


def run_review_demo(
    train_n: int = 500,
    seed: int = 0,
    test_prior_ux: Fraction = Fraction(1, 10),
    test_n: int = 2000,
    test_seed: int | None = None,
    strict: bool = True,
) -> DemoReport:
    if train_n < 1:
        raise ValueError("train_n must be at least 1")
    test_prior_ux = Fraction(test_prior_ux)
    if not 0 <= test_prior_ux <= 1:
        raise ValueError("test prior must be a probability")
    test_seed = seed + 1 if test_seed is None else test_seed

    train = build_review_scm()
    test = build_review_scm(p_straightforward=test_prior_ux)
    report = DemoReport(
        "review",
        {
            "parameters": {
                "train_n": train_n,
                "seed": seed,
                "test_prior_ux": format_rational(test_prior_ux),
                "test_n": test_n,
                "test_seed": test_seed,
            }
        },
    )

    probe = [aug.LabeledExample(review_x("good_1", "positive"), HELPFUL)]
    guess_probe = aug.guess_cda(train, "X", "Y", "Z", probe)
    full_probe = aug.full_cda(train, "X", "Y", "Z", probe)
    report.data["probe"] = {
        "example": {"x": probe[0].x, "y": probe[0].y},
        "guess": sorted(guess_probe.x_primes(), key=train.domain("X").index),
        "full": sorted(full_probe.x_primes(), key=train.domain("X").index),
    }
    report.check(
        "guess-CDA of good_1|positive emits only negative and positive tones",
        guess_probe.x_primes() == {"good_1|negative", "good_1|positive"},
    )
    report.check(
        "full-CDA of good_1|positive also emits the neutral tone",
        full_probe.x_primes() == {"good_1|negative", "good_1|neutral", "good_1|positive"},
    )
    report.check(
        "labels preserved on every augmented record",
        all(a.y == HELPFUL for a in guess_probe.augmented + full_probe.augmented),
    )

    cf_full = partition_from(cf_constraints(train, "X", "Z"))
    cda_full = partition_from(cda_constraints(train, "X", "Z"))
    report.data["full_support_audit"] = {
        "cf_partition": cf_full.to_doc(),
        "cda_partition": cda_full.to_doc(),
        "verdict": compare_partitions(cda_full, cf_full).value,
        "support_subset_holds": check_support_subset(train, "X", "Z").holds,
    }

    data = aug.sample_dataset(train, "X", "Y", train_n, seed)
    rare_absent = [ex for ex in data if not ex.x.endswith("|neutral")]
    p_neutral = sum(
        (w.probability for w in enumerate_worlds(test) if w["X"].endswith("|neutral")), Fraction(0)
    )
    report.data["p_neutral_test"] = format_rational(p_neutral)

    variants = {}
    for name, subset in (("unfiltered", data), ("rare_context_absent", rare_absent)):
        if not subset:
            continue
        variants[name] = _variant(train, test, subset, test_n, test_seed)
        variants[name]["train_size"] = len(subset)
        report.check(f"{name}: full-CDA exact accuracy is 1", Fraction(variants[name]["full"]["expected"]["accuracy"]) == 1)
        report.check(f"{name}: guess-CDA abstains wherever full-CDA does", variants[name]["monotone_abstention"])
    report.data["variants"] = variants
    if "rare_context_absent" in variants:
        rare = variants["rare_context_absent"]
        report.check(
            "rare_context_absent: guess-CDA abstains exactly on neutral tones",
            set(rare["guess"]["abstains_on"]) == {x for x in train.domain("X") if x.endswith("|neutral")},
        )
        report.check(
            "rare_context_absent: guess-CDA exact accuracy = 1 - P(neutral)",
            Fraction(rare["guess"]["expected"]["accuracy"]) == 1 - p_neutral,
        )

    report.lines += [
        f"Review model, train_n={train_n}, seed={seed}, test P(U_X=1)={test_prior_ux}",
        "",
        f"guess-CDA of {probe[0].x}: {report.data['probe']['guess']}",
        f"full-CDA of  {probe[0].x}: {report.data['probe']['full']}",
        "",
        "Full-support audit (every x in supp(X)):",
        f"  cf partition:  {cf_full}",
        f"  cda partition: {cda_full}",
        f"  verdict: {report.data['full_support_audit']['verdict']}",
        f"P(neutral tone) under the test model: {p_neutral}",
    ]
    for name, v in variants.items():
        report.lines += [
            "",
            f"Variant {name} ({v['train_size']} training examples):",
        ]
        for mode in ("full", "guess"):
            e, s = v[mode]["expected"], v[mode]["sampled"]
            report.lines.append(
                f"  {mode:5s}-CDA  partition {Partition.from_doc(v[mode]['partition'])}"
            )
            report.lines.append(
                f"             expected accuracy {Fraction(e['accuracy'])} ({float(Fraction(e['accuracy'])):.4f}),"
                f" sampled accuracy {float(Fraction(s['accuracy'])):.4f} (n={s['n']}),"
                f" abstains on {v[mode]['abstains_on'] or 'nothing'}"
            )
        report.lines.append(f"  accuracy gap (full - guess): {Fraction(v['gap'])} ({float(Fraction(v['gap'])):.4f})")
    return _raise_if_failed(report, strict)
