"""Command-line front end.

Exit codes: 0 success, 1 usage, 2 validation, 3 parse, 4 query,
5 demo assertion.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from cfaudit import augment as aug
from cfaudit.examples import DemoAssertionError, run_appendix_demo, run_review_demo
from cfaudit.inference import CounterfactualQuery, counterfactual, guess_counterfactual
from cfaudit.invariance import (
    cda_constraints,
    cf_constraints,
    check_support_subset,
    compare_partitions,
    partition_from,
)
from cfaudit.scm import (
    InvalidModelError,
    ModelParseError,
    QueryError,
    Scm,
    load_scm,
    parse_rational,
    validate,
)

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_PARSE, EXIT_QUERY, EXIT_DEMO = range(6)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _binding(text: str) -> tuple[str, str]:
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected VAR=value, got {text!r}")
    return name.strip(), value.strip()


def _bindings(pairs, what: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for name, value in pairs or []:
        if name in out and out[name] != value:
            raise UsageError(f"{what} binds {name} twice")
        out[name] = value
    return out


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except ModelParseError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {n}")
    return n


def _load_valid(path: str) -> Scm:
    scm = load_scm(path)
    report = validate(scm)
    if not report.ok:
        raise InvalidModelError(list(report.violations))
    return scm


def _emit(args, doc: dict, text: str) -> None:
    body = json.dumps(doc, indent=2) if args.format == "json" else text
    if getattr(args, "output", None):
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(body + "\n")
    else:
        print(body)


def cmd_validate(args) -> int:
    scm = load_scm(args.model)
    report = validate(scm)
    doc = {"model": args.model, "ok": report.ok, "violations": list(report.violations)}
    if report.ok:
        _emit(args, doc, f"{args.model}: ok")
        return EXIT_OK
    for v in report.violations:
        print(f"{args.model}: {v}", file=sys.stderr)
    if args.format == "json":
        print(json.dumps(doc, indent=2))
    return EXIT_INVALID


def cmd_counterfactual(args) -> int:
    scm = _load_valid(args.model)
    do = _bindings(args.do, "--do")
    evidence = _bindings(args.evidence, "--evidence")
    if args.guess_context:
        if list(do) != [args.guess_context]:
            raise UsageError("--guess-context needs exactly one --do binding, on the context variable")
        dist = guess_counterfactual(scm, args.target, args.guess_context, do[args.guess_context], evidence)
    else:
        if not do:
            raise UsageError("at least one --do binding is required")
        dist = counterfactual(scm, CounterfactualQuery(args.target, do, evidence))
    approx = ", ".join(f"{k}: {float(m):.4f}" for k, m in dist.nonzero().items())
    doc = {
        "query": {
            "target": args.target,
            "do": do,
            "evidence": evidence,
            "guess_context": args.guess_context,
        },
        "distribution": dist.to_doc(),
    }
    _emit(args, doc, f"{dist}\n~ {approx}")
    return EXIT_OK


def cmd_audit(args) -> int:
    scm = _load_valid(args.model)
    cf = partition_from(cf_constraints(scm, args.input, args.context))
    cda = partition_from(cda_constraints(scm, args.input, args.context))
    subset = check_support_subset(scm, args.input, args.context)
    verdict = compare_partitions(cda, cf)
    doc = {
        "input_var": args.input,
        "context_var": args.context,
        "cf_partition": cf.to_doc(),
        "cda_partition": cda.to_doc(),
        "support_subset": {
            "holds": subset.holds,
            "witness": subset.witness,
            "pairs_checked": subset.pairs_checked,
        },
        "verdict": verdict.value,
    }
    text = "\n".join(
        [
            f"cf partition:   {cf}",
            f"cda partition:  {cda}",
            "support subset: " + ("holds" if subset.holds else f"violated at {subset.witness}"),
            f"verdict:        {verdict.value}",
        ]
    )
    _emit(args, doc, text)
    return EXIT_OK


def cmd_augment(args) -> int:
    scm = _load_valid(args.model)
    data = aug.read_dataset(args.data)
    sampling = aug.Sampling(args.k, args.seed) if args.k else None
    common = (scm, args.input, args.label, args.context, data)
    if args.mode == aug.FULL:
        result = aug.full_cda(*common, sampling=sampling)
    elif args.mode == aug.GUESS:
        result = aug.guess_cda(*common, sampling=sampling)
    else:
        if args.context_samples:
            rule = aug.SampleContexts(args.context_samples, args.seed)
        else:
            rule = aug.Threshold(args.tau)
        result = aug.posterior_cda(*common, context_rule=rule, sampling=sampling)
    aug.write_augmented(args.output, result)
    print(
        f"{len(result.augmented)} augmented records from {len(data)} examples "
        f"({args.mode}) written to {args.output}"
    )
    return EXIT_OK


def cmd_demo(args) -> int:
    if args.which == "appendix":
        report = run_appendix_demo(strict=False)
    else:
        report = run_review_demo(
            train_n=args.train_n,
            seed=args.seed,
            test_prior_ux=args.test_prior_ux,
            test_n=args.test_n,
            strict=False,
        )
    _emit(args, report.to_doc(), report.text())
    if not report.ok:
        raise DemoAssertionError(f"{report.name} demo: {report.first_failure()}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cfaudit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, output=True):
        p.add_argument("--format", choices=("text", "json"), default="text")
        if output:
            p.add_argument("--output", help="write the report here instead of stdout")

    p = sub.add_parser("validate", help="check a model file")
    p.add_argument("model")
    common(p, output=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("counterfactual", help="counterfactual distribution of a target")
    p.add_argument("model")
    p.add_argument("--target", required=True)
    p.add_argument("--do", type=_binding, action="append", metavar="VAR=value")
    p.add_argument("--evidence", type=_binding, action="append", metavar="VAR=value")
    p.add_argument("--guess-context", metavar="VAR", help="condition on the MAP value of VAR first")
    common(p)
    p.set_defaults(func=cmd_counterfactual)

    p = sub.add_parser("audit", help="compare true and guessed-context invariance partitions")
    p.add_argument("model")
    p.add_argument("--input", default="X")
    p.add_argument("--context", default="Z")
    common(p)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("augment", help="counterfactually augment a dataset")
    p.add_argument("model")
    p.add_argument("data", help="newline-delimited JSON records with x, y, weight")
    p.add_argument("--mode", choices=(aug.FULL, aug.GUESS, aug.POSTERIOR), required=True)
    p.add_argument("--input", default="X")
    p.add_argument("--label", default="Y")
    p.add_argument("--context", default="Z")
    p.add_argument("--tau", type=_rational, default=Fraction(0), help="posterior threshold (default 0)")
    p.add_argument("--context-samples", type=_positive, metavar="K",
                   help="posterior mode: sample K contexts instead of thresholding")
    p.add_argument("--k", type=_positive, help="draw K samples per intervention (default: enumerate)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("demo", help="run a worked example")
    p.add_argument("which", choices=("appendix", "review"))
    p.add_argument("--train-n", type=_positive, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test-prior-ux", type=_rational, default=Fraction(1, 10))
    p.add_argument("--test-n", type=_positive, default=2000)
    common(p)
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"cfaudit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidModelError as exc:
        for v in exc.violations:
            print(f"cfaudit: invalid model: {v}", file=sys.stderr)
        return EXIT_INVALID
    except (ModelParseError, aug.DatasetFormatError) as exc:
        print(f"cfaudit: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (QueryError, ValueError) as exc:
        print(f"cfaudit: query error: {exc}", file=sys.stderr)
        return EXIT_QUERY
    except DemoAssertionError as exc:
        print(f"cfaudit: demo assertion failed: {exc}", file=sys.stderr)
        return EXIT_DEMO


if __name__ == "__main__":
    sys.exit(main())
