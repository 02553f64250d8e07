"""Command-line front end.

Exit codes: 0 pass / true, 1 fail / false, 2 inconclusive, 3 error.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from . import definability as dfn
from .quantifiers import UnknownQuantifier, catalog, default_registry, parse_quantifier, restrict
from .semantics import (
    SizeGuardExceeded, EvaluationError, assignment_from_json, eval_l2q, load_interpretation,
    load_model, model_to_json, relation_to_json,
)
from .syntax import FormulaError, check_well_formed, parse, render

EXIT_ERROR = 3


class UsageError(Exception):
    pass


def _read_formula(path: str, equality: bool):
    with open(path) as fh:
        return parse(fh.read(), equality=equality)


def _emit(args, payload: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True, default=str))
    else:
        print(text)


def _report_text(report: dfn.Report) -> str:
    lines = [f"verdict: {report.verdict}",
             f"models checked: {report.models_checked}",
             f"strategy: {report.strategy}"]
    for note in report.notes:
        lines.append(f"note: {note}")
    if report.counterexample is not None:
        lines.append("counterexample:")
        lines.append(json.dumps(report.counterexample, indent=2, sort_keys=True, default=str))
    return "\n".join(lines)


def _quantifier(args):
    if not args.quantifier:
        raise UsageError("--quantifier is required")
    return parse_quantifier(args.quantifier)


def cmd_eval(args) -> int:
    if not args.model or not args.formula:
        raise UsageError("eval needs --model and --formula")
    formula = _read_formula(args.formula, args.equality)
    model, assign = load_model(args.model)
    sig = check_well_formed(formula)
    s = assignment_from_json(assign, sig.pred_arities)
    interp = None
    if args.interpretation:
        interp = load_interpretation(args.interpretation)
    elif args.quantifier:
        interp = restrict(_quantifier(args), model)
    trace: Optional[list] = [] if args.trace else None
    value = eval_l2q(model, interp, s, formula, registry=default_registry(), trace=trace)
    text = "true" if value else "false"
    payload: dict = {"value": value}
    if trace is not None:
        rows = [{"node": t["node"], "ind": t["ind"], "value": t["value"],
                 "extensions": [relation_to_json(r) for r in t["extensions"]]} for t in trace]
        payload["trace"] = rows
        text += "".join(f"\n  {r['node']}  env={r['ind']}  extensions={r['extensions']}  -> {r['value']}"
                        for r in rows)
    _emit(args, payload, text)
    return 0 if value else 1


def cmd_check_implicit(args) -> int:
    if not args.sigma:
        raise UsageError("check-implicit needs --sigma")
    if args.strategy == "sampled" and args.seed is None:
        raise UsageError("--strategy sampled requires --seed")
    sigma = _read_formula(args.sigma, args.equality)
    report = dfn.check_implicit_upto(sigma, _quantifier(args), args.max_size,
                                     strategy=args.strategy, seed=args.seed, samples=args.samples)
    _emit(args, report.to_dict(), _report_text(report))
    return report.exit_code


def cmd_extract(args) -> int:
    if not args.theta:
        raise UsageError("extract needs --theta")
    theta = _read_formula(args.theta, args.equality)
    q = _quantifier(args) if (args.verify or args.quantifier) else None
    try:
        phi = dfn.extract_fo(theta, args.mode, qtype=q.qtype if q else None)
    except dfn.ExtractionError as exc:
        kind = type(exc).__name__
        _emit(args, {"error": kind, "message": str(exc)}, f"{kind}: {exc}")
        return 1
    payload: dict = {"formula": render(phi), "mode": args.mode}
    lines = [render(phi)]
    if args.mode == "structural":
        payload["note"] = dfn.STRUCTURAL_NOTE
        print(f"note: {dfn.STRUCTURAL_NOTE}", file=sys.stderr)
    code = 0
    if args.verify:
        report = dfn.verify_lemma_equivalence(theta, phi, q, args.max_size)
        payload["report"] = report.to_dict()
        lines.append(_report_text(report))
        code = report.exit_code
    _emit(args, payload, "\n".join(lines))
    return code


def cmd_models(args) -> int:
    arities = args.arity or [1]
    dom = tuple(range(1, args.size + 1))
    models = [model_to_json(m) for m in dfn.henkin_models(dom, arities)]
    if args.format == "json":
        print(json.dumps({"count": len(models), "models": models}, indent=2, sort_keys=True))
    else:
        print(f"# {len(models)} models")
        for m in models:
            print(json.dumps(m, sort_keys=True))
    return 0


def cmd_catalog(args) -> int:
    rows = catalog()
    if args.format == "json":
        print(json.dumps(rows, indent=2, sort_keys=True))
    else:
        for r in rows:
            qtype = "<" + ",".join(map(str, r["type"])) + ">"
            print(f"{r['name']:<26} {qtype:<7} {r['definition']}  [{r['provenance']}]")
    return 0


def cmd_check_comprehension(args) -> int:
    if not args.model or not args.formula:
        raise UsageError("check-comprehension needs --model and at least one --formula")
    model, _ = load_model(args.model)
    instances = [_read_formula(p, args.equality) for p in args.formula]
    report = dfn.check_comprehension(model, instances)
    _emit(args, report.to_dict(), _report_text(report))
    return report.exit_code


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["text", "json"], default="text")
    common.add_argument("--equality", action="store_true", help="allow x = y atoms")

    p = argparse.ArgumentParser(prog="gqw", description="Generalized quantifiers over finite Henkin models.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", parents=[common], help="evaluate a formula in a model file")
    e.add_argument("--model")
    e.add_argument("--formula")
    e.add_argument("--interpretation")
    e.add_argument("--quantifier", help="interpret Q(...) by restricting NAME[:k] to the model")
    e.add_argument("--trace", action="store_true")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("check-implicit", parents=[common], help="finitized implicit definability check")
    c.add_argument("--sigma")
    c.add_argument("--quantifier")
    c.add_argument("--max-size", type=int, default=2)
    c.add_argument("--strategy", choices=["exhaustive", "sampled"], default="exhaustive")
    c.add_argument("--seed", type=int)
    c.add_argument("--samples", type=int, default=100)
    c.set_defaults(func=cmd_check_implicit)

    x = sub.add_parser("extract", parents=[common], help="extract a first-order definition")
    x.add_argument("--theta")
    x.add_argument("--mode", choices=["prenex", "structural"], default="prenex")
    x.add_argument("--verify", action="store_true")
    x.add_argument("--quantifier")
    x.add_argument("--max-size", type=int, default=3)
    x.set_defaults(func=cmd_extract)

    m = sub.add_parser("models", parents=[common], help="enumerate Henkin models")
    m.add_argument("--size", type=int, required=True)
    m.add_argument("--arity", type=int, action="append")
    m.set_defaults(func=cmd_models)

    k = sub.add_parser("catalog", parents=[common], help="list builtin quantifiers")
    k.set_defaults(func=cmd_catalog)

    h = sub.add_parser("check-comprehension", parents=[common], help="check comprehension instances")
    h.add_argument("--model")
    h.add_argument("--formula", action="append")
    h.set_defaults(func=cmd_check_comprehension)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else EXIT_ERROR
    if getattr(args, "max_size", 1) < 1:
        print("error: --max-size must be at least 1", file=sys.stderr)
        return EXIT_ERROR
    if getattr(args, "size", 1) < 1:
        print("error: --size must be at least 1", file=sys.stderr)
        return EXIT_ERROR
    try:
        return args.func(args)
    except (UsageError, FormulaError, EvaluationError, SizeGuardExceeded, UnknownQuantifier,
            ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
