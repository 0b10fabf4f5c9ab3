"""Command-line front end.

Subcommands: eval-interp, run-forp, enumerate, pipeline, compose, forest,
dominate, rational-dominate, check-equiv, corpus-check.  Human-readable
text by default, JSON behind --json.  Exit codes: 0 success, 1 domain
errors (including corpus disagreements), 2 usage errors.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import domination, forprog, interpretation, logic, pipeline, semigroup
from .errors import PolyregError
from .interpretation import TupleOrder
from .structures import ordered_model


def _words_upto(alphabet, max_len, min_len=0):
    for length in range(min_len, max_len + 1):
        for combo in itertools.product(sorted(alphabet), repeat=length):
            yield "".join(combo)


def _tuples_json(tuples):
    return json.dumps([list(t) for t in tuples], separators=(",", ":"))


def _load_interp(path):
    return interpretation.Interpretation.from_json(Path(path).read_text(), name=Path(path).stem)


def _load_enum(path):
    return pipeline.DefinableEnumerator.from_json(Path(path).read_text(), name=Path(path).stem)


def _load_prog(path):
    return forprog.parse_program(Path(path).read_text(), name=Path(path).stem)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_eval_interp(args):
    interp = _load_interp(args.file)
    if args.via_pipeline:
        result, report = pipeline.interpret_via_pipeline(interp, args.input)
    else:
        result, report = interpretation.evaluate_interpretation(interp, args.input), None
    if args.json:
        payload = {
            "output": result.output,
            "tuples": [list(t) for t in result.tuples],
            "below_length_threshold": result.below_length_threshold,
        }
        if report is not None:
            payload["fallback_used"] = report.fallback_used
        print(json.dumps(payload, sort_keys=True))
    else:
        print(result.output)
        if result.below_length_threshold:
            print("note: input below the length-2 threshold", file=sys.stderr)
    return 0


def cmd_run_forp(args):
    prog = _load_prog(args.file)
    trace = [] if args.trace else None
    bindings = {}
    for item in args.bind or []:
        name, _, value = item.partition("=")
        bindings[name] = int(value)
    if prog.mode == "letter":
        out = forprog.run_program(prog, args.input, trace=trace)
        print(json.dumps({"output": out}) if args.json else out)
    elif prog.mode == "tuple":
        tuples = forprog.run_enumerator(prog, args.input, trace=trace)
        print(_tuples_json(tuples) if args.json else
              " ".join(str(t) for t in tuples))
    else:
        value = forprog.run_boolean(prog, args.input, bindings, trace=trace)
        print(json.dumps({"result": value}) if args.json else ("Yes" if value else "No"))
    if trace is not None:
        for line in trace:
            print(line, file=sys.stderr)
    return 0


def cmd_enumerate(args):
    enum = _load_enum(args.file)
    tuples = pipeline.enumerate_definable(enum, args.input)
    print(_tuples_json(tuples) if args.json else " ".join(str(t) for t in tuples))
    return 0


def cmd_pipeline(args):
    enum = _load_enum(args.file)
    tuples, report = pipeline.compile_enumeration(
        enum, args.input, type_rank=args.rank, emit_trace=args.emit_trace)
    print(_tuples_json(tuples) if args.json else " ".join(str(t) for t in tuples))
    if args.emit_trace:
        for line in report.trace:
            print(line, file=sys.stderr)
    if report.fallback_used:
        print("warning: fallback used (local sort for some type)", file=sys.stderr)
    return 0


def cmd_compose(args):
    first = _load_interp(args.first)
    second = _load_interp(args.second)
    composed = interpretation.compose_fo(first, second)
    text = composed.to_json()
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    return 0


def cmd_forest(args):
    sg, hom = semigroup.load_homomorphism(Path(args.file).read_text())
    forest = semigroup.build_forest(hom, args.input)
    report = semigroup.validate_forest(forest, hom)
    if args.json:
        print(forest.to_json())
    else:
        print(forest.to_text())
        print(f"height {forest.height} (bound {semigroup.height_bound(hom)}); "
              f"{'valid' if report.ok else 'INVALID: ' + str(report)}")
    if args.render:
        from .figures import render_forest
        render_forest(forest, args.render)
        print(f"figure written to {args.render}", file=sys.stderr)
    return 0 if report.ok else 1


def cmd_dominate(args):
    enum = _load_enum(args.file)
    word = args.input
    if args.blocks:
        lens = [int(x) for x in args.blocks.split(",")]
    else:
        lens = [1] * len(word)
    st = ordered_model(word).with_blocks(lens)
    order = TupleOrder(enum.order, enum.arity, ordered_model(word))
    report = domination.find_domination(
        order.less, st, enum.arity, args.rank, split_by_type=not args.no_types)
    if args.json:
        payload = []
        for td in report.by_type:
            payload.append({
                "type": td.type_token,
                "tuples": len(td.tuples),
                "certificates": [{"d": c.d, "p": c.p} for c in td.certificates],
                "gap": td.gap,
            })
        print(json.dumps(payload, sort_keys=True))
    else:
        for td in report.by_type:
            certs = ", ".join(f"d={c.d} p={c.p:+d}" for c in td.certificates) or "GAP"
            print(f"type {td.type_token}: {len(td.tuples)} tuples -> {certs}")
    return 0 if report.ok else 1


def cmd_rational_dominate(args):
    formula = logic.parse_formula(Path(args.file).read_text())
    table = domination.rational_order_table(formula, args.arity)
    d, p = domination.rational_dominating_coordinate(table)
    if args.json:
        print(json.dumps({"entries": len(table.entries), "d": d, "p": p}, sort_keys=True))
    else:
        print(f"order-type table: {len(table.entries)} entries; dominating d={d}, p={p:+d}")
    return 0


def _string_function(path):
    """Load a fixture as (name, alphabet or None, word -> output word)."""
    path = Path(path)
    if path.suffix == ".forp":
        prog = _load_prog(path)
        if prog.mode == "letter":
            return path.stem, None, lambda w: forprog.run_program(prog, w)
        if prog.mode == "tuple":
            return path.stem, None, lambda w: _tuples_json(forprog.run_enumerator(prog, w))
        raise PolyregError(f"{path}: bool-mode programs have no string semantics")
    data = json.loads(path.read_text())
    if "universe" in data:
        interp = interpretation.Interpretation.from_json(data, name=path.stem)
        return path.stem, interp.input_alphabet, \
            lambda w: interpretation.evaluate_interpretation(interp, w).output
    enum = pipeline.DefinableEnumerator.from_json(data, name=path.stem)
    return path.stem, None, lambda w: _tuples_json(pipeline.enumerate_definable(enum, w))


def cmd_check_equiv(args):
    name_a, alpha_a, fn_a = _string_function(args.first)
    name_b, alpha_b, fn_b = _string_function(args.second)
    alphabet = args.alphabet or alpha_a or alpha_b
    if not alphabet:
        print("error: neither fixture declares an alphabet; pass --alphabet", file=sys.stderr)
        return 2
    tested = 0
    for w in _words_upto(alphabet, args.max_len, args.min_len):
        out_a, out_b = fn_a(w), fn_b(w)
        if out_a != out_b:
            print(f"DIFFER on {w!r}: {name_a} -> {out_a!r}, {name_b} -> {out_b!r}")
            return 1
        tested += 1
    print(f"EQUIVALENT (words tested: {tested})")
    return 0


@dataclass
class RunReport:
    command: str
    fixture: str
    inputs: int
    agree: bool
    fallback: bool
    seconds: float
    detail: str = ""

    def row(self):
        return [self.command, self.fixture, self.inputs,
                "yes" if self.agree else "NO",
                "yes" if self.fallback else "no", f"{self.seconds:.2f}", self.detail]


def _check_interp_fixture(stem, interp_path, prog_path, max_len):
    interp = _load_interp(interp_path)
    prog = _load_prog(prog_path)
    start = time.monotonic()
    agree, fallback, detail, count = True, False, "", 0
    for w in _words_upto(interp.input_alphabet, max_len):
        count += 1
        expect = interpretation.evaluate_interpretation(interp, w).output
        got = forprog.run_program(prog, w)
        results = {"program": got}
        if interp.order_kind == "order" and interp.input_model == "order":
            via, rep = pipeline.interpret_via_pipeline(interp, w)
            results["pipeline"] = via.output
            fallback = fallback or rep.fallback_used
        bad = {k: v for k, v in results.items() if v != expect}
        if bad:
            agree = False
            detail = f"{w!r}: expected {expect!r}, got {bad}"
            break
    return RunReport("interp", stem, count, agree, fallback,
                     time.monotonic() - start, detail)


def _check_enum_fixture(stem, enum_path, prog_path, max_len, alphabet):
    enum = _load_enum(enum_path)
    prog = _load_prog(prog_path)
    start = time.monotonic()
    agree, fallback, detail, count = True, False, "", 0
    for w in _words_upto(alphabet, max_len):
        count += 1
        expect = pipeline.enumerate_definable(enum, w)
        got = forprog.run_enumerator(prog, w)
        compiled, rep = pipeline.compile_enumeration(enum, w)
        fallback = fallback or rep.fallback_used
        if got != expect or compiled != expect:
            agree = False
            detail = f"{w!r}: oracle {expect}, program {got}, pipeline {compiled}"
            break
    return RunReport("enum", stem, count, agree, fallback,
                     time.monotonic() - start, detail)


def cmd_corpus_check(args):
    corpus = Path(args.corpus)
    if not corpus.is_dir():
        print(f"error: {corpus} is not a directory", file=sys.stderr)
        return 2
    rows = []

    def guarded(kind, stem, check, *check_args):
        start = time.monotonic()
        try:
            rows.append(check(*check_args))
        except PolyregError as e:
            rows.append(RunReport(kind, stem, 0, False, False,
                                  time.monotonic() - start, f"error: {e}"))

    interp_dir = corpus / "interpretations"
    if interp_dir.is_dir():
        for interp_path in sorted(interp_dir.glob("*.json")):
            prog_path = interp_path.with_suffix(".forp")
            if not prog_path.exists():
                continue
            guarded("interp", interp_path.stem, _check_interp_fixture,
                    interp_path.stem, interp_path, prog_path, args.max_len)
    enum_dir = corpus / "enumerators"
    if enum_dir.is_dir():
        for enum_path in sorted(enum_dir.glob("*.json")):
            prog_path = enum_path.with_suffix(".forp")
            if not prog_path.exists():
                continue
            guarded("enum", enum_path.stem, _check_enum_fixture,
                    enum_path.stem, enum_path, prog_path, args.max_len,
                    args.alphabet or "ab")
    if args.json:
        print(json.dumps([{
            "fixture": r.fixture, "kind": r.command, "inputs": r.inputs,
            "agree": r.agree, "fallback": r.fallback, "seconds": round(r.seconds, 3),
            "detail": r.detail,
        } for r in rows], sort_keys=True))
    else:
        header = ["kind", "fixture", "inputs", "agree", "fallback", "seconds", "detail"]
        widths = [max(len(str(x)) for x in [h] + [r.row()[i] for r in rows])
                  for i, h in enumerate(header)] if rows else [len(h) for h in header]
        print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
        for r in rows:
            print("  ".join(str(x).ljust(w) for x, w in zip(r.row(), widths)))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["kind", "fixture", "inputs", "agree", "fallback",
                             "seconds", "detail"])
            for r in rows:
                writer.writerow(r.row())
        print(f"csv written to {args.csv}", file=sys.stderr)
    if args.figures:
        from .figures import render_corpus_report
        out_dir = Path(args.figures)
        out_dir.mkdir(parents=True, exist_ok=True)
        png = out_dir / "corpus_report.png"
        render_corpus_report(rows, png)
        with open(out_dir / "corpus_report.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["kind", "fixture", "inputs", "agree", "fallback",
                             "seconds", "detail"])
            for r in rows:
                writer.writerow(r.row())
        print(f"figures written to {out_dir}", file=sys.stderr)
    bad = [r for r in rows if not r.agree or r.fallback]
    if not rows:
        print("no paired fixtures found", file=sys.stderr)
    return 1 if bad else 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="polyreg",
        description="Polyregular string functions: interpretations, for-programs, enumerators.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval-interp", help="evaluate an interpretation on a word")
    p.add_argument("file")
    p.add_argument("--input", required=True)
    p.add_argument("--json", action="store_true")
    p.add_argument("--via-pipeline", action="store_true",
                   help="evaluate through the compiled enumeration pipeline")
    p.set_defaults(func=cmd_eval_interp)

    p = sub.add_parser("run-forp", help="run a for-program on a word")
    p.add_argument("file")
    p.add_argument("--input", required=True)
    p.add_argument("--json", action="store_true")
    p.add_argument("--trace", action="store_true", help="dump one line per executed statement")
    p.add_argument("--bind", action="append", metavar="VAR=POS",
                   help="pre-bound position for bool-mode programs")
    p.set_defaults(func=cmd_run_forp)

    p = sub.add_parser("enumerate", help="run a definable enumerator (brute-force oracle)")
    p.add_argument("file")
    p.add_argument("--input", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("pipeline", help="run the compiled enumeration pipeline")
    p.add_argument("file")
    p.add_argument("--input", required=True)
    p.add_argument("--json", action="store_true")
    p.add_argument("--rank", type=int, default=pipeline.DEFAULT_TYPE_RANK)
    p.add_argument("--emit-trace", action="store_true",
                   help="print the recursion skeleton to stderr")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("compose", help="compose two FO interpretations")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("forest", help="build and validate a factorization forest")
    p.add_argument("file", help="homomorphism JSON")
    p.add_argument("--input", required=True)
    p.add_argument("--json", action="store_true")
    p.add_argument("--render", metavar="PNG", help="draw the forest to a file")
    p.set_defaults(func=cmd_forest)

    p = sub.add_parser("dominate", help="per-type domination certificates on a word")
    p.add_argument("file", help="enumerator JSON supplying the order formula")
    p.add_argument("--input", required=True)
    p.add_argument("--blocks", help="comma-separated block lengths (default: singletons)")
    p.add_argument("--rank", type=int, default=pipeline.DEFAULT_TYPE_RANK)
    p.add_argument("--no-types", action="store_true",
                   help="treat all tuples as one bucket (global certificate)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_dominate)

    p = sub.add_parser("rational-dominate",
                       help="dominating coordinate of a quantifier-free rational order")
    p.add_argument("file", help="formula file (s-expression)")
    p.add_argument("--arity", type=int, required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_rational_dominate)

    p = sub.add_parser("check-equiv", help="compare two fixtures on all short words")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--max-len", type=int, required=True)
    p.add_argument("--min-len", type=int, default=0)
    p.add_argument("--alphabet")
    p.set_defaults(func=cmd_check_equiv)

    p = sub.add_parser("corpus-check", help="run all paired fixtures, oracle vs pipeline")
    p.add_argument("corpus", help="corpus directory (interpretations/, enumerators/)")
    p.add_argument("--max-len", type=int, default=5)
    p.add_argument("--alphabet", help="alphabet for enumerator fixtures (default ab)")
    p.add_argument("--json", action="store_true")
    p.add_argument("--csv", metavar="FILE", help="write the report as CSV")
    p.add_argument("--figures", metavar="DIR", help="render a summary figure into DIR")
    p.set_defaults(func=cmd_corpus_check)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PolyregError, OSError, ValueError, KeyError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
