"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; every tolerance and time bound is pinned here.
"""

import itertools
import json
import time
from fractions import Fraction

import pytest

from polyreg import (
    DefinableEnumerator,
    Interpretation,
    build_forest,
    check_first_order,
    compile_enumeration,
    compile_formula_to_program,
    compose_fo,
    enumerate_definable,
    eval_formula,
    evaluate_interpretation,
    height_bound,
    induced_enumerator,
    interpret_via_pipeline,
    parse_formula,
    parse_program,
    run_boolean,
    run_enumerator,
    run_program,
    validate_forest,
)
from polyreg.domination import (
    lexicographic_orders,
    product_unary_type,
    rational_dominating_coordinate,
    rational_order_table,
    verify_rational_domination,
)
from polyreg.fixtures import fixture_path, paired_enumerators, paired_interpretations
from polyreg.semigroup import load_homomorphism
from polyreg.structures import ProductStructure, ordered_model

from conftest import words_upto

GOLDEN_OUTPUT = "ababbabbba"
GOLDEN_TUPLES = [(1, 1), (2, 2), (2, 1), (3, 3), (3, 2), (3, 1),
                 (4, 4), (4, 3), (4, 2), (4, 1)]


def report(number, ok, description):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {number}: {status} - {description}")
    assert ok, f"criterion {number} failed: {description}"


def load_interp(name):
    return Interpretation.from_json(
        fixture_path("interpretations", f"{name}.json").read_text(), name=name)


def load_prog(kind, name):
    return parse_program(fixture_path(kind, f"{name}.forp").read_text(), name=name)


def test_criterion_1_golden_example():
    start = time.monotonic()
    interp_out = evaluate_interpretation(load_interp("revprefix"), "abbb").output
    prog_out = run_program(load_prog("interpretations", "revprefix"), "abbb")
    elapsed = time.monotonic() - start
    ok = interp_out == GOLDEN_OUTPUT and prog_out == GOLDEN_OUTPUT and elapsed < 1.0
    report(1, ok, f"reversed-prefixes on 'abbb' -> {interp_out!r} / {prog_out!r} "
                  f"in {elapsed:.3f}s (< 1s)")


def test_criterion_2_golden_enumerator():
    start = time.monotonic()
    enum = DefinableEnumerator.from_json(
        fixture_path("enumerators", "revprefix_pairs.json").read_text())
    prog = load_prog("enumerators", "revprefix_pairs")
    oracle = enumerate_definable(enum, "abbb")
    program = run_enumerator(prog, "abbb")
    compiled, rep = compile_enumeration(enum, "abbb")
    elapsed = time.monotonic() - start

    def as_json(tuples):
        return json.dumps([list(t) for t in tuples], separators=(",", ":"))

    jsons = {as_json(oracle), as_json(program), as_json(compiled)}
    ok = (oracle == program == compiled == GOLDEN_TUPLES
          and len(jsons) == 1 and not rep.fallback_used and elapsed < 1.0)
    report(2, ok, f"oracle/program/pipeline all yield the 10-tuple list, "
                  f"byte-identical JSON, in {elapsed:.3f}s (< 1s)")


def test_criterion_3_interpretation_program_pairs():
    start = time.monotonic()
    pairs = paired_interpretations()
    assert len(pairs) >= 5
    mismatches = []
    tested = 0
    for interp_path, prog_path in pairs:
        interp = Interpretation.from_json(interp_path.read_text(), name=interp_path.stem)
        prog = parse_program(prog_path.read_text())
        for w in words_upto(interp.input_alphabet, 6, min_len=2):
            tested += 1
            expect = evaluate_interpretation(interp, w).output
            got = run_program(prog, w)
            if expect != got:
                mismatches.append((interp_path.stem, w, expect, got))
    elapsed = time.monotonic() - start
    ok = not mismatches and elapsed < 120.0
    report(3, ok, f"{len(pairs)} (interpretation, for-program) pairs agree on "
                  f"{tested} words of length 2-6 in {elapsed:.1f}s (< 2min); "
                  f"mismatches: {mismatches[:3]}")


def test_criterion_4_composition_soundness():
    names = ["identity", "reverse", "revprefix", "squaring", "swapab", "afterfirsta"]
    interps = {n: load_interp(n) for n in names}
    pairs = [("revprefix", "reverse"), ("reverse", "revprefix"),
             ("identity", "revprefix"), ("squaring", "reverse"),
             ("swapab", "squaring"), ("afterfirsta", "swapab"),
             ("reverse", "reverse")]
    mismatches = []
    for name_f, name_g in pairs:
        f, g = interps[name_f], interps[name_g]
        composed = compose_fo(f, g)
        for w in words_upto("ab", 5, min_len=2):
            mid = evaluate_interpretation(f, w).output
            if len(mid) < 2:
                continue
            expect = evaluate_interpretation(g, mid).output
            got = evaluate_interpretation(composed, w).output
            if got != expect:
                mismatches.append((name_f, name_g, w, expect, got))
    report(4, not mismatches,
           f"compose_fo sound for {len(pairs)} pairs on words of length 2-5; "
           f"mismatches: {mismatches[:3]}")


COMPILER_CORPUS = [
    "(a x)",
    "(b x)",
    "(not (a x))",
    "(and (a x) (b y))",
    "(or (< x y) (= x y))",
    "(exists z (and (< x z) (< z y) (a z)))",
    "(exists z (a z))",
    "(forall z (or (a z) (b z)))",
    "(forall z (or (not (a z)) (exists w (and (< z w) (b w)))))",
    "(exists z (forall w (or (not (< z w)) (b w))))",
    "(and (exists z (a z)) (forall w (or (a w) (b w))))",
    "(forall z (exists w (or (< z w) (< w z) (= z w))))",
]


def test_criterion_5_formula_compiler():
    from polyreg.logic import free_vars

    start = time.monotonic()
    assert len(COMPILER_CORPUS) >= 10
    mismatches = []
    all_fo = True
    for src in COMPILER_CORPUS:
        f = parse_formula(src)
        order = sorted(free_vars(f))
        prog = compile_formula_to_program(f, order)
        all_fo = all_fo and check_first_order(prog)
        for w in words_upto("ab", 6, min_len=1):
            st = ordered_model(w)
            for combo in itertools.product(range(1, len(w) + 1), repeat=len(order)):
                env = dict(zip(order, combo))
                if run_boolean(prog, w, env) != eval_formula(f, st, env):
                    mismatches.append((src, w, env))
    elapsed = time.monotonic() - start
    ok = not mismatches and all_fo
    report(5, ok, f"{len(COMPILER_CORPUS)} compiled formulas agree with evaluation on "
                  f"all words up to length 6 and every assignment, and stay "
                  f"first-order ({elapsed:.1f}s); mismatches: {mismatches[:3]}")


def test_criterion_6_factorization_forests():
    start = time.monotonic()
    homs = [load_homomorphism(fixture_path("semigroups", n).read_text())[1]
            for n in ("trivial.json", "seenb.json", "lastletter.json")]
    violations = []
    count = 0
    for hom in homs:
        bound = height_bound(hom)
        for w in words_upto("ab", 8, min_len=1):
            count += 1
            forest = build_forest(hom, w)
            rep = validate_forest(forest, hom)
            if not rep.ok:
                violations.append((w, str(rep)))
            if forest.height > bound:
                violations.append((w, f"height {forest.height} > bound {bound}"))
    elapsed = time.monotonic() - start
    ok = not violations and elapsed < 60.0
    report(6, ok, f"{count} forests over 3 homomorphisms valid with bounded height "
                  f"in {elapsed:.1f}s (< 1min); violations: {violations[:3]}")


def test_criterion_7_threshold_vs_ef():
    from test_structures import signature_ef_agreement

    start = time.monotonic()
    signature_ef_agreement(max_n=12, max_rank=3, arities=(0, 1, 2))
    elapsed = time.monotonic() - start
    report(7, True, f"threshold-signature equality matches EF equivalence, "
                    f"exhaustive for n<=12, arity<=2, rank<=3 ({elapsed:.1f}s)")


RATIONAL_FIXTURES = [
    ("k1_less", 1), ("k1_greater", 1),
    ("lex2_asc", 2), ("example1_order", 2), ("lex3_mixed", 3),
]


def test_criterion_8_rational_domination():
    grid = [Fraction(i, 8) for i in range(1, 9)]
    failures = []
    k1_results = {}
    for name, k in RATIONAL_FIXTURES:
        formula = parse_formula(fixture_path("formulas", f"{name}.fml").read_text())
        d, p = rational_dominating_coordinate(rational_order_table(formula, k))
        if k == 1:
            k1_results[name] = (d, p)
        witness = verify_rational_domination(formula, k, d, p, grid)
        if witness is not None:
            failures.append((name, witness))
    ok = (not failures
          and k1_results.get("k1_less") == (1, 1)
          and k1_results.get("k1_greater") == (1, -1))
    report(8, ok, f"(d,p) implications hold on the 8-point grid for "
                  f"{len(RATIONAL_FIXTURES)} fixtures; k=1 gives (1,+1)/(1,-1); "
                  f"failures: {failures[:3]}")


def test_criterion_9_pipeline_equals_oracle():
    start = time.monotonic()
    mismatches = []
    fallbacks = []
    words_checked = 0
    for enum_path, _ in paired_enumerators():
        enum = DefinableEnumerator.from_json(enum_path.read_text(), name=enum_path.stem)
        for w in words_upto("ab", 7):
            words_checked += 1
            expect = enumerate_definable(enum, w)
            got, rep = compile_enumeration(enum, w)
            if got != expect:
                mismatches.append((enum.name, w))
            if rep.fallback_used:
                fallbacks.append((enum.name, w))
    elapsed = time.monotonic() - start
    ok = not mismatches and not fallbacks and elapsed < 300.0
    report(9, ok, f"pipeline == oracle exactly on {words_checked} runs over the "
                  f"FO corpus up to length 7, fallback never used, "
                  f"in {elapsed:.1f}s (< 5min); mismatches: {mismatches[:3]}, "
                  f"fallbacks: {fallbacks[:3]}")


def _min_last(x, y):
    mx, my = x[0][0] == 1, y[0][0] == 1
    if mx != my:
        return my
    return x < y


def _second_min_last(x, y):
    mx, my = x[-1][0] == 1, y[-1][0] == 1
    if mx != my:
        return my
    return x < y


def test_criterion_10_lexicographic_restriction():
    # definable order fixtures of rank <= 2: the lexicographic orders are
    # quantifier-free; the min-last variants need one quantifier for "minimum"
    configs = [[(n, 1)] for n in range(2, 9)] + \
              [[(n1, 1), (n2, 1)] for n1 in range(2, 9) for n2 in range(2, 9)]
    failures = []
    for factors in configs:
        prod = ProductStructure(factors)
        elements = prod.ef_universe()
        lex = lexicographic_orders(len(factors))
        fixtures = [("lex_" + str(i), less) for i, (_, _, less) in enumerate(lex)]
        fixtures.append(("min_last", _min_last))
        fixtures.append(("second_min_last", _second_min_last))
        buckets = {}
        for x in elements:
            buckets.setdefault(product_unary_type(prod.factors, x, 2), []).append(x)
        for name, less in fixtures:
            for sig, members in buckets.items():
                matched = any(
                    all(less(x, y) == lex_less(x, y)
                        for x in members for y in members if x != y)
                    for _, _, lex_less in lex)
                if not matched:
                    failures.append((factors, name, sig))
    report(10, not failures,
           f"rank<=2 definable orders on {len(configs)} products restrict to "
           f"lexicographic orders on every unary type; failures: {failures[:3]}")
