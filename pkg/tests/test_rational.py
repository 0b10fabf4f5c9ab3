import pytest

from polyreg import (
    Interpretation,
    RationalTransducer,
    chain,
    check_unambiguous,
    eval_rational,
    parse_program,
)
from polyreg.errors import (
    AlphabetMismatchError,
    AmbiguousRunError,
    NoAcceptingRunError,
    PolyregError,
)
from polyreg.fixtures import fixture_path
from polyreg.rational import count_runs, count_runs_naive

from conftest import words_upto


def load(name):
    return RationalTransducer.from_json(fixture_path("transducers", f"{name}.json").read_text())


def test_identity_transducer():
    t = load("identity")
    assert eval_rational(t, "ab") == "ab"
    assert check_unambiguous(t, 6)


def test_doubling_transducer():
    t = load("doubling")
    assert eval_rational(t, "ab") == "aabb"
    assert eval_rational(t, "") == ""


def test_letter_to_letter_flag_is_validated():
    with pytest.raises(PolyregError):
        RationalTransducer(["q"], ["q"], ["q"], [("q", "a", "aa", "q")],
                           letter_to_letter=True)


def test_last_letter_marker():
    t = load("lastmark")
    assert eval_rational(t, "aba") == "abA"
    assert eval_rational(t, "b") == "B"
    assert check_unambiguous(t, 8)


def test_domain_and_ambiguity_errors_are_distinct():
    mark = load("lastmark")
    with pytest.raises(NoAcceptingRunError):
        eval_rational(mark, "")
    two = load("twocopies")
    assert not check_unambiguous(two, 1)  # two runs already at length one
    with pytest.raises(AmbiguousRunError):
        eval_rational(two, "a")


def test_run_counting_dp_matches_naive_enumeration():
    for name in ("identity", "doubling", "lastmark", "twocopies"):
        t = load(name)
        for w in words_upto(t.input_alphabet, 6):
            assert count_runs(t, w) == count_runs_naive(t, w), (name, w)


def test_json_round_trip():
    t = load("lastmark")
    again = RationalTransducer.from_json(t.to_json())
    assert again.transitions == t.transitions
    assert again.letter_to_letter == t.letter_to_letter


# ---------------------------------------------------------------------------
# chaining


def test_chain_single_stage_is_that_stage():
    t = load("identity")
    assert chain([t]).apply("ab") == "ab"


def test_empty_chain_is_identity():
    assert chain([], alphabet="ab").apply("ba") == "ba"


def test_chain_rational_then_interpretation():
    doubling = load("doubling")
    reverse = Interpretation.from_json(
        fixture_path("interpretations", "reverse.json").read_text())
    pipelineed = chain([doubling, reverse])
    # stage-by-stage oracle
    assert pipelineed.apply("ab") == "bbaa"
    for w in words_upto("ab", 4):
        mid = eval_rational(doubling, w)
        expect = mid[::-1]
        assert pipelineed.apply(w) == expect


def test_chain_with_for_program_stage():
    prog = parse_program("for x down { output_at x }")
    assert chain([load("doubling"), prog]).apply("ab") == "bbaa"


def test_chain_associativity():
    doubling = load("doubling")
    ident = load("identity")
    prog = parse_program("for x down { output_at x }")
    nested = chain([doubling, chain([ident, prog])])
    flat = chain([doubling, ident, prog])
    for w in words_upto("ab", 4):
        assert nested.apply(w) == flat.apply(w)


def test_chain_alphabet_mismatch():
    reverse = Interpretation.from_json(
        fixture_path("interpretations", "reverse.json").read_text())
    marked = load("lastmark")  # outputs A/B which reverse does not accept
    with pytest.raises(AlphabetMismatchError):
        chain([marked, reverse])


def test_chain_propagates_length_flag():
    reverse = Interpretation.from_json(
        fixture_path("interpretations", "reverse.json").read_text())
    result = chain([reverse]).run("a")
    assert result.below_length_threshold
    assert chain([reverse]).run("ab").below_length_threshold is False
