"""Unambiguous rational transducers and pipeline chaining.

A rational function here is given by a nondeterministic automaton whose
transitions carry an input letter and an output string, unambiguous in the
sense that every (nonempty) input in its domain admits exactly one
accepting run.  Evaluation counts runs by dynamic programming over
(position, state) and reconstructs the unique accepting run; zero runs is
a domain error, two or more is an ambiguity error (the transducer breaks
its contract on that input).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

from .errors import (
    AlphabetMismatchError,
    AmbiguousRunError,
    NoAcceptingRunError,
    PolyregError,
)


@dataclass
class RationalTransducer:
    states: list
    initial: list
    final: list
    transitions: list  # (src, letter, output string, dst)
    letter_to_letter: bool = False
    name: str = ""

    def __post_init__(self):
        known = set(self.states)
        for s in list(self.initial) + list(self.final):
            if s not in known:
                raise PolyregError(f"unknown state {s!r}")
        for src, letter, out, dst in self.transitions:
            if src not in known or dst not in known:
                raise PolyregError(f"transition uses unknown state: {(src, letter, out, dst)}")
            if len(letter) != 1:
                raise PolyregError(f"transition letter must be a single character, got {letter!r}")
            if self.letter_to_letter and len(out) != 1:
                raise PolyregError(
                    f"letter-to-letter transducer has output {out!r} of length {len(out)}")
        self._by_src = {}
        for t in self.transitions:
            self._by_src.setdefault((t[0], t[1]), []).append(t)

    @property
    def input_alphabet(self):
        return "".join(sorted({t[1] for t in self.transitions}))

    @classmethod
    def from_json(cls, data, name=""):
        if isinstance(data, str):
            data = json.loads(data)
        return cls(
            states=list(data["states"]),
            initial=list(data["initial"]),
            final=list(data["final"]),
            transitions=[tuple(t) for t in data["transitions"]],
            letter_to_letter=bool(data.get("letter_to_letter", False)),
            name=name or data.get("name", ""),
        )

    def to_json(self):
        return json.dumps({
            "states": self.states,
            "initial": self.initial,
            "final": self.final,
            "transitions": [list(t) for t in self.transitions],
            "letter_to_letter": self.letter_to_letter,
        }, sort_keys=True)


def count_runs(t, word):
    """Number of accepting runs on `word`, by forward dynamic programming."""
    fwd = {q: 1 for q in t.initial}
    for ch in word:
        nxt = {}
        for q, ways in fwd.items():
            for _, _, _, dst in t._by_src.get((q, ch), ()):
                nxt[dst] = nxt.get(dst, 0) + ways
        fwd = nxt
    return sum(ways for q, ways in fwd.items() if q in set(t.final))


def count_runs_naive(t, word):
    """Run counting by explicit path enumeration (test oracle)."""
    final = set(t.final)
    total = 0
    stack = [(q, 0) for q in t.initial]
    while stack:
        q, i = stack.pop()
        if i == len(word):
            if q in final:
                total += 1
            continue
        for _, _, _, dst in t._by_src.get((q, word[i]), ()):
            stack.append((dst, i + 1))
    return total


def eval_rational(t, word):
    """Output along the unique accepting run on `word`.

    Raises NoAcceptingRunError (input outside the domain) or
    AmbiguousRunError (the transducer violates unambiguity on this input).
    """
    n = len(word)
    # bwd[i][q]: number of runs from state q over word[i:] into a final state
    bwd = [dict() for _ in range(n + 1)]
    bwd[n] = {q: 1 for q in t.final}
    for i in range(n - 1, -1, -1):
        acc = {}
        for (src, ch), outs in t._by_src.items():
            if ch != word[i]:
                continue
            total = 0
            for _, _, _, dst in outs:
                total += bwd[i + 1].get(dst, 0)
            if total:
                acc[src] = acc.get(src, 0) + total
        bwd[i] = acc
    total = sum(bwd[0].get(q, 0) for q in t.initial)
    if total == 0:
        raise NoAcceptingRunError(f"{t.name or 'transducer'}: no accepting run on {word!r}")
    if total > 1:
        raise AmbiguousRunError(f"{t.name or 'transducer'}: {total} accepting runs on {word!r}")
    state = next(q for q in t.initial if bwd[0].get(q, 0))
    pieces = []
    for i, ch in enumerate(word):
        for _, _, out, dst in t._by_src.get((state, ch), ()):
            if bwd[i + 1].get(dst, 0):
                pieces.append(out)
                state = dst
                break
        else:
            raise NoAcceptingRunError(f"stuck at position {i + 1}")
    return "".join(pieces)


def check_unambiguous(t, max_len):
    """Exactly one accepting run for every nonempty word up to max_len?

    A desk-scale exhaustive check over the transducer's input alphabet,
    not a decision procedure.
    """
    alphabet = t.input_alphabet
    for length in range(1, max_len + 1):
        for combo in itertools.product(alphabet, repeat=length):
            if count_runs(t, "".join(combo)) != 1:
                return False
    return True


# ---------------------------------------------------------------------------
# Chaining


@dataclass
class ChainResult:
    output: str
    stage_outputs: list
    below_length_threshold: bool


@dataclass
class Chain:
    """Left-to-right composition of evaluable string functions.

    Stages are anything with an `apply(word) -> str`-style entry point:
    RationalTransducer, Interpretation, letter-mode ForProgram, or a plain
    callable.  Adjacent alphabets are checked when both sides declare them.
    """

    stages: list
    alphabet: str = ""

    def __post_init__(self):
        prev_out, prev_name = None, None
        for stage in self.stages:
            inp = _input_alphabet(stage)
            if prev_out is not None and inp is not None and set(prev_out) - set(inp):
                raise AlphabetMismatchError(
                    f"stage {_name(stage)!r} expects alphabet {inp!r} but "
                    f"{prev_name!r} outputs over {prev_out!r}")
            out = _output_alphabet(stage)
            if out is not None:
                prev_out, prev_name = out, _name(stage)

    def apply(self, word):
        return self.run(word).output

    def run(self, word):
        outputs = []
        flagged = False
        current = word
        for stage in self.stages:
            current, flag = _apply_stage(stage, current)
            flagged = flagged or flag
            outputs.append(current)
        return ChainResult(current, outputs, flagged)


def chain(stages, alphabet=""):
    """Compose stages; the empty chain is the identity on its alphabet."""
    return Chain(list(stages), alphabet)


def _name(stage):
    return getattr(stage, "name", "") or type(stage).__name__


def _input_alphabet(stage):
    if isinstance(stage, RationalTransducer):
        return stage.input_alphabet
    return getattr(stage, "input_alphabet", None)


def _output_alphabet(stage):
    if isinstance(stage, RationalTransducer):
        return "".join(sorted({ch for t in stage.transitions for ch in t[2]}))
    return getattr(stage, "output_alphabet", None)


def _apply_stage(stage, word):
    from . import forprog, interpretation

    if isinstance(stage, RationalTransducer):
        return eval_rational(stage, word), False
    if isinstance(stage, Chain):
        result = stage.run(word)
        return result.output, result.below_length_threshold
    if isinstance(stage, interpretation.Interpretation):
        result = interpretation.evaluate_interpretation(stage, word)
        return result.output, result.below_length_threshold
    if isinstance(stage, forprog.ForProgram):
        return forprog.run_program(stage, word), False
    if callable(stage):
        return stage(word), False
    raise PolyregError(f"cannot evaluate stage {stage!r}")
