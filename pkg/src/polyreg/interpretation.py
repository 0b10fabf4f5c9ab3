"""String-to-string FO/MSO interpretations.

An interpretation of dimension k maps a word to the word whose positions
are the k-tuples of input positions satisfying the universe formula,
ordered by the order formula and labeled by the unique matching label
formula.  Formulas use the variable convention x1..xk (and y1..yk for the
order formula's second tuple).

The order formula is read under the reflexive convention: a strict formula
is accepted and normalized by disjoining tuple equality.  Inputs of length
below two evaluate normally but the result carries a flag: with fewer than
two positions a higher dimension cannot enlarge the output, so functions
like duplication are only realized from length two upward.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import logic
from .errors import (
    AlphabetMismatchError,
    EvalError,
    FlavorError,
    LabelConflictError,
    OrderValidationError,
    PolyregError,
)
from .logic import And, Eq, Not, parse_formula, to_sexpr
from .structures import ordered_model, successor_model


def xvars(k):
    return tuple(f"x{i}" for i in range(1, k + 1))


def yvars(k):
    return tuple(f"y{i}" for i in range(1, k + 1))


@dataclass
class Interpretation:
    flavor: str
    k: int
    input_alphabet: str
    output_alphabet: str
    universe: logic.Formula
    labels: dict
    order: logic.Formula
    input_model: str = "order"
    order_kind: str = "order"
    name: str = ""

    def __post_init__(self):
        if self.k < 1:
            raise PolyregError("dimension must be at least 1")
        if self.flavor not in ("fo", "mso"):
            raise PolyregError(f"unknown flavor {self.flavor!r}")
        if self.input_model not in ("order", "successor"):
            raise PolyregError(f"unknown input model {self.input_model!r}")
        if self.order_kind not in ("order", "successor"):
            raise PolyregError(f"unknown order kind {self.order_kind!r}")
        allowed = set(xvars(self.k))
        for name, f in [("universe", self.universe), *[(f"label {c!r}", f) for c, f in self.labels.items()]]:
            extra = logic.free_vars(f) - allowed
            if extra:
                raise PolyregError(f"{name} formula has unexpected free variables {sorted(extra)}")
        extra = logic.free_vars(self.order) - (allowed | set(yvars(self.k)))
        if extra:
            raise PolyregError(f"order formula has unexpected free variables {sorted(extra)}")
        if self.flavor == "fo":
            for name, f in [("universe", self.universe), ("order", self.order),
                            *[(f"label {c!r}", f) for c, f in self.labels.items()]]:
                if logic.is_mso(f):
                    raise FlavorError(f"{name} formula uses MSO features in an FO interpretation")
        missing = set(self.output_alphabet) - set(self.labels)
        if missing:
            raise PolyregError(f"no label formula for output letters {sorted(missing)}")

    # -- IO ------------------------------------------------------------------

    @classmethod
    def from_json(cls, data, name=""):
        if isinstance(data, str):
            data = json.loads(data)
        return cls(
            flavor=data.get("flavor", "fo"),
            k=data["k"],
            input_alphabet=data["input_alphabet"],
            output_alphabet=data["output_alphabet"],
            universe=parse_formula(data["universe"]),
            labels={c: parse_formula(src) for c, src in data["labels"].items()},
            order=parse_formula(data["order"]),
            input_model=data.get("input_model", "order"),
            order_kind=data.get("order_kind", "order"),
            name=name or data.get("name", ""),
        )

    def to_json(self):
        data = {
            "flavor": self.flavor,
            "k": self.k,
            "input_alphabet": self.input_alphabet,
            "output_alphabet": self.output_alphabet,
            "universe": to_sexpr(self.universe),
            "labels": {c: to_sexpr(f) for c, f in self.labels.items()},
            "order": to_sexpr(self.order),
        }
        if self.input_model != "order":
            data["input_model"] = self.input_model
        if self.order_kind != "order":
            data["order_kind"] = self.order_kind
        if self.name:
            data["name"] = self.name
        return json.dumps(data, indent=2, sort_keys=True)

    def input_structure(self, word):
        if self.input_model == "successor":
            return successor_model(word)
        return ordered_model(word)


@dataclass
class InterpretationResult:
    output: str
    tuples: list
    letters: list
    below_length_threshold: bool


def universe_tuples(interp, word, structure=None):
    """All k-tuples satisfying the universe formula, in index order."""
    st = structure if structure is not None else interp.input_structure(word)
    n = len(word)
    names = xvars(interp.k)
    check = logic.compiled_evaluator(interp.universe)
    out = []
    env = {}

    def rec(depth):
        if depth == interp.k:
            if check(st, env):
                out.append(tuple(env[v] for v in names))
            return
        for p in range(1, n + 1):
            env[names[depth]] = p
            rec(depth + 1)

    if n:
        rec(0)
    return out


def _label_of(interp, st, tup):
    env = dict(zip(xvars(interp.k), tup))
    found = None
    for letter in sorted(interp.labels):
        if logic.compiled_evaluator(interp.labels[letter])(st, env):
            if found is not None:
                raise LabelConflictError(
                    f"tuple {tup} satisfies label formulas for {found!r} and {letter!r}")
            found = letter
    if found is None:
        raise LabelConflictError(f"tuple {tup} satisfies no label formula")
    return found


class TupleOrder:
    """The interpretation's order formula as a comparison oracle on tuples.

    `leq` applies the reflexive convention; `less` is the strict part.
    Comparisons are memoized per word.
    """

    def __init__(self, order_formula, k, structure):
        self.k = k
        self.st = structure
        self._eval = logic.compiled_evaluator(order_formula)
        self._names = xvars(k) + yvars(k)
        self._cache = {}

    def raw(self, t1, t2):
        key = (t1, t2)
        hit = self._cache.get(key)
        if hit is None:
            env = dict(zip(self._names, t1 + t2))
            hit = self._eval(self.st, env)
            self._cache[key] = hit
        return hit

    def leq(self, t1, t2):
        return t1 == t2 or self.raw(t1, t2)

    def less(self, t1, t2):
        return t1 != t2 and self.raw(t1, t2)


@dataclass
class OrderReport:
    problems: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.problems

    def __str__(self):
        return "valid" if self.ok else "; ".join(self.problems)


def check_linear_order(order, tuples):
    """Validate a TupleOrder as total/antisymmetric/transitive on `tuples`.

    Reports the first violating pair (or triple) per clause.
    """
    report = OrderReport()
    for i, t1 in enumerate(tuples):
        for t2 in tuples[i + 1:]:
            fwd, bwd = order.leq(t1, t2), order.leq(t2, t1)
            if not fwd and not bwd:
                report.problems.append(f"not total: {t1} vs {t2}")
                break
            if fwd and bwd:
                report.problems.append(f"not antisymmetric: {t1} vs {t2}")
                break
        else:
            continue
        break
    less = {}
    for t1 in tuples:
        for t2 in tuples:
            less[(t1, t2)] = order.less(t1, t2)
    done = False
    for t1 in tuples:
        for t2 in tuples:
            if not less[(t1, t2)]:
                continue
            for t3 in tuples:
                if less[(t2, t3)] and not less[(t1, t3)]:
                    report.problems.append(f"not transitive: {t1} < {t2} < {t3}")
                    done = True
                    break
            if done:
                break
        if done:
            break
    return report


def sort_by_order(tuples, order):
    """Sort by dominance count; assumes `order` is linear on `tuples`."""
    counts = {t: 0 for t in tuples}
    for i, t1 in enumerate(tuples):
        for t2 in tuples[i + 1:]:
            if order.less(t1, t2):
                counts[t2] += 1
            else:
                counts[t1] += 1
    return sorted(tuples, key=lambda t: counts[t])


def validate_order(interp, word):
    """Check that the order formula linearly orders the realized universe."""
    st = interp.input_structure(word)
    tuples = universe_tuples(interp, word, st)
    if interp.order_kind == "successor":
        try:
            _chain_sort(interp, st, tuples)
        except OrderValidationError as e:
            return OrderReport([str(e)])
        return OrderReport()
    return check_linear_order(TupleOrder(interp.order, interp.k, st), tuples)


def _chain_sort(interp, st, tuples):
    """Order tuples along the successor relation defined by the order formula."""
    order = TupleOrder(interp.order, interp.k, st)
    if not tuples:
        return []
    succ = {}
    has_pred = set()
    for t1 in tuples:
        for t2 in tuples:
            if t1 != t2 and order.raw(t1, t2):
                if t1 in succ:
                    raise OrderValidationError(f"successor not functional at {t1}")
                if t2 in has_pred:
                    raise OrderValidationError(f"successor not injective at {t2}")
                succ[t1] = t2
                has_pred.add(t2)
    starts = [t for t in tuples if t not in has_pred]
    if len(starts) != 1:
        raise OrderValidationError(f"successor chain has {len(starts)} start points, want 1")
    out = [starts[0]]
    while out[-1] in succ:
        out.append(succ[out[-1]])
    if len(out) != len(tuples):
        raise OrderValidationError("successor relation does not form a single chain")
    return out


def evaluate_interpretation(interp, word):
    """Run the interpretation on a word.

    Returns an InterpretationResult whose `output` is the produced word and
    whose `below_length_threshold` flag marks inputs of length < 2.
    """
    st = interp.input_structure(word)
    tuples = universe_tuples(interp, word, st)
    if interp.order_kind == "successor":
        ordered = _chain_sort(interp, st, tuples)
    else:
        order = TupleOrder(interp.order, interp.k, st)
        report = check_linear_order(order, tuples)
        if not report.ok:
            raise OrderValidationError(f"order formula is not a linear order: {report}")
        ordered = sort_by_order(tuples, order)
    letters = [_label_of(interp, st, t) for t in ordered]
    return InterpretationResult(
        output="".join(letters),
        tuples=ordered,
        letters=letters,
        below_length_threshold=len(word) < 2,
    )


# ---------------------------------------------------------------------------
# Composition by substitution (first-order only)


def compose_fo(first, second):
    """The interpretation computing `second` after `first`.

    Composition by substitution: quantifiers of `second` range over
    k1-tuples relativized to `first`'s universe formula, and atoms over the
    intermediate word are replaced by `first`'s defining formulas.
    """
    if first.flavor != "fo" or second.flavor != "fo":
        raise FlavorError("composition by substitution is unsound for MSO interpretations")
    if first.order_kind != "order" or second.input_model != "order":
        raise PolyregError("composition requires order-model interpretations")
    if second.input_alphabet != first.output_alphabet:
        raise AlphabetMismatchError(
            f"cannot compose: intermediate alphabets {first.output_alphabet!r} vs "
            f"{second.input_alphabet!r}")
    k1, k2 = first.k, second.k
    kk = k1 * k2

    xmap = {f"x{j}": tuple(f"x{(j - 1) * k1 + i}" for i in range(1, k1 + 1))
            for j in range(1, k2 + 1)}
    ymap = {f"y{j}": tuple(f"y{(j - 1) * k1 + i}" for i in range(1, k1 + 1))
            for j in range(1, k2 + 1)}

    def expansion(v):
        if v in xmap:
            return xmap[v]
        if v in ymap:
            return ymap[v]
        return tuple(f"{v}_{i}" for i in range(1, k1 + 1))

    eq_template = logic.componentwise_eq(xvars(k1), yvars(k1))
    relation_map = {("label", c): f for c, f in first.labels.items()}
    relation_map["less"] = And((first.order, Not(eq_template)))

    def lift(formula):
        return logic.substitute(
            logic.rename_bound(formula), relation_map, k1,
            var_expansion=expansion, universe_guard=first.universe)

    block_guards = []
    for j in range(1, k2 + 1):
        guard = logic.rename_vars(first.universe, dict(zip(xvars(k1), xmap[f"x{j}"])))
        block_guards.append(guard)
    universe = And((*block_guards, lift(second.universe)))
    labels = {c: lift(f) for c, f in second.labels.items()}
    order = lift(second.order)
    name = f"{second.name or 'g'}∘{first.name or 'f'}"
    return Interpretation(
        flavor="fo", k=kk,
        input_alphabet=first.input_alphabet,
        output_alphabet=second.output_alphabet,
        universe=universe, labels=labels, order=order, name=name,
    )
