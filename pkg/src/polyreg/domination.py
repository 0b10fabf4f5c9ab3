"""Dominating-coordinate discovery.

Two solvers live here:

* the exact order-type solver for quantifier-free linear orders on k-tuples
  of rationals: comparison of two strictly increasing tuples depends only
  on how their values interleave, so the (finite) table of merge
  order-types is computed, validated as a linear order, and the dominating
  coordinate is extracted through the pairwise tournament;

* a sound instance-level search on word structures with blocks: for each
  realized rank-r type, every candidate (coordinate, polarity) is verified
  exhaustively against all pairs of tuples of that type, so returned
  certificates always hold on their scope, and types with no certificate
  are reported as gaps rather than papered over.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

from . import logic, structures
from .errors import (
    DominationInconsistency,
    OrderValidationError,
    PolyregError,
)


# ---------------------------------------------------------------------------
# Order-type tables for quantifier-free orders on rational tuples


def _check_qf_order_formula(f):
    if isinstance(f, (logic.Less, logic.Eq)):
        return
    if isinstance(f, logic.Not):
        _check_qf_order_formula(f.body)
        return
    if isinstance(f, (logic.And, logic.Or)):
        for p in f.parts:
            _check_qf_order_formula(p)
        return
    raise PolyregError(
        f"order formula must be quantifier-free over < and =, found {type(f).__name__}")


def merge_order_types(lengths):
    """All ways strictly increasing tuples of the given lengths interleave.

    Yields one level vector per tuple: coordinates sharing a level are
    equal, and levels increase strictly within each tuple.
    """
    m = len(lengths)

    def rec(done, level):
        if all(done[i] == lengths[i] for i in range(m)):
            yield tuple(tuple(levels) for levels in acc)
            return
        active = [i for i in range(m) if done[i] < lengths[i]]
        for r in range(1, len(active) + 1):
            for subset in itertools.combinations(active, r):
                for i in subset:
                    acc[i].append(level)
                    done[i] += 1
                yield from rec(done, level + 1)
                for i in subset:
                    acc[i].pop()
                    done[i] -= 1

    acc = [[] for _ in range(m)]
    yield from rec([0] * m, 0)


@dataclass
class OrderTypeTable:
    """Comparison outcomes per merge order-type of two strictly increasing tuples."""

    k: int
    entries: dict
    formula: logic.Formula

    def outcome(self, t1, t2):
        """Outcome for two concrete strictly increasing tuples."""
        values = sorted(set(t1) | set(t2))
        level = {v: i for i, v in enumerate(values)}
        key = (tuple(level[v] for v in t1), tuple(level[v] for v in t2))
        return self.entries[key]


def _eval_on_levels(formula, k, levels1, levels2):
    size = max(max(levels1), max(levels2)) + 1
    st = structures.linear_order(size)
    env = {}
    for i in range(k):
        env[f"x{i + 1}"] = levels1[i] + 1
        env[f"y{i + 1}"] = levels2[i] + 1
    return logic.compiled_evaluator(formula)(st, env)


def rational_order_table(formula, k):
    """Tabulate a quantifier-free order formula over merge order-types.

    Validates totality, antisymmetry and transitivity at the order-type
    level (transitivity via triples of tuples, projected back to pairwise
    entries); raises OrderValidationError naming the violating types.
    """
    _check_qf_order_formula(formula)
    allowed = {f"x{i}" for i in range(1, k + 1)} | {f"y{i}" for i in range(1, k + 1)}
    extra = logic.free_vars(formula) - allowed
    if extra:
        raise PolyregError(f"order formula has unexpected free variables {sorted(extra)}")
    entries = {}
    for levels1, levels2 in merge_order_types((k, k)):
        fwd = _eval_on_levels(formula, k, levels1, levels2)
        bwd = _eval_on_levels(formula, k, levels2, levels1)
        if levels1 == levels2:
            if fwd:
                raise OrderValidationError(
                    f"not irreflexive on order-type {levels1}")
            outcome = "="
        else:
            if fwd and bwd:
                raise OrderValidationError(
                    f"not antisymmetric on order-type {(levels1, levels2)}")
            if not fwd and not bwd:
                raise OrderValidationError(
                    f"not total on order-type {(levels1, levels2)}")
            outcome = "<" if fwd else ">"
        entries[(levels1, levels2)] = outcome
    table = OrderTypeTable(k, entries, formula)

    def project(la, lb):
        values = sorted(set(la) | set(lb))
        level = {v: i for i, v in enumerate(values)}
        return (tuple(level[v] for v in la), tuple(level[v] for v in lb))

    for levels in merge_order_types((k, k, k)):
        a, b, c = levels
        ab = entries[project(a, b)]
        bc = entries[project(b, c)]
        ac = entries[project(a, c)]
        if ab == "<" and bc == "<" and ac != "<":
            raise OrderValidationError(
                f"not transitive on order-type triple {levels}")
    return table


def rational_dominating_coordinate(table):
    """Dominating coordinate and polarity for a validated order-type table.

    Returns (d, p) with d 1-based.  For every pair of coordinates the
    restriction to tuples agreeing elsewhere is checked against the four
    candidate dominations; the winners form a tournament whose maximum is
    the dominating coordinate.  A non-transitive tournament would
    contradict the quantifier-free order axioms and raises
    DominationInconsistency for diagnosis.
    """
    k = table.k
    if k == 1:
        return (1, 1) if table.entries[((0,), (1,))] == "<" else (1, -1)

    def local_winner(i, j):
        candidates = []
        for c, p in itertools.product((i, j), (1, -1)):
            ok = True
            for (l1, l2), outcome in table.entries.items():
                if outcome == "=":
                    continue
                if any(l1[m] != l2[m] for m in range(k) if m not in (i, j)):
                    continue
                if p == 1 and l1[c] < l2[c] and outcome != "<":
                    ok = False
                    break
                if p == -1 and l1[c] > l2[c] and outcome != "<":
                    ok = False
                    break
            if ok:
                candidates.append((c, p))
        if len(candidates) != 1:
            raise DominationInconsistency(
                f"coordinates {(i + 1, j + 1)} admit {len(candidates)} local dominations")
        return candidates[0]

    wins = {}
    polarity = {}
    for i, j in itertools.combinations(range(k), 2):
        c, p = local_winner(i, j)
        loser = j if c == i else i
        wins.setdefault(c, set()).add(loser)
        polarity[(loser, c)] = p
    for i, j, m in itertools.permutations(range(k), 3):
        if j in wins.get(i, ()) and m in wins.get(j, ()) and m not in wins.get(i, ()):
            raise DominationInconsistency(
                f"tournament not transitive at {(i + 1, j + 1, m + 1)}")
    d = max(wins, key=lambda c: len(wins[c]))
    if len(wins[d]) != k - 1:
        raise DominationInconsistency("tournament has no maximum coordinate")
    ps = {polarity[(i, d)] for i in wins[d]}
    if len(ps) != 1:
        raise DominationInconsistency(f"polarities into coordinate {d + 1} disagree")
    return d + 1, ps.pop()


def verify_rational_domination(formula, k, d, p, grid):
    """Check the (d, p) implication on every strictly increasing pair from `grid`."""
    evaluator = logic.compiled_evaluator(formula)
    points = sorted(grid)
    index = {v: i + 1 for i, v in enumerate(points)}
    st = structures.linear_order(len(points))
    tuples = [t for t in itertools.combinations(points, k)]
    for t1 in tuples:
        for t2 in tuples:
            if t1 == t2:
                continue
            if p == 1 and not t1[d - 1] < t2[d - 1]:
                continue
            if p == -1 and not t1[d - 1] > t2[d - 1]:
                continue
            env = {}
            for i in range(k):
                env[f"x{i + 1}"] = index[t1[i]]
                env[f"y{i + 1}"] = index[t2[i]]
            if not evaluator(st, env):
                return (t1, t2)
    return None


# ---------------------------------------------------------------------------
# Instance-level domination on word structures with blocks


@dataclass(frozen=True)
class DominationCertificate:
    """(type, coordinate, polarity) with the implication it certifies.

    The implication: whenever two tuples of this type have their d-th
    coordinates in blocks ordered by polarity p, the first tuple precedes
    the second.  `e` is the inner coordinate for product structures and
    None for words.  `scope` describes the instance it was verified on.
    """

    type_token: int
    d: int
    p: int
    scope: str
    e: int = None

    def to_json(self):
        rep = None
        tid = structures.TypeId(self.type_token, 0)
        if tid.representative() is not None:
            rep = list(tid.representative()[1])
        return json.dumps({
            "type": self.type_token,
            "representative": rep,
            "d": self.d,
            "e": self.e,
            "p": self.p,
            "scope": self.scope,
        }, sort_keys=True)


@dataclass
class TypeDomination:
    type_token: int
    tuples: list
    certificates: list

    @property
    def gap(self):
        return not self.certificates


@dataclass
class DominationReport:
    arity: int
    rank: int
    by_type: list = field(default_factory=list)

    @property
    def gaps(self):
        return [t for t in self.by_type if t.gap]

    @property
    def ok(self):
        return not self.gaps


def certificate_holds(less, block_of, tuples, d, p):
    """Exhaustive check of the (d, p) implication over all pairs in `tuples`."""
    for t1 in tuples:
        b1 = block_of(t1[d - 1])
        for t2 in tuples:
            if t1 is t2:
                continue
            diff = block_of(t2[d - 1]) - b1
            if (p == 1 and diff > 0) or (p == -1 and diff < 0):
                if not less(t1, t2):
                    return False
    return True


def find_domination(less, structure, arity, rank, tuples=None, split_by_type=True,
                    validate=True):
    """Per-type domination certificates on a blocked word instance.

    `less` is a strict comparison oracle on `arity`-tuples of positions.
    For each rank-`rank` type realized by the tuples (all tuples of the
    structure by default), every (d, p) whose implication holds for every
    pair of that type is certified; types with no valid (d, p) are
    reported as gaps.  With `split_by_type=False` all tuples are treated
    as one bucket, which shows whether a single global certificate exists.
    """
    if not structure.has_blocks:
        raise PolyregError("find_domination needs a block decomposition")
    n = structure.size
    if tuples is None:
        tuples = [t for t in itertools.product(range(1, n + 1), repeat=arity)]
    tuples = list(tuples)
    if validate:
        _validate_linear(less, tuples)
    scope = f"word={structure.word!r} blocks={structure.block_lens}"
    report = DominationReport(arity=arity, rank=rank)
    if split_by_type:
        buckets = {}
        for t in tuples:
            tid = structures.rank_type_id(structure, t, rank)
            buckets.setdefault(tid.token, []).append(t)
    else:
        buckets = {0: tuples}
    for token in sorted(buckets):
        members = buckets[token]
        certs = []
        for d in range(1, arity + 1):
            for p in (1, -1):
                if certificate_holds(less, structure.block_of, members, d, p):
                    certs.append(DominationCertificate(token, d, p, scope))
        report.by_type.append(TypeDomination(token, members, certs))
    return report


def _validate_linear(less, tuples):
    for i, t1 in enumerate(tuples):
        if less(t1, t1):
            raise OrderValidationError(f"order not irreflexive at {t1}")
        for t2 in tuples[i + 1:]:
            fwd, bwd = less(t1, t2), less(t2, t1)
            if fwd and bwd:
                raise OrderValidationError(f"order not antisymmetric at {t1}, {t2}")
            if not fwd and not bwd:
                raise OrderValidationError(f"order not total at {t1}, {t2}")
    for t1 in tuples:
        for t2 in tuples:
            if t1 == t2 or not less(t1, t2):
                continue
            for t3 in tuples:
                if t2 != t3 and less(t2, t3) and not less(t1, t3) and t1 != t3:
                    raise OrderValidationError(
                        f"order not transitive at {t1} < {t2} < {t3}")


# ---------------------------------------------------------------------------
# Products of linear orders: lexicographic orders and unary types


def lexicographic_orders(count):
    """All count! * 2**count lexicographic comparison functions.

    Each order is (priority, polarities, less) where `less` compares
    elements of a ProductStructure whose factors all have power 1.
    """
    out = []
    for priority in itertools.permutations(range(count)):
        for signs in itertools.product((1, -1), repeat=count):
            def less(x, y, priority=priority, signs=signs):
                for i in priority:
                    a, b = x[i][0], y[i][0]
                    if a != b:
                        return (a < b) if signs[i] == 1 else (a > b)
                return False
            out.append((priority, signs, less))
    return out


def product_unary_type(factors, element, rank):
    """Unary rank type of a product element, factor by factor.

    For products of powers of linear orders the type decomposes into the
    per-factor tuple types, which on pure orders are the threshold
    signatures.
    """
    sig = []
    for (n, k), coords in zip(factors, element):
        sig.append(structures.threshold_signature(n, coords, rank))
    return tuple(sig)


# ---------------------------------------------------------------------------
# Relation powers and the polarity-reduction check


def relation_power(universe, rel, p):
    """Pairs related by a chain of exactly p steps of `rel` (p >= 1)."""
    succ = {x: {y for y in universe if rel(x, y)} for x in universe}
    out = set()
    for x in universe:
        frontier = {x}
        for _ in range(p):
            frontier = set().union(*(succ[y] for y in frontier)) if frontier else set()
        out.update((x, y) for y in frontier)
    return out


def check_polarity_reduction(universe, rel, less, same_class, p):
    """Instance-level check of the polarity-reduction implication.

    Assumptions: rel-related pairs are comparable, and the p-step power of
    rel implies the order.  Conclusion: rel itself implies the order on
    pairs that `same_class` declares equivalent.  Returns a dict with the
    status of each part and the first counterexample, if any.
    """
    comparable = all(less(x, y) or less(y, x)
                     for x in universe for y in universe if rel(x, y))
    power = relation_power(universe, rel, p)
    p_step = all(less(x, y) for (x, y) in power)
    result = {
        "assumption_comparable": comparable,
        "assumption_p_step": p_step,
        "conclusion": True,
        "counterexample": None,
    }
    if not (comparable and p_step):
        return result
    for x in universe:
        for y in universe:
            if rel(x, y) and same_class(x, y) and not less(x, y):
                result["conclusion"] = False
                result["counterexample"] = (x, y)
                return result
    return result


# ---------------------------------------------------------------------------
# Linear domination on powers of linear orders


def is_separated(n, tup, m):
    """All coordinates pairwise and endpoint distances at least m.

    Endpoints enter as virtual coordinates at the minimum and maximum of
    the order, matching the convention x[0] = min, x[k+1] = max.
    """
    values = (1,) + tuple(tup) + (n,)
    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            if abs(values[j] - values[i]) < m:
                return False
    return True


def find_linear_domination(n, k, less, rank, max_polarity=None, type_rank=None):
    """Dominating (d, p) per separated type on {1..n}^k.

    Tuples are grouped by their rank-`type_rank` signature (one more than
    `rank` by default, so that being 2**rank-separated is decided by the
    type: the coarser cap would lump boundary tuples with separated ones)
    and only classes whose every member is 2**rank-separated are searched.
    `less` compares k-tuples.  Polarities |p| <= max_polarity (default n)
    are tried; the implication x[d] <^p y[d] => x < y is verified
    exhaustively within each class.  Returns a dict mapping type signature
    -> (d, p), or -> None when no candidate works.
    """
    if max_polarity is None:
        max_polarity = n
    if type_rank is None:
        type_rank = rank + 1
    buckets = {}
    for tup in itertools.product(range(1, n + 1), repeat=k):
        sig = structures.threshold_signature(n, tup, type_rank)
        buckets.setdefault(sig, []).append(tup)
    out = {}
    for sig, members in buckets.items():
        if not all(is_separated(n, t, 2 ** rank) for t in members):
            continue
        found = None
        for d in range(1, k + 1):
            for mag in range(1, max_polarity + 1):
                for sign in (1, -1):
                    ok = True
                    for t1 in members:
                        for t2 in members:
                            diff = t2[d - 1] - t1[d - 1]
                            hit = diff >= mag if sign == 1 else -diff >= mag
                            if hit and not less(t1, t2):
                                ok = False
                                break
                        if not ok:
                            break
                    if ok:
                        found = (d, sign * mag)
                        break
                if found:
                    break
            if found:
                break
        out[sig] = found
    return out
