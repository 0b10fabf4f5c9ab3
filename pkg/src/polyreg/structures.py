"""Word models, products, Ehrenfeucht-Fraisse games and rank types.

Positions are 1-based throughout.  A word can be modelled with the position
order (`ordered_model`), with successor only (`successor_model`), or as an
ordered product of several words, which adds the block order: x block< y
iff x lies in an earlier factor than y.

Rank-r equivalence is decided two independent ways:

* `ef_equivalent` plays the r-round Ehrenfeucht-Fraisse game by memoized
  exhaustive search (the oracle; budgeted);
* `rank_type_id` computes a canonical bottom-up invariant (atomic profile
  at rank 0, then profile + set of one-point extensions), which names the
  rank-r class directly and is what the fast paths use.

`threshold_signature` is the capped-distance characterization of tuple
types on pure linear orders; its agreement with `ef_equivalent` is an
acceptance obligation, not an assumption.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .budget import DEFAULT_SUBSET_CAP, game_budget
from .errors import BudgetExceeded, EvalError

_serial_counter = itertools.count(1)


class WordStructure:
    """A finite word as a relational structure.

    `letters` may be None for a pure linear order (no label predicates).
    `block_lens` partitions the positions into consecutive nonempty blocks
    and enables the block order.  `intervals` optionally names intervals
    (1-based inclusive pairs); they are carried as metadata and are not
    part of the logical vocabulary.
    """

    def __init__(self, letters=None, *, size=None, order=True, successor=False,
                 block_lens=None, intervals=None, subset_cap=DEFAULT_SUBSET_CAP):
        if letters is None and size is None:
            raise ValueError("need letters or size")
        self.word = letters
        self.size = len(letters) if letters is not None else size
        self.has_order = order
        self.has_succ = successor
        self.block_lens = tuple(block_lens) if block_lens is not None else None
        if self.block_lens is not None:
            if any(b <= 0 for b in self.block_lens):
                raise ValueError("blocks must be nonempty")
            if sum(self.block_lens) != self.size:
                raise ValueError("blocks must cover all positions")
            ids = []
            for i, b in enumerate(self.block_lens, start=1):
                ids.extend([i] * b)
            self._block_ids = tuple(ids)
        else:
            self._block_ids = None
        self.intervals = dict(intervals) if intervals else {}
        for name, (a, b) in self.intervals.items():
            if not 1 <= a <= b <= self.size:
                raise ValueError(f"interval {name!r} = ({a}, {b}) is empty or out of range")
        items = list(self.intervals.values())
        for i, (a1, b1) in enumerate(items):
            for a2, b2 in items[i + 1:]:
                equal = (a1, b1) == (a2, b2)
                disjoint = b1 < a2 or b2 < a1
                if not (equal or disjoint):
                    raise ValueError("distinguished intervals must be pairwise equal or disjoint")
        self.subset_cap = subset_cap
        self._serial = next(_serial_counter)
        self._fp_cache = {}

    # -- basic accessors ---------------------------------------------------

    @property
    def has_blocks(self):
        return self._block_ids is not None

    @property
    def labeled(self):
        return self.word is not None

    @property
    def alphabet(self):
        return "".join(sorted(set(self.word))) if self.word is not None else ""

    def letter_at(self, pos):
        return self.word[pos - 1] if self.word is not None else None

    def less(self, p, q):
        if not self.has_order:
            raise EvalError("structure has no order relation")
        return p < q

    def succ(self, p, q):
        if not self.has_succ:
            raise EvalError("structure has no successor relation")
        return q == p + 1

    def block_of(self, pos):
        if self._block_ids is None:
            raise EvalError("structure has no block decomposition")
        return self._block_ids[pos - 1]

    def block_less(self, p, q):
        return self.block_of(p) < self.block_of(q)

    def block_less_power(self, p, q, power):
        """x block<^power y; negative power means the inverse relation."""
        if power == 0:
            raise ValueError("power must be nonzero")
        if power < 0:
            p, q, power = q, p, -power
        return self.block_of(q) - self.block_of(p) >= power

    @property
    def blocks(self):
        """Block intervals as 1-based inclusive (start, end) pairs."""
        if self.block_lens is None:
            raise EvalError("structure has no block decomposition")
        out = []
        start = 1
        for b in self.block_lens:
            out.append((start, start + b - 1))
            start += b
        return out

    # -- game interface ----------------------------------------------------

    def ef_universe(self):
        return range(1, self.size + 1)

    def atom_profile(self, tup):
        """Canonical description of all atomic facts about `tup`."""
        parts = []
        if self.labeled:
            parts.append(tuple(self.word[p - 1] for p in tup))
        pair_facts = []
        for i in range(len(tup)):
            for j in range(i + 1, len(tup)):
                d = tup[j] - tup[i]
                if self.has_order and self.has_succ:
                    fact = max(-2, min(2, d))
                elif self.has_order:
                    fact = (d > 0) - (d < 0)
                else:
                    # successor-only: the sign of a non-adjacent pair is not atomic
                    fact = d if d in (-1, 0, 1) else 9
                pair_facts.append(fact)
                if self._block_ids is not None:
                    bd = self._block_ids[tup[j] - 1] - self._block_ids[tup[i] - 1]
                    pair_facts.append(("b", (bd > 0) - (bd < 0)))
        parts.append(tuple(pair_facts))
        return tuple(parts)

    def response_candidates(self, own_tuple, move, other, other_tuple):
        """Positions of `other` atom-consistent with `move`'s relation to the pebbles.

        Used to prune Duplicator responses in the game search: any position
        outside this set fails the child's atomic check, so skipping it
        cannot change the game value.  Returns None (no pruning) for
        vocabularies where the region logic would be more subtle than the
        check it saves.
        """
        if self.has_succ or self.has_blocks or other.has_succ or other.has_blocks:
            return None
        for j, pebble in enumerate(own_tuple):
            if move == pebble:
                return [other_tuple[j]]
        lo, hi = 0, other.size + 1
        for j, pebble in enumerate(own_tuple):
            if pebble < move:
                lo = max(lo, other_tuple[j])
            elif pebble > move:
                hi = min(hi, other_tuple[j])
        if self.labeled or other.labeled:
            letter = self.letter_at(move)
            return [b for b in range(lo + 1, hi)
                    if b not in other_tuple and other.letter_at(b) == letter]
        return [b for b in range(lo + 1, hi) if b not in other_tuple]

    def _iso_key(self, tup):
        """Canonical key for memoization across isomorphic game states.

        Only pure (unlabeled or single-letter) orders without blocks or
        successor admit a structure-independent key: the equality pattern
        plus exact segment gaps against virtual endpoints 0 and n+1.
        """
        if self.has_succ or self.has_blocks:
            return None
        if self.labeled and len(set(self.word)) > 1:
            return None
        vals = sorted(set(tup))
        rank_of = {v: i for i, v in enumerate(vals)}
        pattern = tuple(rank_of[p] for p in tup)
        bounds = [0] + vals + [self.size + 1]
        gaps = tuple(bounds[i + 1] - bounds[i] for i in range(len(bounds) - 1))
        letter = self.word[0] if self.labeled and self.word else None
        return ("lin", letter, pattern, gaps)

    # -- misc ----------------------------------------------------------------

    def with_blocks(self, block_lens):
        return WordStructure(self.word, size=self.size, order=self.has_order,
                             successor=self.has_succ, block_lens=block_lens,
                             subset_cap=self.subset_cap)

    def to_json(self):
        data = {
            "size": self.size,
            "labels": {str(p): self.word[p - 1] for p in range(1, self.size + 1)}
            if self.labeled else None,
            "order": self.has_order,
            "successor": self.has_succ,
            "blocks": [list(b) for b in self.blocks] if self.has_blocks else None,
        }
        if self.intervals:
            data["intervals"] = {k: list(v) for k, v in self.intervals.items()}
        return json.dumps(data, sort_keys=True)

    def __repr__(self):
        word = self.word if self.word is not None else f"<order {self.size}>"
        extra = f" blocks={self.block_lens}" if self.has_blocks else ""
        return f"WordStructure({word!r}{extra})"


def ordered_model(word, **kw):
    """The word with label predicates and the position order."""
    return WordStructure(word, order=True, successor=False, **kw)


def successor_model(word, **kw):
    """The word with label predicates and successor instead of the order."""
    return WordStructure(word, order=False, successor=True, **kw)


def linear_order(n, **kw):
    """A pure linear order with n positions and no labels."""
    return WordStructure(None, size=n, **kw)


def ordered_product(words, successor=False):
    """Concatenation of the given words with the block order at the borders."""
    words = list(words)
    if not words:
        raise ValueError("ordered_product needs at least one word")
    if any(len(w) == 0 for w in words):
        raise ValueError("ordered_product factors must be nonempty")
    return WordStructure("".join(words), order=not successor, successor=successor,
                         block_lens=[len(w) for w in words])


class ProductStructure:
    """A direct product of powers of finite linear orders.

    `factors` is a sequence of (size, power) pairs.  An element is a tuple
    of tuples x with x[i][j] in {1..size_i}.  Within one factor the power
    structure permits comparisons between arbitrary coordinates; across
    factors, elements are incomparable.
    """

    def __init__(self, factors):
        self.factors = tuple((int(n), int(k)) for n, k in factors)
        if any(n < 1 or k < 1 for n, k in self.factors):
            raise ValueError("factor sizes and powers must be >= 1")
        self._serial = next(_serial_counter)
        self._universe = None
        self._fp_cache = {}

    @property
    def size(self):
        total = 1
        for n, k in self.factors:
            total *= n ** k
        return total

    def ef_universe(self):
        if self._universe is None:
            axes = []
            for n, k in self.factors:
                axes.append([tuple(c) for c in itertools.product(range(1, n + 1), repeat=k)])
            self._universe = [tuple(e) for e in itertools.product(*axes)]
        return self._universe

    def atom_profile(self, tup):
        facts = []
        for i in range(len(self.factors)):
            for s in range(len(tup)):
                for t in range(s, len(tup)):
                    for js, vs in enumerate(tup[s][i]):
                        for jt, vt in enumerate(tup[t][i]):
                            if s == t and jt <= js:
                                continue
                            d = vt - vs
                            facts.append((d > 0) - (d < 0))
        return tuple(facts)

    def _iso_key(self, tup):
        return None

    def response_candidates(self, own_tuple, move, other, other_tuple):
        return None

    def __repr__(self):
        return f"ProductStructure({self.factors})"


# ---------------------------------------------------------------------------
# Ehrenfeucht-Fraisse games

_EF_MEMO = {}


def clear_caches():
    _EF_MEMO.clear()


def _state_key(s, tup):
    key = s._iso_key(tup)
    if key is not None:
        return key
    return (s._serial, tup)


def ef_equivalent(s1, t1, s2, t2, rank, budget=None):
    """Duplicator wins the rank-round game on (s1, t1) vs (s2, t2)?

    Decided by memoized exhaustive search over game positions; raises
    BudgetExceeded when the instance is too large for the node budget.
    """
    t1, t2 = tuple(t1), tuple(t2)
    if len(t1) != len(t2):
        raise EvalError("tuples must have equal arity")
    if budget is None:
        budget = game_budget()
    counter = [0]
    return _ef(s1, t1, s2, t2, rank, counter, budget)


def _ef(s1, t1, s2, t2, r, counter, budget):
    counter[0] += 1
    if counter[0] > budget:
        raise BudgetExceeded(f"EF game exceeded budget of {budget} positions")
    if s1.atom_profile(t1) != s2.atom_profile(t2):
        return False
    if r == 0:
        return True
    key = (_state_key(s1, t1), _state_key(s2, t2), r)
    hit = _EF_MEMO.get(key)
    if hit is not None:
        return hit
    result = True
    for swapped in (False, True):
        sa, ta, sb, tb = (s1, t1, s2, t2) if not swapped else (s2, t2, s1, t1)
        for a in sa.ef_universe():
            responses = sa.response_candidates(ta, a, sb, tb)
            if responses is None:
                responses = sb.ef_universe()
            ok = False
            for b in responses:
                if swapped:
                    sub = _ef(s1, t1 + (b,), s2, t2 + (a,), r - 1, counter, budget)
                else:
                    sub = _ef(s1, t1 + (a,), s2, t2 + (b,), r - 1, counter, budget)
                if sub:
                    ok = True
                    break
            if not ok:
                result = False
                break
        if not result:
            break
    _EF_MEMO[key] = result
    _EF_MEMO[(key[1], key[0], r)] = result
    return result


# ---------------------------------------------------------------------------
# Threshold signatures on pure linear orders


@dataclass(frozen=True)
class ThresholdSignature:
    """Equality pattern plus capped consecutive gaps against the endpoints."""
    pattern: tuple
    gaps: tuple

    def __iter__(self):
        return iter(self.gaps)


def threshold_signature(order_size, tup, rank):
    """Capped-distance invariant of a tuple in the pure order {1..order_size}.

    Gaps are measured between consecutive sorted coordinates and virtual
    endpoint sentinels just outside the order (at 0 and order_size+1), and
    capped at 2**rank.  Equal signatures are meant to coincide with
    rank-`rank` game equivalence; that agreement is tested exhaustively,
    with the EF solver as the oracle.
    """
    n = order_size
    for p in tup:
        if not 1 <= p <= n:
            raise EvalError(f"coordinate {p} outside order of size {n}")
    cap = 2 ** rank
    vals = sorted(set(tup))
    rank_of = {v: i for i, v in enumerate(vals)}
    pattern = tuple(rank_of[p] for p in tup)
    bounds = [0] + vals + [n + 1]
    gaps = tuple(min(bounds[i + 1] - bounds[i], cap) for i in range(len(bounds) - 1))
    return ThresholdSignature(pattern, gaps)


# ---------------------------------------------------------------------------
# Rank types via canonical bottom-up invariants


@dataclass(frozen=True)
class TypeId:
    """Opaque, session-scoped name of a rank-r equivalence class."""
    token: int
    rank: int

    def representative(self):
        return _registry.reps.get(self.token)


class _Registry:
    def __init__(self):
        self.intern = {}
        self.reps = {}

    def get(self, key, rep):
        token = self.intern.get(key)
        if token is None:
            token = len(self.intern) + 1
            if token > game_budget():
                raise BudgetExceeded("type registry exceeded budget")
            self.intern[key] = token
            self.reps[token] = rep
        return token


_registry = _Registry()


def _fingerprint(s, tup, r):
    cache = s._fp_cache
    key = (tup, r)
    hit = cache.get(key)
    if hit is not None:
        return hit
    if r == 0:
        raw = ("a", s.atom_profile(tup))
    else:
        own = _fingerprint(s, tup, r - 1)
        ext = frozenset(_fingerprint(s, tup + (e,), r - 1) for e in s.ef_universe())
        raw = (own, ext)
    token = _registry.get(raw, (s, tup))
    cache[key] = token
    return token


def rank_type_id(s, tup, rank):
    """Canonical TypeId of (s, tup) at the given rank.

    Two (structure, tuple) pairs receive the same TypeId iff they are
    rank-equivalent; identity is stable within one process run only.
    """
    return TypeId(_fingerprint(s, tuple(tup), rank), rank)


# ---------------------------------------------------------------------------
# Vectorized type tables for labeled, blocked, ordered words

_MAX_TABLE_CELLS = 100_000_000


def _raw_type_tables(word, blocks, min_arity, rank):
    """Per-level invariant tables: (level, arity) -> (local ids, representatives).

    Level-j ids classify arity-a tuples up to the rank-j invariant; the
    representatives array maps each local id to the flat index of its first
    witness.  Tuples are indexed in row-major order over 0-based positions.
    """
    n = len(word)
    if n == 0:
        raise ValueError("word must be nonempty")
    if n ** (min_arity + rank) > _MAX_TABLE_CELLS:
        raise BudgetExceeded("type table too large")
    letters = np.array([ord(c) for c in word], dtype=np.int32)
    blocks = np.asarray(blocks, dtype=np.int32)
    if blocks.shape != (n,):
        raise ValueError("block_ids must assign one block per position")
    tables = {}

    def reduce_rows(rows, key):
        _, reps, ids = np.unique(rows, axis=0, return_index=True, return_inverse=True)
        tables[key] = (ids.astype(np.int32), reps)

    for a in range(min_arity, min_arity + rank + 1):
        idx = np.indices((n,) * a, dtype=np.int32).reshape(a, -1)
        cols = [letters[idx[c]] for c in range(a)]
        for i in range(a):
            for j in range(i + 1, a):
                cols.append(np.sign(idx[j] - idx[i]).astype(np.int32))
                cols.append(np.sign(blocks[idx[j]] - blocks[idx[i]]).astype(np.int32))
        if cols:
            rows = np.stack(cols, axis=1)
        else:
            rows = np.zeros((1, 0), dtype=np.int32)
        reduce_rows(rows, (0, a))

    big = np.iinfo(np.int32).max
    for j in range(1, rank + 1):
        for a in range(min_arity, min_arity + rank - j + 1):
            own = tables[(j - 1, a)][0]
            children = tables[(j - 1, a + 1)][0].reshape(n ** a, n)
            srt = np.sort(children, axis=1)
            if n > 1:
                dup = np.zeros_like(srt, dtype=bool)
                dup[:, 1:] = srt[:, 1:] == srt[:, :-1]
                srt = np.where(dup, big, srt)
                srt = np.sort(srt, axis=1)
            rows = np.concatenate([own[:, None], srt], axis=1)
            reduce_rows(rows, (j, a))
    return tables


def blocked_type_table(word, block_ids, arity, rank):
    """Rank-`rank` type ids for every `arity`-tuple of positions of `word`.

    The word carries labels, the position order and the block order induced
    by `block_ids` (one id per position, nondecreasing).  Returns an int
    array of shape (n,)*arity; ids are local to this call.  Index the array
    with 0-based positions.
    """
    tables = _raw_type_tables(word, block_ids, arity, rank)
    ids, _ = tables[(rank, arity)]
    return ids.reshape((len(word),) * arity)
