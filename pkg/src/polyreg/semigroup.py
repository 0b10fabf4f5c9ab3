"""Finite semigroups, homomorphisms from words, and factorization forests.

The forest builder follows the constructive recursion for aperiodic
semigroups: pick a letter whose one-sided multiplication is not surjective,
decompose the word around maximal runs of that letter, and recurse both
into the smaller semigroup T = Ss (via the derived word of segment values)
and into the smaller alphabet.  The resulting tree satisfies:

1. every node spanning at least two positions has at least two child blocks;
2. a node with at least three children has all children equal under h;
3. heights (leaf = 1, inner = 1 + max child height) are bounded by a
   constant depending only on the homomorphism, computable by the same
   recursion (`height_bound`).

`validate_forest` re-checks all of this on any tree, built or hand-made.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .budget import DEFAULT_MONOID_CAP
from .errors import ClosureCapExceeded, NonAperiodicError, PolyregError
from . import structures


class Semigroup:
    """A finite semigroup given by its multiplication table."""

    def __init__(self, table, element_names=None):
        self.table = [list(row) for row in table]
        n = len(self.table)
        for row in self.table:
            if len(row) != n or any(not 0 <= x < n for x in row):
                raise PolyregError("multiplication table must be square over 0..n-1")
        if n:
            import numpy as np
            t = np.asarray(self.table, dtype=np.intp)
            left = t[t, :]          # (x*y)*z
            right = t[:, t.reshape(-1)].reshape(n, n, n)  # x*(y*z)
            if not (left == right).all():
                x, y, z = map(int, np.argwhere(left != right)[0])
                raise PolyregError(f"multiplication not associative at ({x},{y},{z})")
        self.element_names = list(element_names) if element_names else [str(i) for i in range(n)]

    @property
    def size(self):
        return len(self.table)

    def mul(self, x, y):
        return self.table[x][y]

    def power(self, x, k):
        acc = x
        for _ in range(k - 1):
            acc = self.table[acc][x]
        return acc

    def _key(self):
        return tuple(tuple(row) for row in self.table)

    def reversed(self):
        n = self.size
        return Semigroup([[self.table[y][x] for y in range(n)] for x in range(n)],
                         self.element_names)

    def __repr__(self):
        return f"Semigroup(size={self.size})"


def is_aperiodic(sg):
    """True iff x^n = x^(n+1) for every element, n = element count."""
    n = sg.size
    for x in range(n):
        p = sg.power(x, n) if n > 1 else x
        if sg.mul(p, x) != p:
            return False
    return True


class Homomorphism:
    """A semigroup homomorphism from nonempty words, given by letter images."""

    def __init__(self, semigroup, letter_images):
        self.semigroup = semigroup
        self.letter_images = dict(letter_images)
        for a, img in self.letter_images.items():
            if not 0 <= img < semigroup.size:
                raise PolyregError(f"letter {a!r} maps outside the semigroup")

    @property
    def alphabet(self):
        return "".join(sorted(self.letter_images))

    def image(self, word):
        if len(word) == 0:
            raise PolyregError("homomorphism is defined on nonempty words only")
        it = iter(word)
        acc = self._img(next(it))
        for ch in it:
            acc = self.semigroup.mul(acc, self._img(ch))
        return acc

    def _img(self, letter):
        try:
            return self.letter_images[letter]
        except KeyError:
            raise PolyregError(f"letter {letter!r} not in the homomorphism alphabet") from None

    def reversed(self):
        return Homomorphism(self.semigroup.reversed(), self.letter_images)


def load_homomorphism(data):
    """Load `{"elements": n, "table": [[...]], "letters": {"a": i, ...}}`."""
    if isinstance(data, str):
        data = json.loads(data)
    table = data["table"]
    if len(table) != data.get("elements", len(table)):
        raise PolyregError("element count does not match table size")
    sg = Semigroup(table, data.get("names"))
    return sg, Homomorphism(sg, data["letters"])


def dump_homomorphism(h):
    return json.dumps({
        "elements": h.semigroup.size,
        "table": h.semigroup.table,
        "letters": h.letter_images,
    }, sort_keys=True)


# ---------------------------------------------------------------------------
# The rank-r type monoid


_type_monoid_cache = {}


def type_monoid(alphabet, rank, cap=DEFAULT_MONOID_CAP):
    """The semigroup of rank-`rank` equivalence classes of nonempty words.

    Elements are discovered by closure from the letters under concatenation
    of class representatives; the product of two classes is the class of
    the concatenated representatives.  Returns (Semigroup, Homomorphism).
    Results are cached per (alphabet, rank).
    """
    key = ("".join(sorted(set(alphabet))), rank, cap)
    hit = _type_monoid_cache.get(key)
    if hit is not None:
        return hit
    result = _type_monoid(alphabet, rank, cap)
    _type_monoid_cache[key] = result
    return result


def _type_monoid(alphabet, rank, cap):
    letters = sorted(set(alphabet))
    if not letters:
        raise PolyregError("alphabet must be nonempty")

    def class_token(word):
        return structures.rank_type_id(structures.ordered_model(word), (), rank).token

    reps = []          # class id -> representative word (shortest-first BFS)
    by_token = {}      # token -> class id

    def classify(word):
        token = class_token(word)
        cid = by_token.get(token)
        if cid is None:
            cid = len(reps)
            if cid >= cap:
                raise ClosureCapExceeded(f"type monoid exceeded {cap} elements")
            reps.append(word)
            by_token[token] = cid
        return cid

    # discover all classes through right extension by single letters; the
    # type of a concatenation only depends on the types of the parts, so the
    # letter maps generate everything and keep representatives short
    letter_map = {}    # (class id, letter) -> class id
    for a in letters:
        classify(a)
    frontier = list(range(len(reps)))
    while frontier:
        nxt = []
        for i in frontier:
            for a in letters:
                before = len(reps)
                letter_map[(i, a)] = classify(reps[i] + a)
                if len(reps) > before:
                    nxt.append(len(reps) - 1)
        frontier = nxt

    def mul(i, j):
        for a in reps[j]:
            i = letter_map[(i, a)]
        return i

    n = len(reps)
    table = [[mul(i, j) for j in range(n)] for i in range(n)]
    sg = Semigroup(table, element_names=reps)
    hom = Homomorphism(sg, {a: by_token[class_token(a)] for a in letters})
    return sg, hom


# ---------------------------------------------------------------------------
# Factorization forests


@dataclass(frozen=True)
class ForestNode:
    """A forest node spanning 1-based positions start..end inclusive."""
    start: int
    end: int
    children: tuple = ()

    @property
    def is_leaf(self):
        return not self.children

    @property
    def span(self):
        return self.end - self.start + 1

    @property
    def height(self):
        if self.is_leaf:
            return 1
        return 1 + max(c.height for c in self.children)


def leaf(pos):
    return ForestNode(pos, pos)


def node(children):
    children = tuple(children)
    return ForestNode(children[0].start, children[-1].end, children)


@dataclass
class FactorizationForest:
    root: ForestNode
    word: str

    @property
    def height(self):
        return self.root.height

    @property
    def blocks(self):
        """Top-level block intervals, 1-based inclusive."""
        if self.root.is_leaf:
            return [(self.root.start, self.root.end)]
        return [(c.start, c.end) for c in self.root.children]

    def infix(self, node_):
        return self.word[node_.start - 1:node_.end]

    def to_json(self):
        def enc(nd):
            out = {"span": [nd.start, nd.end]}
            if nd.children:
                out["children"] = [enc(c) for c in nd.children]
            return out
        return json.dumps({"word": self.word, "tree": enc(self.root)}, sort_keys=True)

    def to_text(self):
        lines = []

        def walk(nd, depth):
            lines.append("  " * depth + f"[{nd.start}..{nd.end}] {self.infix(nd)!r}")
            for c in nd.children:
                walk(c, depth + 1)

        walk(self.root, 0)
        return "\n".join(lines)


def _generated(images, sg):
    seen = set(images)
    frontier = list(seen)
    while frontier:
        nxt = []
        for x in list(seen):
            for y in frontier:
                for z in (sg.mul(x, y), sg.mul(y, x)):
                    if z not in seen:
                        seen.add(z)
                        nxt.append(z)
        frontier = nxt
    return seen


def _pick_splitter(letters, images, sg):
    """Smallest letter (alphabet order) whose one-sided action is not surjective.

    Right multiplication is tried for all letters first, then left.  Returns
    (letter, side) or None when every letter acts as a two-sided identity on
    the generated subsemigroup (then a flat forest is already valid).
    """
    act = sorted(_generated([images[a] for a in letters], sg))
    for side in ("right", "left"):
        for a in sorted(letters):
            s = images[a]
            if side == "right":
                image = {sg.mul(t, s) for t in act}
            else:
                image = {sg.mul(s, t) for t in act}
            if image != set(act):
                return a, side
    return None


def _flat(start, length):
    if length == 1:
        return leaf(start)
    return node([leaf(start + i) for i in range(length)])


def _segments(word, s):
    """Parse w1 s^k1 ... wn s^kn (word must not start with s and must end with s)."""
    out = []
    i = 0
    while i < len(word):
        j = i
        while j < len(word) and word[j] != s:
            j += 1
        k = j
        while k < len(word) and word[k] == s:
            k += 1
        out.append((word[i:j], k - j))
        i = k
    return out


def _mirror(nd, n):
    children = tuple(_mirror(c, n) for c in reversed(nd.children))
    return ForestNode(n + 1 - nd.end, n + 1 - nd.start, children)


def _build(word, offset, images, sg):
    # `word` is a sequence of hashable letters; positions are offset+1-based
    n = len(word)
    if n == 1:
        return leaf(offset + 1)
    letters = set(word)
    if len(letters) == 1:
        return _flat(offset + 1, n)
    pick = _pick_splitter(letters, images, sg)
    if pick is None:
        # every letter acts as a two-sided identity: all infixes are h-equal
        return _flat(offset + 1, n)
    s, side = pick
    if side == "left":
        rev = _build(tuple(reversed(word)), 0, images, sg.reversed())
        return _shift(_mirror(rev, n), offset)

    if word[0] != s and word[-1] == s:
        segs = _segments(word, s)
        if len(segs) == 1:
            w1, k1 = segs[0]
            return node([
                _build(w1, offset, images, sg),
                _flat(offset + len(w1) + 1, k1),
            ])
        # derived word over T = (generated)s, one letter per segment
        seg_bounds = []
        pos = 0
        seg_values = []
        for w_i, k_i in segs:
            seg_bounds.append((pos, pos + len(w_i) + k_i))
            val = images[w_i[0]]
            for ch in w_i[1:]:
                val = sg.mul(val, images[ch])
            for _ in range(k_i):
                val = sg.mul(val, images[s])
            seg_values.append(val)
            pos += len(w_i) + k_i
        derived = tuple(seg_values)
        ident = {t: t for t in set(derived) | _generated(seg_values, sg)}
        f_t = _build(derived, 0, ident, sg)

        def expand(nd):
            if nd.is_leaf:
                i = nd.start - 1
                w_i, k_i = segs[i]
                lo = offset + seg_bounds[i][0]
                return node([
                    _build(w_i, lo, images, sg),
                    _flat(lo + len(w_i) + 1, k_i),
                ])
            return node([expand(c) for c in nd.children])

        return expand(f_t)

    if word[0] == s:
        k = 0
        while k < n and word[k] == s:
            k += 1
        return node([
            _flat(offset + 1, k),
            _build(word[k:], offset + k, images, sg),
        ])

    # contains s, does not start or end with it: split after the last s
    last = max(i for i, ch in enumerate(word) if ch == s)
    return node([
        _build(word[:last + 1], offset, images, sg),
        _build(word[last + 1:], offset + last + 1, images, sg),
    ])


def _shift(nd, offset):
    if offset == 0:
        return nd
    return ForestNode(nd.start + offset, nd.end + offset,
                      tuple(_shift(c, offset) for c in nd.children))


def build_forest(h, word):
    """Factorization forest of `word` under the aperiodic homomorphism h."""
    if len(word) == 0:
        raise PolyregError("cannot build a forest for the empty word")
    if not is_aperiodic(h.semigroup):
        raise NonAperiodicError("forest construction requires an aperiodic semigroup")
    for ch in set(word):
        h._img(ch)
    root = _build(tuple(word), 0, h.letter_images, h.semigroup)
    return FactorizationForest(root, word if isinstance(word, str) else "".join(word))


# ---------------------------------------------------------------------------
# Validation and the height bound


@dataclass
class ForestReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def __str__(self):
        return "valid" if self.ok else "\n".join(self.violations)


def validate_forest(forest, h):
    """Check the forest invariants; violations are reported, not raised."""
    report = ForestReport()
    word = forest.word

    def fail(nd, message):
        report.violations.append(f"[{nd.start}..{nd.end}] {message}")

    def walk(nd):
        if nd.start > nd.end:
            fail(nd, "empty span")
            return
        if nd.is_leaf:
            if nd.span != 1:
                fail(nd, "leaf spans more than one position")
            return
        if nd.span < 2:
            fail(nd, "single position should be a leaf")
        if len(nd.children) < 2:
            fail(nd, "string of length >= 2 must have at least two blocks")
        expected = nd.start
        for c in nd.children:
            if c.start != expected:
                fail(nd, "children do not partition the interval into consecutive blocks")
                break
            expected = c.end + 1
        else:
            if expected != nd.end + 1:
                fail(nd, "children do not cover the interval")
        if len(nd.children) >= 3:
            values = {h.image(word[c.start - 1:c.end]) for c in nd.children}
            if len(values) > 1:
                fail(nd, "node with >= 3 blocks has blocks with different images")
        for c in nd.children:
            walk(c)

    if forest.root.start != 1 or forest.root.end != len(word):
        fail(forest.root, "root does not span the whole word")
    walk(forest.root)
    return report


_bound_cache = {}


def height_bound(h):
    """Upper bound on forest heights for h, by the builder's own recursion."""
    if not is_aperiodic(h.semigroup):
        raise NonAperiodicError("height bound requires an aperiodic semigroup")
    return _bound(frozenset(h.letter_images), h.letter_images, h.semigroup)


def _bound(letters, images, sg):
    key = (sg._key(), tuple(sorted((repr(a), images[a]) for a in letters)))
    hit = _bound_cache.get(key)
    if hit is not None:
        return hit
    _bound_cache[key] = 2  # provisional; cycles cannot occur but keep lookups sane
    if len(letters) <= 1:
        result = 2
    else:
        pick = _pick_splitter(letters, images, sg)
        if pick is None:
            result = 2
        else:
            s, side = pick
            act_sg, act_images = sg, images
            if side == "left":
                act_sg = sg.reversed()
            act = sorted(_generated([act_images[a] for a in letters], act_sg))
            t_set = sorted({act_sg.mul(t, act_images[s]) for t in act})
            remap = {t: i for i, t in enumerate(t_set)}
            t_table = [[remap[act_sg.mul(x, y)] for y in t_set] for x in t_set]
            t_sg = Semigroup(t_table)
            t_letters = frozenset(range(len(t_set)))
            b_t = _bound(t_letters, {i: i for i in t_letters}, t_sg)
            b_rest = _bound(letters - {s}, images, sg)
            result = b_t + b_rest + 4
    for a in sorted(letters, key=repr):
        if len(letters) > 1:
            result = max(result, _bound(letters - {a}, images, sg))
    _bound_cache[key] = result
    return result
