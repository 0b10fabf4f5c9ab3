"""FO/MSO formulas over words, with parsing, evaluation and substitution.

Formulas are immutable ASTs over the word vocabulary: unary label atoms,
the position order ``<``, equality, the block order, successor, and (for
MSO) set membership.  Concrete syntax is s-expressions::

    atoms        (a x) (< v w) (= v w) (block< v w) (succ v w) (in v V)
    connectives  (not f) (and f ...) (or f ...)
    quantifiers  (exists v f) (forall v f) (existsS V f) (forallS V f)

Set variables are capitalized, first-order variables are not.  ``<=``,
``>=``, ``>`` and ``!=`` are accepted as sugar and desugared to the core
atoms, so parsing is not literally inverse to printing on sugared input.

Evaluation is plain Tarskian semantics over a word structure; MSO set
quantifiers enumerate all subsets of the universe and are therefore
exponential (guarded by a cap).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import (
    EvalError,
    FlavorError,
    FormulaSyntaxError,
    SubsetCapExceeded,
    SubstitutionError,
)


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Formula:
    def __and__(self, other):
        return And((self, other))

    def __or__(self, other):
        return Or((self, other))

    def __invert__(self):
        return Not(self)


@dataclass(frozen=True)
class Label(Formula):
    letter: str
    var: str


@dataclass(frozen=True)
class Less(Formula):
    left: str
    right: str


@dataclass(frozen=True)
class Eq(Formula):
    left: str
    right: str


@dataclass(frozen=True)
class BlockLess(Formula):
    left: str
    right: str


@dataclass(frozen=True)
class Succ(Formula):
    left: str
    right: str


@dataclass(frozen=True)
class InSet(Formula):
    var: str
    set_var: str


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    parts: tuple


@dataclass(frozen=True)
class Or(Formula):
    parts: tuple


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class ExistsSet(Formula):
    set_var: str
    body: Formula


@dataclass(frozen=True)
class ForallSet(Formula):
    set_var: str
    body: Formula


TRUE = And(())
FALSE = Or(())

_BINARY_ATOMS = (Less, Eq, BlockLess, Succ)


def is_set_var(name):
    return bool(name) and name[0].isupper()


# ---------------------------------------------------------------------------
# Parser


class _Tokenizer:
    def __init__(self, text):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def _advance(self, ch):
        self.pos += 1
        if ch == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1

    def tokens(self):
        out = []
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch in " \t\r\n":
                self._advance(ch)
            elif ch == ";":
                while self.pos < len(self.text) and self.text[self.pos] != "\n":
                    self._advance(self.text[self.pos])
            elif ch in "()":
                out.append((ch, self.line, self.col))
                self._advance(ch)
            else:
                line, col = self.line, self.col
                word = []
                while self.pos < len(self.text) and self.text[self.pos] not in " \t\r\n();":
                    word.append(self.text[self.pos])
                    self._advance(self.text[self.pos])
                out.append(("".join(word), line, col))
        out.append((None, self.line, self.col))
        return out


def _check_var(name, line, col, want_set=False):
    if not name or name in "()":
        raise FormulaSyntaxError("expected a variable name", line, col)
    if want_set and not is_set_var(name):
        raise FormulaSyntaxError(f"set variable expected (capitalized), got {name!r}", line, col)
    if not want_set and is_set_var(name):
        raise FormulaSyntaxError(f"first-order variable expected, got set variable {name!r}", line, col)
    return name


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, what):
        tok, line, col = self.next()
        if tok != what:
            raise FormulaSyntaxError(f"expected {what!r}, got {tok!r}", line, col)

    def parse(self):
        node = self.formula()
        tok, line, col = self.next()
        if tok is not None:
            raise FormulaSyntaxError(f"trailing input {tok!r}", line, col)
        return node

    def formula(self):
        tok, line, col = self.next()
        if tok != "(":
            raise FormulaSyntaxError(f"expected '(', got {tok!r}", line, col)
        head, hline, hcol = self.next()
        if head is None or head in "()":
            raise FormulaSyntaxError("empty form", hline, hcol)
        if head == "not":
            body = self.formula()
            self.expect(")")
            return Not(body)
        if head in ("and", "or"):
            parts = []
            while self.peek()[0] == "(":
                parts.append(self.formula())
            self.expect(")")
            return And(tuple(parts)) if head == "and" else Or(tuple(parts))
        if head in ("exists", "forall"):
            var, vline, vcol = self.next()
            _check_var(var, vline, vcol, want_set=False)
            body = self.formula()
            self.expect(")")
            return Exists(var, body) if head == "exists" else Forall(var, body)
        if head in ("existsS", "forallS"):
            var, vline, vcol = self.next()
            _check_var(var, vline, vcol, want_set=True)
            body = self.formula()
            self.expect(")")
            return ExistsSet(var, body) if head == "existsS" else ForallSet(var, body)
        if head in ("<", "=", "block<", "succ", "<=", ">=", ">", "!="):
            u, ul, uc = self.next()
            v, vl, vc = self.next()
            _check_var(u, ul, uc)
            _check_var(v, vl, vc)
            self.expect(")")
            return _binary(head, u, v)
        if head == "in":
            u, ul, uc = self.next()
            v, vl, vc = self.next()
            _check_var(u, ul, uc)
            _check_var(v, vl, vc, want_set=True)
            self.expect(")")
            return InSet(u, v)
        # label atom: single-letter relation name
        if len(head) != 1:
            raise FormulaSyntaxError(f"unknown form {head!r}", hline, hcol)
        var, vline, vcol = self.next()
        _check_var(var, vline, vcol)
        self.expect(")")
        return Label(head, var)


def _binary(op, u, v):
    if op == "<":
        return Less(u, v)
    if op == "=":
        return Eq(u, v)
    if op == "block<":
        return BlockLess(u, v)
    if op == "succ":
        return Succ(u, v)
    # surface sugar
    if op == "<=":
        return Or((Less(u, v), Eq(u, v)))
    if op == ">=":
        return Or((Less(v, u), Eq(u, v)))
    if op == ">":
        return Less(v, u)
    if op == "!=":
        return Not(Eq(u, v))
    raise AssertionError(op)


def parse_formula(text):
    """Parse s-expression source into a Formula AST.

    Raises FormulaSyntaxError with line/column on malformed input.
    """
    return _Parser(_Tokenizer(text).tokens()).parse()


def to_sexpr(f):
    """Print a formula in the canonical (desugared) concrete syntax."""
    if isinstance(f, Label):
        return f"({f.letter} {f.var})"
    if isinstance(f, Less):
        return f"(< {f.left} {f.right})"
    if isinstance(f, Eq):
        return f"(= {f.left} {f.right})"
    if isinstance(f, BlockLess):
        return f"(block< {f.left} {f.right})"
    if isinstance(f, Succ):
        return f"(succ {f.left} {f.right})"
    if isinstance(f, InSet):
        return f"(in {f.var} {f.set_var})"
    if isinstance(f, Not):
        return f"(not {to_sexpr(f.body)})"
    if isinstance(f, And):
        return "(and" + "".join(" " + to_sexpr(p) for p in f.parts) + ")"
    if isinstance(f, Or):
        return "(or" + "".join(" " + to_sexpr(p) for p in f.parts) + ")"
    if isinstance(f, Exists):
        return f"(exists {f.var} {to_sexpr(f.body)})"
    if isinstance(f, Forall):
        return f"(forall {f.var} {to_sexpr(f.body)})"
    if isinstance(f, ExistsSet):
        return f"(existsS {f.set_var} {to_sexpr(f.body)})"
    if isinstance(f, ForallSet):
        return f"(forallS {f.set_var} {to_sexpr(f.body)})"
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Static analysis


def free_vars(f):
    """Free first-order variables of f."""
    if isinstance(f, Label):
        return frozenset({f.var})
    if isinstance(f, _BINARY_ATOMS):
        return frozenset({f.left, f.right})
    if isinstance(f, InSet):
        return frozenset({f.var})
    if isinstance(f, Not):
        return free_vars(f.body)
    if isinstance(f, (And, Or)):
        out = frozenset()
        for p in f.parts:
            out |= free_vars(p)
        return out
    if isinstance(f, (Exists, Forall)):
        return free_vars(f.body) - {f.var}
    if isinstance(f, (ExistsSet, ForallSet)):
        return free_vars(f.body)
    raise TypeError(f"not a formula: {f!r}")


def free_set_vars(f):
    """Free set variables of f."""
    if isinstance(f, InSet):
        return frozenset({f.set_var})
    if isinstance(f, (Label, *_BINARY_ATOMS)):
        return frozenset()
    if isinstance(f, Not):
        return free_set_vars(f.body)
    if isinstance(f, (And, Or)):
        out = frozenset()
        for p in f.parts:
            out |= free_set_vars(p)
        return out
    if isinstance(f, (Exists, Forall)):
        return free_set_vars(f.body)
    if isinstance(f, (ExistsSet, ForallSet)):
        return free_set_vars(f.body) - {f.set_var}
    raise TypeError(f"not a formula: {f!r}")


def quantifier_rank(f):
    """Maximum quantifier nesting depth, counting both FO and set quantifiers."""
    if isinstance(f, (Label, InSet, *_BINARY_ATOMS)):
        return 0
    if isinstance(f, Not):
        return quantifier_rank(f.body)
    if isinstance(f, (And, Or)):
        return max((quantifier_rank(p) for p in f.parts), default=0)
    if isinstance(f, (Exists, Forall, ExistsSet, ForallSet)):
        return 1 + quantifier_rank(f.body)
    raise TypeError(f"not a formula: {f!r}")


def is_mso(f):
    """True iff f uses set quantifiers or set membership."""
    if isinstance(f, InSet):
        return True
    if isinstance(f, (ExistsSet, ForallSet)):
        return True
    if isinstance(f, (Label, *_BINARY_ATOMS)):
        return False
    if isinstance(f, Not):
        return is_mso(f.body)
    if isinstance(f, (And, Or)):
        return any(is_mso(p) for p in f.parts)
    if isinstance(f, (Exists, Forall)):
        return is_mso(f.body)
    raise TypeError(f"not a formula: {f!r}")


def require_fo(f, what="formula"):
    if is_mso(f):
        raise FlavorError(f"{what} must be first-order, but uses MSO features")
    return f


# ---------------------------------------------------------------------------
# Evaluation

# Compiled evaluators take (structure, env) where env maps variable names to
# positions (FO) or frozensets of positions (set variables).  Compilation is
# cached per formula; formulas are immutable.

_compiled = {}


def _compile(f):
    if isinstance(f, Label):
        letter, var = f.letter, f.var
        return lambda st, env: st.letter_at(env[var]) == letter
    if isinstance(f, Less):
        u, v = f.left, f.right
        return lambda st, env: st.less(env[u], env[v])
    if isinstance(f, Eq):
        u, v = f.left, f.right
        return lambda st, env: env[u] == env[v]
    if isinstance(f, BlockLess):
        u, v = f.left, f.right
        return lambda st, env: st.block_less(env[u], env[v])
    if isinstance(f, Succ):
        u, v = f.left, f.right
        return lambda st, env: st.succ(env[u], env[v])
    if isinstance(f, InSet):
        u, V = f.var, f.set_var
        return lambda st, env: env[u] in env[V]
    if isinstance(f, Not):
        sub = compiled_evaluator(f.body)
        return lambda st, env: not sub(st, env)
    if isinstance(f, And):
        subs = [compiled_evaluator(p) for p in f.parts]
        return lambda st, env: all(s(st, env) for s in subs)
    if isinstance(f, Or):
        subs = [compiled_evaluator(p) for p in f.parts]
        return lambda st, env: any(s(st, env) for s in subs)
    if isinstance(f, (Exists, Forall)):
        var = f.var
        sub = compiled_evaluator(f.body)
        if isinstance(f, Exists):
            def run(st, env):
                saved = env.get(var)
                had = var in env
                try:
                    for p in range(1, st.size + 1):
                        env[var] = p
                        if sub(st, env):
                            return True
                    return False
                finally:
                    if had:
                        env[var] = saved
                    else:
                        env.pop(var, None)
        else:
            def run(st, env):
                saved = env.get(var)
                had = var in env
                try:
                    for p in range(1, st.size + 1):
                        env[var] = p
                        if not sub(st, env):
                            return False
                    return True
                finally:
                    if had:
                        env[var] = saved
                    else:
                        env.pop(var, None)
        return run
    if isinstance(f, (ExistsSet, ForallSet)):
        var = f.set_var
        sub = compiled_evaluator(f.body)
        existential = isinstance(f, ExistsSet)

        def run(st, env):
            if st.size > st.subset_cap:
                raise SubsetCapExceeded(
                    f"set quantification over {st.size} positions exceeds cap {st.subset_cap}"
                )
            saved = env.get(var)
            had = var in env
            positions = range(1, st.size + 1)
            try:
                for r in range(st.size + 1):
                    for combo in itertools.combinations(positions, r):
                        env[var] = frozenset(combo)
                        value = sub(st, env)
                        if existential and value:
                            return True
                        if not existential and not value:
                            return False
                return not existential
            finally:
                if had:
                    env[var] = saved
                else:
                    env.pop(var, None)

        return run
    raise TypeError(f"not a formula: {f!r}")


def compiled_evaluator(f):
    fn = _compiled.get(f)
    if fn is None:
        fn = _compile(f)
        _compiled[f] = fn
    return fn


def eval_formula(f, structure, assignment=None, set_assignment=None):
    """Evaluate f over a word structure under the given assignment.

    `assignment` maps first-order variables to 1-based positions,
    `set_assignment` maps set variables to iterables of positions.
    All free variables of f must be covered.
    """
    env = {}
    if assignment:
        for var, pos in assignment.items():
            if not 1 <= pos <= structure.size:
                raise EvalError(f"assignment {var}={pos} outside universe of size {structure.size}")
            env[var] = pos
    if set_assignment:
        for var, positions in set_assignment.items():
            positions = frozenset(positions)
            for pos in positions:
                if not 1 <= pos <= structure.size:
                    raise EvalError(f"assignment {var} contains {pos}, outside universe")
            env[var] = positions
    missing = free_vars(f) - set(env)
    if missing:
        raise EvalError(f"uncovered free variables: {sorted(missing)}")
    missing_sets = free_set_vars(f) - set(env)
    if missing_sets:
        raise EvalError(f"uncovered free set variables: {sorted(missing_sets)}")
    return compiled_evaluator(f)(structure, env)


# ---------------------------------------------------------------------------
# Renaming and substitution


def rename_vars(f, mapping):
    """Capture-avoiding renaming of free first-order variables."""
    return _rename(f, dict(mapping), _FreshNames(f))


class _FreshNames:
    def __init__(self, *formulas):
        self.used = set()
        for f in formulas:
            _collect_names(f, self.used)
        self.counter = 0

    def fresh(self, base):
        while True:
            self.counter += 1
            name = f"{base}_{self.counter}"
            if name not in self.used:
                self.used.add(name)
                return name


def _collect_names(f, out):
    if isinstance(f, Label):
        out.add(f.var)
    elif isinstance(f, _BINARY_ATOMS):
        out.add(f.left)
        out.add(f.right)
    elif isinstance(f, InSet):
        out.add(f.var)
        out.add(f.set_var)
    elif isinstance(f, Not):
        _collect_names(f.body, out)
    elif isinstance(f, (And, Or)):
        for p in f.parts:
            _collect_names(p, out)
    elif isinstance(f, (Exists, Forall)):
        out.add(f.var)
        _collect_names(f.body, out)
    elif isinstance(f, (ExistsSet, ForallSet)):
        out.add(f.set_var)
        _collect_names(f.body, out)


def _rename(f, mapping, fresh):
    if isinstance(f, Label):
        return Label(f.letter, mapping.get(f.var, f.var))
    if isinstance(f, _BINARY_ATOMS):
        return type(f)(mapping.get(f.left, f.left), mapping.get(f.right, f.right))
    if isinstance(f, InSet):
        return InSet(mapping.get(f.var, f.var), mapping.get(f.set_var, f.set_var))
    if isinstance(f, Not):
        return Not(_rename(f.body, mapping, fresh))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(_rename(p, mapping, fresh) for p in f.parts))
    if isinstance(f, (Exists, Forall, ExistsSet, ForallSet)):
        var = f.var if isinstance(f, (Exists, Forall)) else f.set_var
        # bound variable: shadow the mapping; rename it if it collides with a target
        inner = {k: v for k, v in mapping.items() if k != var}
        if var in inner.values():
            new_var = fresh.fresh(var)
            inner[var] = new_var
            var = new_var
        elif not inner:
            return type(f)(var, f.body)
        body = _rename(f.body, inner, fresh)
        return type(f)(var, body)
    raise TypeError(f"not a formula: {f!r}")


def rename_bound(f, prefix="q"):
    """Alpha-rename every bound variable to prefix0, prefix1, ... in order.

    Generated names skip anything already occurring in the formula, so free
    variables cannot be captured.
    """
    used = set()
    _collect_names(f, used)
    raw = itertools.count()

    def next_name(upper):
        while True:
            name = f"{prefix}{next(raw)}"
            if upper:
                name = name.upper()
            if name not in used:
                used.add(name)
                return name

    def walk(g, env):
        if isinstance(g, Label):
            return Label(g.letter, env.get(g.var, g.var))
        if isinstance(g, _BINARY_ATOMS):
            return type(g)(env.get(g.left, g.left), env.get(g.right, g.right))
        if isinstance(g, InSet):
            return InSet(env.get(g.var, g.var), env.get(g.set_var, g.set_var))
        if isinstance(g, Not):
            return Not(walk(g.body, env))
        if isinstance(g, (And, Or)):
            return type(g)(tuple(walk(p, env) for p in g.parts))
        if isinstance(g, (Exists, Forall, ExistsSet, ForallSet)):
            old = g.var if isinstance(g, (Exists, Forall)) else g.set_var
            new = next_name(isinstance(g, (ExistsSet, ForallSet)))
            inner = dict(env)
            inner[old] = new
            return type(g)(new, walk(g.body, inner))
        raise TypeError(f"not a formula: {g!r}")

    return walk(f, {})


def componentwise_eq(left_vars, right_vars):
    return And(tuple(Eq(u, v) for u, v in zip(left_vars, right_vars)))


def substitute(f, relation_map, k1, var_expansion=None, universe_guard=None):
    """Replace each atom of f by a defining formula over a k1-expanded vocabulary.

    Every first-order variable v of f becomes a k1-tuple of variables
    (default names ``v_1 .. v_k1``); each atom is replaced by the template
    supplied in `relation_map`, instantiated at the expanded variables.

    `relation_map` keys: ``("label", letter)`` with template free variables
    x1..xk1, and ``"less"`` / ``"succ"`` / ``"block_less"`` with template
    free variables x1..xk1, y1..yk1.  Equality atoms are replaced by
    componentwise equality and need no template.

    If `universe_guard` is given (a template with free variables x1..xk1),
    every quantifier of f is relativized to it.
    """
    require_fo(f, "substitute input")
    if var_expansion is None:
        def var_expansion(v):
            return tuple(f"{v}_{i}" for i in range(1, k1 + 1))
    fresh = _FreshNames(f, *relation_map.values(),
                        *( [universe_guard] if universe_guard is not None else [] ))
    expansion = {}

    def expand(v):
        if v not in expansion:
            expansion[v] = tuple(var_expansion(v))
            if len(expansion[v]) != k1:
                raise SubstitutionError(f"expansion of {v!r} has arity {len(expansion[v])}, want {k1}")
        return expansion[v]

    def instantiate(template, groups):
        names = [f"x{i}" for i in range(1, k1 + 1)]
        if len(groups) == 2:
            names += [f"y{i}" for i in range(1, k1 + 1)]
        actuals = [v for group in groups for v in group]
        if len(actuals) != len(names):
            raise SubstitutionError(
                f"template arity mismatch: {len(names)} formal vs {len(actuals)} actual variables")
        extra = free_vars(template) - set(names)
        if extra:
            raise SubstitutionError(f"template has unexpected free variables {sorted(extra)}")
        return _rename(template, dict(zip(names, actuals)), fresh)

    def lookup(key, description):
        if key not in relation_map:
            raise SubstitutionError(f"no template for {description}")
        return relation_map[key]

    def walk(g):
        if isinstance(g, Label):
            return instantiate(lookup(("label", g.letter), f"label atom ({g.letter} _)"),
                               [expand(g.var)])
        if isinstance(g, Less):
            return instantiate(lookup("less", "order atom"), [expand(g.left), expand(g.right)])
        if isinstance(g, Succ):
            return instantiate(lookup("succ", "successor atom"), [expand(g.left), expand(g.right)])
        if isinstance(g, BlockLess):
            return instantiate(lookup("block_less", "block-order atom"),
                               [expand(g.left), expand(g.right)])
        if isinstance(g, Eq):
            return componentwise_eq(expand(g.left), expand(g.right))
        if isinstance(g, Not):
            return Not(walk(g.body))
        if isinstance(g, (And, Or)):
            return type(g)(tuple(walk(p) for p in g.parts))
        if isinstance(g, (Exists, Forall)):
            block = expand(g.var)
            body = walk(g.body)
            if universe_guard is not None:
                guard = instantiate(universe_guard, [block])
                body = And((guard, body)) if isinstance(g, Exists) else Or((Not(guard), body))
            for v in reversed(block):
                body = Exists(v, body) if isinstance(g, Exists) else Forall(v, body)
            return body
        raise TypeError(f"not an FO formula node: {g!r}")

    return walk(f)
