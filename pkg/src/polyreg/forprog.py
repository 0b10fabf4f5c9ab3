"""The for-program DSL: parser, interpreter, and the formula compiler.

Programs iterate position variables over the input word (`for x up { .. }`
or `down`), branch on labels and position comparisons, and either emit
letters (`output 'a'`, `output_at x`), emit position tuples
(`output (x1,x2)`), or return a Boolean variable (`return P`).  Boolean
variables are declared with `bool P`, start false, and are reinitialized
to false each time their declaration is re-executed, i.e. on every
iteration of the loop they are declared in.

A program is first-order definable when the only assignment form used is
`P := true`; `check_first_order` decides this syntactically.

`compile_formula_to_program` implements the textbook translation from FO
formulas over words to first-order programs: one loop per quantifier and
one set-once Boolean per quantifier block, with universal quantifiers
rewritten through double negation so that the set-once discipline is kept.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import logic
from .errors import (
    FlavorError,
    ModeError,
    PolyregError,
    ProgramSyntaxError,
    RepeatedTupleError,
    ScopeError,
)

# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class BoolExpr:
    pass


@dataclass(frozen=True)
class CTrue(BoolExpr):
    pass


@dataclass(frozen=True)
class CFalse(BoolExpr):
    pass


@dataclass(frozen=True)
class CLabel(BoolExpr):
    letter: str
    var: str


@dataclass(frozen=True)
class CLess(BoolExpr):
    left: str
    right: str


@dataclass(frozen=True)
class CEq(BoolExpr):
    left: str
    right: str


@dataclass(frozen=True)
class CVar(BoolExpr):
    name: str


@dataclass(frozen=True)
class CNot(BoolExpr):
    body: BoolExpr


@dataclass(frozen=True)
class CAnd(BoolExpr):
    parts: tuple


@dataclass(frozen=True)
class COr(BoolExpr):
    parts: tuple


@dataclass(frozen=True)
class Statement:
    pass


@dataclass(frozen=True)
class ForLoop(Statement):
    var: str
    direction: str  # "up" | "down"
    body: tuple


@dataclass(frozen=True)
class BoolDecl(Statement):
    names: tuple


@dataclass(frozen=True)
class Assign(Statement):
    name: str
    expr: BoolExpr


@dataclass(frozen=True)
class If(Statement):
    cond: BoolExpr
    then: tuple
    orelse: tuple = ()


@dataclass(frozen=True)
class OutputLetter(Statement):
    letter: str


@dataclass(frozen=True)
class OutputAt(Statement):
    var: str


@dataclass(frozen=True)
class OutputTuple(Statement):
    vars: tuple


@dataclass(frozen=True)
class Return(Statement):
    name: str


@dataclass(frozen=True)
class ForProgram:
    body: tuple
    mode: str            # "letter" | "tuple" | "bool"
    free_vars: tuple = ()  # read-only pre-bound position variables
    name: str = ""


# ---------------------------------------------------------------------------
# Parser

_KEYWORDS = {"for", "up", "down", "if", "else", "bool", "output", "output_at",
             "output_tuple", "return", "true", "false", "not", "and", "or", "free"}
_SYMBOLS = ["<=", ">=", "!=", ":=", "<", ">", "=", "{", "}", "(", ")", ","]


def _tokenize(text):
    tokens = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "'":
            if i + 2 >= n or text[i + 2] != "'":
                raise ProgramSyntaxError("unterminated letter literal", line, col)
            tokens.append(("letter", text[i + 1], line, col))
            i += 3
            col += 3
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(("sym", sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            if ch.isalnum() or ch == "_":
                j = i
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                word = text[i:j]
                kind = "kw" if word in _KEYWORDS else "name"
                tokens.append((kind, word, line, col))
                col += j - i
                i = j
            else:
                raise ProgramSyntaxError(f"unexpected character {ch!r}", line, col)
    tokens.append(("eof", None, line, col))
    return tokens


class _Scope:
    def __init__(self, parent=None, free_vars=()):
        self.parent = parent
        self.pos_vars = set(free_vars)
        self.bool_vars = set()

    def has_pos(self, v):
        return v in self.pos_vars or (self.parent is not None and self.parent.has_pos(v))

    def has_bool(self, v):
        return v in self.bool_vars or (self.parent is not None and self.parent.has_bool(v))


class _ProgParser:
    def __init__(self, tokens):
        self.toks = tokens
        self.i = 0
        self.outputs = set()  # kinds of output statements seen

    def peek(self):
        return self.toks[self.i]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def err(self, message, tok=None):
        tok = tok or self.peek()
        raise ProgramSyntaxError(message, tok[2], tok[3])

    def expect_sym(self, sym):
        kind, val, line, col = self.next()
        if kind != "sym" or val != sym:
            raise ProgramSyntaxError(f"expected {sym!r}, got {val!r}", line, col)

    def expect_name(self):
        kind, val, line, col = self.next()
        if kind != "name":
            raise ProgramSyntaxError(f"expected a name, got {val!r}", line, col)
        return val

    def parse_program(self):
        free = ()
        if self.peek()[:2] == ("kw", "free"):
            self.next()
            names = [self.expect_name()]
            while self.peek()[:2] == ("sym", ","):
                self.next()
                names.append(self.expect_name())
            free = tuple(names)
        scope = _Scope(free_vars=free)
        body = self.statements(scope, top=True)
        kind, val, line, col = self.peek()
        if kind != "eof":
            raise ProgramSyntaxError(f"unexpected {val!r}", line, col)
        if "letter" in self.outputs and "tuple" in self.outputs:
            raise ProgramSyntaxError("program mixes letter and tuple output", 1, 1)
        if "return" in self.outputs and (self.outputs - {"return"}):
            raise ProgramSyntaxError("program mixes output and return", 1, 1)
        if "tuple" in self.outputs:
            mode = "tuple"
        elif "return" in self.outputs:
            mode = "bool"
        else:
            mode = "letter"
        return ForProgram(body=body, mode=mode, free_vars=free)

    def statements(self, scope, top=False):
        out = []
        while True:
            kind, val, line, col = self.peek()
            if kind == "eof" or (kind == "sym" and val == "}"):
                if top and kind == "sym":
                    self.err("unmatched '}'")
                return tuple(out)
            out.append(self.statement(scope))

    def block(self, scope):
        self.expect_sym("{")
        inner = _Scope(parent=scope)
        body = self.statements(inner)
        self.expect_sym("}")
        return body

    def statement(self, scope):
        kind, val, line, col = self.peek()
        if kind == "kw" and val == "for":
            self.next()
            var = self.expect_name()
            dkind, dval, dline, dcol = self.next()
            if dkind != "kw" or dval not in ("up", "down"):
                raise ProgramSyntaxError("expected 'up' or 'down'", dline, dcol)
            inner = _Scope(parent=scope)
            inner.pos_vars.add(var)
            self.expect_sym("{")
            body = self.statements(inner)
            self.expect_sym("}")
            return ForLoop(var, dval, body)
        if kind == "kw" and val == "bool":
            self.next()
            names = [self.expect_name()]
            while self.peek()[:2] == ("sym", ","):
                self.next()
                names.append(self.expect_name())
            scope.bool_vars.update(names)
            return BoolDecl(tuple(names))
        if kind == "kw" and val == "if":
            self.next()
            cond = self.bexpr(scope)
            then = self.block(scope)
            orelse = ()
            if self.peek()[:2] == ("kw", "else"):
                self.next()
                orelse = self.block(scope)
            return If(cond, then, orelse)
        if kind == "kw" and val == "output_at":
            self.next()
            var = self.expect_name()
            if not scope.has_pos(var):
                raise ProgramSyntaxError(f"position variable {var!r} not in scope", line, col)
            self.outputs.add("letter")
            return OutputAt(var)
        if kind == "kw" and val in ("output", "output_tuple"):
            self.next()
            nkind, nval, nline, ncol = self.peek()
            if nkind == "letter":
                if val == "output_tuple":
                    raise ProgramSyntaxError("output_tuple expects a tuple", nline, ncol)
                self.next()
                self.outputs.add("letter")
                return OutputLetter(nval)
            self.expect_sym("(")
            names = [self.expect_name()]
            while self.peek()[:2] == ("sym", ","):
                self.next()
                names.append(self.expect_name())
            self.expect_sym(")")
            for v in names:
                if not scope.has_pos(v):
                    raise ProgramSyntaxError(f"position variable {v!r} not in scope", nline, ncol)
            self.outputs.add("tuple")
            return OutputTuple(tuple(names))
        if kind == "kw" and val == "return":
            self.next()
            var = self.expect_name()
            if not scope.has_bool(var):
                raise ProgramSyntaxError(f"Boolean variable {var!r} not in scope", line, col)
            self.outputs.add("return")
            return Return(var)
        if kind == "name":
            self.next()
            self.expect_sym(":=")
            if not scope.has_bool(val):
                raise ProgramSyntaxError(f"Boolean variable {val!r} not declared", line, col)
            expr = self.bexpr(scope)
            return Assign(val, expr)
        self.err(f"unexpected token {val!r}")

    # boolean expressions: or / and / not / atoms
    def bexpr(self, scope):
        parts = [self.bterm(scope)]
        while self.peek()[:2] == ("kw", "or"):
            self.next()
            parts.append(self.bterm(scope))
        return parts[0] if len(parts) == 1 else COr(tuple(parts))

    def bterm(self, scope):
        parts = [self.bfact(scope)]
        while self.peek()[:2] == ("kw", "and"):
            self.next()
            parts.append(self.bfact(scope))
        return parts[0] if len(parts) == 1 else CAnd(tuple(parts))

    def bfact(self, scope):
        kind, val, line, col = self.peek()
        if kind == "kw" and val == "not":
            self.next()
            return CNot(self.bfact(scope))
        if kind == "sym" and val == "(":
            self.next()
            inner = self.bexpr(scope)
            self.expect_sym(")")
            return inner
        if kind == "kw" and val == "true":
            self.next()
            return CTrue()
        if kind == "kw" and val == "false":
            self.next()
            return CFalse()
        if kind == "name":
            self.next()
            nkind, nval, _, _ = self.peek()
            if nkind == "sym" and nval == "(":
                if len(val) != 1:
                    raise ProgramSyntaxError(
                        f"label test needs a single-letter name, got {val!r}", line, col)
                self.next()
                var = self.expect_name()
                self.expect_sym(")")
                if not scope.has_pos(var):
                    raise ProgramSyntaxError(f"position variable {var!r} not in scope", line, col)
                return CLabel(val, var)
            if nkind == "sym" and nval in ("<", "<=", "=", ">=", ">", "!="):
                self.next()
                other = self.expect_name()
                for v in (val, other):
                    if not scope.has_pos(v):
                        raise ProgramSyntaxError(f"position variable {v!r} not in scope", line, col)
                return _comparison(nval, val, other)
            if not scope.has_bool(val):
                raise ProgramSyntaxError(f"Boolean variable {val!r} not in scope", line, col)
            return CVar(val)
        self.err(f"unexpected token {val!r} in condition")


def _comparison(op, u, v):
    if op == "<":
        return CLess(u, v)
    if op == "=":
        return CEq(u, v)
    if op == "<=":
        return COr((CLess(u, v), CEq(u, v)))
    if op == ">=":
        return COr((CLess(v, u), CEq(u, v)))
    if op == ">":
        return CLess(v, u)
    if op == "!=":
        return CNot(CEq(u, v))
    raise AssertionError(op)


def parse_program(text, name=""):
    """Parse for-program source (see the grammar in the package docs)."""
    prog = _ProgParser(_tokenize(text)).parse_program()
    return ForProgram(prog.body, prog.mode, prog.free_vars, name)


def to_source(prog):
    """Pretty-print a program back to concrete syntax."""
    lines = []
    if prog.free_vars:
        lines.append("free " + ", ".join(prog.free_vars))

    def emit(stmts, depth):
        pad = "  " * depth
        for st in stmts:
            if isinstance(st, ForLoop):
                lines.append(f"{pad}for {st.var} {st.direction} {{")
                emit(st.body, depth + 1)
                lines.append(f"{pad}}}")
            elif isinstance(st, BoolDecl):
                lines.append(f"{pad}bool " + ", ".join(st.names))
            elif isinstance(st, Assign):
                lines.append(f"{pad}{st.name} := {expr_source(st.expr)}")
            elif isinstance(st, If):
                lines.append(f"{pad}if {expr_source(st.cond)} {{")
                emit(st.then, depth + 1)
                if st.orelse:
                    lines.append(f"{pad}}} else {{")
                    emit(st.orelse, depth + 1)
                lines.append(f"{pad}}}")
            elif isinstance(st, OutputLetter):
                lines.append(f"{pad}output '{st.letter}'")
            elif isinstance(st, OutputAt):
                lines.append(f"{pad}output_at {st.var}")
            elif isinstance(st, OutputTuple):
                lines.append(f"{pad}output (" + ", ".join(st.vars) + ")")
            elif isinstance(st, Return):
                lines.append(f"{pad}return {st.name}")
            else:
                raise TypeError(f"unknown statement {st!r}")

    emit(prog.body, 0)
    return "\n".join(lines) + "\n"


def expr_source(e):
    if isinstance(e, CTrue):
        return "true"
    if isinstance(e, CFalse):
        return "false"
    if isinstance(e, CLabel):
        return f"{e.letter}({e.var})"
    if isinstance(e, CLess):
        return f"{e.left} < {e.right}"
    if isinstance(e, CEq):
        return f"{e.left} = {e.right}"
    if isinstance(e, CVar):
        return e.name
    if isinstance(e, CNot):
        return f"not {expr_source(e.body)}"
    if isinstance(e, CAnd):
        return "(" + " and ".join(expr_source(p) for p in e.parts) + ")"
    if isinstance(e, COr):
        return "(" + " or ".join(expr_source(p) for p in e.parts) + ")"
    raise TypeError(f"unknown expression {e!r}")


# ---------------------------------------------------------------------------
# Interpreter


class _Halt(Exception):
    def __init__(self, value):
        self.value = value


class _Run:
    def __init__(self, prog, word, bindings=None, trace=None):
        self.prog = prog
        self.word = word
        self.n = len(word)
        self.pos = dict(bindings or {})
        self.frames = []
        self.letters = []
        self.tuples = []
        self.seen_tuples = set()
        self.trace = trace

    def log(self, text):
        if self.trace is not None:
            self.trace.append(text)

    def run(self):
        missing = set(self.prog.free_vars) - set(self.pos)
        if missing:
            raise ScopeError(f"missing bindings for free variables {sorted(missing)}")
        for v, p in self.pos.items():
            if not 1 <= p <= self.n:
                raise ScopeError(f"binding {v}={p} outside word of length {self.n}")
        try:
            self.block(self.prog.body)
        except _Halt as halt:
            return halt.value
        if self.prog.mode == "bool":
            raise ModeError("bool-mode program finished without executing return")
        return None

    def block(self, stmts):
        self.frames.append({})
        try:
            for st in stmts:
                self.stmt(st)
        finally:
            self.frames.pop()

    def read_bool(self, name):
        for frame in reversed(self.frames):
            if name in frame:
                return frame[name]
        raise ScopeError(f"Boolean variable {name!r} not in scope")

    def write_bool(self, name, value):
        for frame in reversed(self.frames):
            if name in frame:
                frame[name] = value
                return
        raise ScopeError(f"Boolean variable {name!r} not declared")

    def stmt(self, st):
        if isinstance(st, ForLoop):
            rng = range(1, self.n + 1) if st.direction == "up" else range(self.n, 0, -1)
            saved = self.pos.get(st.var)
            had = st.var in self.pos
            for p in rng:
                self.pos[st.var] = p
                self.log(f"for {st.var}={p}")
                self.block(st.body)
            if had:
                self.pos[st.var] = saved
            else:
                self.pos.pop(st.var, None)
        elif isinstance(st, BoolDecl):
            for name in st.names:
                self.frames[-1][name] = False
            self.log("bool " + ", ".join(st.names))
        elif isinstance(st, Assign):
            value = self.expr(st.expr)
            self.write_bool(st.name, value)
            self.log(f"{st.name} := {value}")
        elif isinstance(st, If):
            value = self.expr(st.cond)
            self.log(f"if {expr_source(st.cond)} -> {value}")
            self.block(st.then if value else st.orelse)
        elif isinstance(st, OutputLetter):
            self.letters.append(st.letter)
            self.log(f"output '{st.letter}'")
        elif isinstance(st, OutputAt):
            p = self.pos[st.var]
            self.letters.append(self.word[p - 1])
            self.log(f"output_at {st.var} -> '{self.word[p - 1]}'")
        elif isinstance(st, OutputTuple):
            tup = tuple(self.pos[v] for v in st.vars)
            if tup in self.seen_tuples:
                raise RepeatedTupleError(f"tuple {tup} emitted twice")
            self.seen_tuples.add(tup)
            self.tuples.append(tup)
            self.log(f"output {tup}")
        elif isinstance(st, Return):
            value = self.read_bool(st.name)
            self.log(f"return {st.name} -> {value}")
            raise _Halt(value)
        else:
            raise TypeError(f"unknown statement {st!r}")

    def expr(self, e):
        if isinstance(e, CTrue):
            return True
        if isinstance(e, CFalse):
            return False
        if isinstance(e, CLabel):
            return self.word[self.pos[e.var] - 1] == e.letter
        if isinstance(e, CLess):
            return self.pos[e.left] < self.pos[e.right]
        if isinstance(e, CEq):
            return self.pos[e.left] == self.pos[e.right]
        if isinstance(e, CVar):
            return self.read_bool(e.name)
        if isinstance(e, CNot):
            return not self.expr(e.body)
        if isinstance(e, CAnd):
            return all(self.expr(p) for p in e.parts)
        if isinstance(e, COr):
            return any(self.expr(p) for p in e.parts)
        raise TypeError(f"unknown expression {e!r}")


def run_program(prog, word, trace=None):
    """Run a letter-mode program; returns the output word."""
    if prog.mode != "letter":
        raise ModeError(f"run_program needs a letter-mode program, got {prog.mode}")
    runner = _Run(prog, word, trace=trace)
    runner.run()
    return "".join(runner.letters)


def run_enumerator(prog, word, trace=None):
    """Run a tuple-mode program; returns the emitted tuples in order."""
    if prog.mode != "tuple":
        raise ModeError(f"run_enumerator needs a tuple-mode program, got {prog.mode}")
    runner = _Run(prog, word, trace=trace)
    runner.run()
    return runner.tuples


def run_boolean(prog, word, bindings, trace=None):
    """Run a bool-mode program with pre-bound positions; returns its verdict."""
    if prog.mode != "bool":
        raise ModeError(f"run_boolean needs a bool-mode program, got {prog.mode}")
    runner = _Run(prog, word, bindings=bindings, trace=trace)
    return runner.run()


def check_first_order(prog):
    """True iff every assignment in the program is the set-once `P := true`."""

    def ok(stmts):
        for st in stmts:
            if isinstance(st, Assign) and not isinstance(st.expr, CTrue):
                return False
            if isinstance(st, ForLoop) and not ok(st.body):
                return False
            if isinstance(st, If) and not (ok(st.then) and ok(st.orelse)):
                return False
        return True

    return ok(prog.body)


# ---------------------------------------------------------------------------
# Compiling FO formulas to first-order programs


def _desugar_succ(f, fresh=None):
    """Replace successor atoms by their order definition."""
    if fresh is None:
        fresh = logic._FreshNames(f)
    if isinstance(f, logic.Succ):
        u, v = f.left, f.right
        z = fresh.fresh("zs")
        between = logic.Exists(z, logic.And((logic.Less(u, z), logic.Less(z, v))))
        return logic.And((logic.Less(u, v), logic.Not(between)))
    if isinstance(f, logic.Not):
        return logic.Not(_desugar_succ(f.body, fresh))
    if isinstance(f, (logic.And, logic.Or)):
        return type(f)(tuple(_desugar_succ(p, fresh) for p in f.parts))
    if isinstance(f, (logic.Exists, logic.Forall)):
        return type(f)(f.var, _desugar_succ(f.body, fresh))
    return f


def _nnf(f, positive=True):
    if isinstance(f, logic.Not):
        return _nnf(f.body, not positive)
    if isinstance(f, logic.And):
        parts = tuple(_nnf(p, positive) for p in f.parts)
        return logic.And(parts) if positive else logic.Or(parts)
    if isinstance(f, logic.Or):
        parts = tuple(_nnf(p, positive) for p in f.parts)
        return logic.Or(parts) if positive else logic.And(parts)
    if isinstance(f, logic.Exists):
        body = _nnf(f.body, positive)
        return logic.Exists(f.var, body) if positive else logic.Forall(f.var, body)
    if isinstance(f, logic.Forall):
        body = _nnf(f.body, positive)
        return logic.Forall(f.var, body) if positive else logic.Exists(f.var, body)
    if isinstance(f, (logic.Label, logic.Less, logic.Eq)):
        return f if positive else logic.Not(f)
    raise PolyregError(f"cannot compile atom {f!r} to a for-program")


def _atom_cond(f):
    positive = True
    if isinstance(f, logic.Not):
        positive, f = False, f.body
    if isinstance(f, logic.Label):
        cond = CLabel(f.letter, f.var)
    elif isinstance(f, logic.Less):
        cond = CLess(f.left, f.right)
    elif isinstance(f, logic.Eq):
        cond = CEq(f.left, f.right)
    else:
        raise PolyregError(f"cannot compile atom {f!r}")
    return cond if positive else CNot(cond)


def compile_formula_to_program(formula, free_var_order=None, name=""):
    """Compile an FO formula over words into a first-order for-program.

    The program takes the formula's free variables as pre-bound positions
    and returns the formula's truth value.  Each quantifier becomes one
    loop with a set-once Boolean; universal quantifiers go through their
    double-negation so that all assignments stay `P := true`.
    """
    logic.require_fo(formula, "compile_formula_to_program input")
    formula = _nnf(logic.rename_bound(_desugar_succ(formula), prefix="z"))
    free = tuple(free_var_order) if free_var_order else tuple(sorted(logic.free_vars(formula)))
    missing = logic.free_vars(formula) - set(free)
    if missing:
        raise PolyregError(f"free variables {sorted(missing)} not covered by the given order")
    fresh = itertools.count()

    def result_var():
        return f"b{next(fresh)}"

    def emit(f):
        """Statements computing f into a fresh set-once Boolean; returns (stmts, var)."""
        if isinstance(f, (logic.Label, logic.Less, logic.Eq, logic.Not)):
            r = result_var()
            return [BoolDecl((r,)), If(_atom_cond(f), (Assign(r, CTrue()),))], r
        if isinstance(f, (logic.And, logic.Or)):
            stmts = []
            names = []
            for p in f.parts:
                sub, v = emit(p)
                stmts.extend(sub)
                names.append(v)
            r = result_var()
            stmts.append(BoolDecl((r,)))
            if isinstance(f, logic.And):
                cond = CAnd(tuple(CVar(v) for v in names)) if names else CTrue()
            else:
                cond = COr(tuple(CVar(v) for v in names)) if names else CFalse()
            stmts.append(If(cond, (Assign(r, CTrue()),)))
            return stmts, r
        if isinstance(f, logic.Exists):
            sub, v = emit(f.body)
            r = result_var()
            loop = ForLoop(f.var, "up", tuple(sub) + (If(CVar(v), (Assign(r, CTrue()),)),))
            return [BoolDecl((r,)), loop], r
        if isinstance(f, logic.Forall):
            # no counterexample exists: E = exists x. not body; R = not E
            sub, v = emit(_nnf(f.body, positive=False))
            e = result_var()
            loop = ForLoop(f.var, "up", tuple(sub) + (If(CVar(v), (Assign(e, CTrue()),)),))
            r = result_var()
            return [BoolDecl((e,)), loop,
                    BoolDecl((r,)), If(CNot(CVar(e)), (Assign(r, CTrue()),))], r
        raise PolyregError(f"cannot compile formula node {f!r}")

    stmts, r = emit(formula)
    body = tuple(stmts) + (Return(r),)
    return ForProgram(body=body, mode="bool", free_vars=free, name=name)
