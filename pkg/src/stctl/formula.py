"""STCTL formulas: AST, concrete-syntax parser, printer, desugaring and
fragment classification.

State formulas and path formulas are separate node families.  The core
constructors are the only ones produced by :func:`parse_formula`; the sugar
nodes (``Or``, ``ExEventually``, ...) are produced only with ``sugar=True``
and removed by :func:`desugar`.
"""
from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from typing import Iterator, Union

INF = math.inf


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: {message}" if line else message)


@dataclass(frozen=True)
class Interval:
    lo: int = 0
    hi: float = INF
    lo_closed: bool = True
    hi_closed: bool = False

    def __post_init__(self):
        if self.lo < 0 or self.hi < 0:
            raise ValueError("negative interval bound")
        if self.hi == INF and self.hi_closed:
            raise ValueError("infinite upper bound cannot be closed")
        if self.hi < self.lo or (self.hi == self.lo and not (self.lo_closed and self.hi_closed)):
            raise ValueError(f"empty interval {self}")

    @property
    def trivial(self) -> bool:
        """True for ``[0, inf)``, the interval of the untimed operators."""
        return self.lo == 0 and self.lo_closed and self.hi == INF

    @property
    def bounded(self) -> bool:
        return self.hi != INF

    def contains(self, t) -> bool:
        if t < self.lo or (t == self.lo and not self.lo_closed):
            return False
        if t > self.hi or (t == self.hi and not self.hi_closed):
            return False
        return True

    def __str__(self):
        hi = "inf" if self.hi == INF else str(int(self.hi))
        return f"{'[' if self.lo_closed else '('}{self.lo},{hi}{']' if self.hi_closed else ')'}"


TRIVIAL = Interval()


# -- state formulas ---------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Prop:
    name: str


@dataclass(frozen=True)
class Not:
    arg: "StateFormula"


@dataclass(frozen=True)
class And:
    left: "StateFormula"
    right: "StateFormula"


@dataclass(frozen=True)
class Coalition:
    agents: frozenset
    path: "PathFormula"


@dataclass(frozen=True)
class Or:
    left: "StateFormula"
    right: "StateFormula"


@dataclass(frozen=True)
class Implies:
    left: "StateFormula"
    right: "StateFormula"


# -- path formulas ----------------------------------------------------------

@dataclass(frozen=True)
class Lift:
    state: "StateFormula"


@dataclass(frozen=True)
class PNot:
    arg: "PathFormula"


@dataclass(frozen=True)
class PAnd:
    left: "PathFormula"
    right: "PathFormula"


@dataclass(frozen=True)
class AllNext:
    arg: "PathFormula"


@dataclass(frozen=True)
class AllUntil:
    left: "PathFormula"
    interval: Interval
    right: "PathFormula"


@dataclass(frozen=True)
class ExUntil:
    left: "PathFormula"
    interval: Interval
    right: "PathFormula"


@dataclass(frozen=True)
class AllRelease:
    left: "PathFormula"
    interval: Interval
    right: "PathFormula"


@dataclass(frozen=True)
class ExRelease:
    left: "PathFormula"
    interval: Interval
    right: "PathFormula"


@dataclass(frozen=True)
class POr:
    left: "PathFormula"
    right: "PathFormula"


@dataclass(frozen=True)
class PImplies:
    left: "PathFormula"
    right: "PathFormula"


@dataclass(frozen=True)
class ExNext:
    arg: "PathFormula"


@dataclass(frozen=True)
class AllEventually:
    interval: Interval
    arg: "PathFormula"


@dataclass(frozen=True)
class ExEventually:
    interval: Interval
    arg: "PathFormula"


@dataclass(frozen=True)
class AllGlobally:
    interval: Interval
    arg: "PathFormula"


@dataclass(frozen=True)
class ExGlobally:
    interval: Interval
    arg: "PathFormula"


StateFormula = Union[Const, Prop, Not, And, Coalition, Or, Implies]
PathFormula = Union[Lift, PNot, PAnd, AllNext, AllUntil, ExUntil, AllRelease, ExRelease,
                    POr, PImplies, ExNext, AllEventually, ExEventually, AllGlobally, ExGlobally]

STATE_TYPES = (Const, Prop, Not, And, Coalition, Or, Implies)
PATH_TYPES = (Lift, PNot, PAnd, AllNext, AllUntil, ExUntil, AllRelease, ExRelease,
              POr, PImplies, ExNext, AllEventually, ExEventually, AllGlobally, ExGlobally)
TEMPORAL_BINARY = (AllUntil, ExUntil, AllRelease, ExRelease)
TEMPORAL_SUGAR = (ExNext, AllEventually, ExEventually, AllGlobally, ExGlobally)
SUGAR_TYPES = (Or, Implies, POr, PImplies) + TEMPORAL_SUGAR

TRUE = Const(True)
FALSE = Const(False)


class Fragment(enum.Enum):
    CTL = "CTL"
    TCTL = "TCTL"
    ATL = "ATL"
    TATL = "TATL"
    SCTL = "SCTL"
    STCTL = "STCTL"


# -- lexer ------------------------------------------------------------------

KEYWORDS = {"A", "E", "X", "F", "G", "U", "R", "true", "false", "inf"}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<op><<|>>|->|[!&|()\[\],\-])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind != "ws":
            if kind == "ident" and value in KEYWORDS:
                kind = value
            elif kind == "op":
                kind = value
            tokens.append(Token(kind, value, line, col))
        for ch in value:
            if ch == "\n":
                line, col = line + 1, 1
            else:
                col += 1
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


# -- parser -----------------------------------------------------------------

def _is_state(node) -> bool:
    return isinstance(node, STATE_TYPES)


def _lift(node):
    return Lift(node) if _is_state(node) else node


class _Parser:
    """Recursive descent over a single expression grammar; state or path
    nodes are chosen while building, so pure-state subterms stay state
    formulas and get lifted only where a path formula is required."""

    def __init__(self, text: str, sugar: bool):
        self.tokens = tokenize(text)
        self.i = 0
        self.sugar = sugar

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        raise FormulaSyntaxError(message, tok.line, tok.column)

    def next(self) -> Token:
        tok = self.tok
        self.i += 1
        return tok

    def expect(self, kind: str) -> Token:
        if self.tok.kind != kind:
            found = self.tok.text or "end of input"
            self.error(f"expected {kind!r}, found {found!r}")
        return self.next()

    # builders
    def mk_not(self, a):
        return Not(a) if _is_state(a) else PNot(a)

    def mk_and(self, a, b):
        if _is_state(a) and _is_state(b):
            return And(a, b)
        return PAnd(_lift(a), _lift(b))

    def mk_or(self, a, b):
        if _is_state(a) and _is_state(b):
            return Or(a, b) if self.sugar else Not(And(Not(a), Not(b)))
        a, b = _lift(a), _lift(b)
        return POr(a, b) if self.sugar else PNot(PAnd(PNot(a), PNot(b)))

    def mk_implies(self, a, b):
        if _is_state(a) and _is_state(b):
            return Implies(a, b) if self.sugar else Not(And(a, Not(b)))
        a, b = _lift(a), _lift(b)
        return PImplies(a, b) if self.sugar else PNot(PAnd(a, PNot(b)))

    def parse(self):
        node = self.expr()
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.text!r}")
        if _is_state(node):
            return node
        return Coalition(frozenset(), node)

    def expr(self):
        left = self.disj()
        if self.tok.kind == "->":
            self.next()
            return self.mk_implies(left, self.expr())
        return left

    def disj(self):
        node = self.conj()
        while self.tok.kind == "|":
            self.next()
            node = self.mk_or(node, self.conj())
        return node

    def conj(self):
        node = self.unary()
        while self.tok.kind == "&":
            self.next()
            node = self.mk_and(node, self.unary())
        return node

    def unary(self):
        kind = self.tok.kind
        if kind == "!":
            self.next()
            return self.mk_not(self.unary())
        if kind == "<<":
            return self.coalition()
        if kind in ("A", "E"):
            self.next()
            return self.temporal(universal=(kind == "A"))
        if kind in ("X", "F", "G"):
            # quantifier elided after a coalition, as in ATL
            return self.temporal(universal=True)
        return self.atom()

    def coalition(self):
        self.expect("<<")
        agents = []
        if self.tok.kind != ">>":
            agents.append(self.agent_name())
            while self.tok.kind == ",":
                self.next()
                agents.append(self.agent_name())
        self.expect(">>")
        return Coalition(frozenset(agents), _lift(self.unary()))

    def agent_name(self) -> str:
        tok = self.tok
        if tok.kind in ("ident", "num"):
            self.next()
            return tok.text
        self.error(f"expected agent name, found {tok.text!r}")

    def temporal(self, universal: bool):
        tok = self.tok
        if tok.kind == "X":
            self.next()
            arg = _lift(self.unary())
            if universal:
                return AllNext(arg)
            return ExNext(arg) if self.sugar else PNot(AllNext(PNot(arg)))
        if tok.kind in ("F", "G"):
            self.next()
            iv = self.interval() if self.tok.kind in ("[", "(") and self._looks_like_interval() else TRIVIAL
            arg = _lift(self.unary())
            return self.mk_unary_temporal(tok.kind, universal, iv, arg)
        if tok.kind == "(":
            self.next()
            left = self.expr()
            return self.until_tail(left, universal)
        self.error(f"expected X, F, G or '(' after path quantifier, found {tok.text!r}")

    def until_tail(self, left, universal: bool):
        op = self.tok
        if op.kind not in ("U", "R"):
            self.error(f"expected U or R, found {op.text!r}")
        self.next()
        iv = self.interval() if self.tok.kind in ("[", "(") and self._looks_like_interval() else TRIVIAL
        right = self.expr()
        self.expect(")")
        left, right = _lift(left), _lift(right)
        if op.kind == "U":
            return (AllUntil if universal else ExUntil)(left, iv, right)
        return (AllRelease if universal else ExRelease)(left, iv, right)

    def mk_unary_temporal(self, op: str, universal: bool, iv: Interval, arg):
        if self.sugar:
            cls = {("F", True): AllEventually, ("F", False): ExEventually,
                   ("G", True): AllGlobally, ("G", False): ExGlobally}[op, universal]
            return cls(iv, arg)
        if op == "F":
            return (AllUntil if universal else ExUntil)(Lift(TRUE), iv, arg)
        return (AllRelease if universal else ExRelease)(Lift(FALSE), iv, arg)

    def _looks_like_interval(self) -> bool:
        # "[" always opens an interval; "(" only when followed by NUM ","
        if self.tok.kind == "[":
            return True
        t1, t2 = self.tokens[self.i + 1], self.tokens[self.i + 2]
        return t1.kind in ("num", "-") and (t2.kind == "," or t1.kind == "-")

    def interval(self) -> Interval:
        open_tok = self.next()
        lo = self.bound()
        self.expect(",")
        if self.tok.kind == "inf":
            self.next()
            hi = INF
        else:
            hi = self.bound()
        close = self.tok
        if close.kind not in ("]", ")"):
            self.error(f"expected ']' or ')', found {close.text!r}")
        self.next()
        try:
            return Interval(lo, hi, open_tok.kind == "[", close.kind == "]")
        except ValueError as exc:
            self.error(str(exc), open_tok)

    def bound(self) -> int:
        tok = self.tok
        if tok.kind == "-":
            self.error("negative interval bound")
        if tok.kind != "num":
            self.error(f"expected a natural number, found {tok.text!r}")
        if "." in tok.text:
            self.error(f"interval bound must be a natural number, found {tok.text}")
        self.next()
        return int(tok.text)

    def atom(self):
        tok = self.tok
        if tok.kind == "true":
            self.next()
            return TRUE
        if tok.kind == "false":
            self.next()
            return FALSE
        if tok.kind == "ident":
            self.next()
            return Prop(tok.text)
        if tok.kind == "(":
            self.next()
            inner = self.expr()
            if self.tok.kind in ("U", "R"):
                # bare (a U b) after a coalition: universal quantifier elided
                return self.until_tail(inner, universal=True)
            self.expect(")")
            return inner
        self.error(f"unexpected {tok.text or 'end of input'!r}")


def parse_formula(text: str, sugar: bool = False) -> StateFormula:
    """Parse concrete STCTL syntax.

    Top-level path formulas are wrapped in the empty coalition.  With
    ``sugar=False`` (the default) derived operators are desugared on the fly.
    """
    return _Parser(text, sugar).parse()


# -- printer ----------------------------------------------------------------

def _iv(iv: Interval) -> str:
    return "" if iv.trivial else str(iv)


def to_text(f) -> str:
    """Fully parenthesised concrete syntax; ``parse_formula(to_text(f)) == f``
    for core formulas in canonical form."""
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Prop):
        return f.name
    if isinstance(f, (Not, PNot)):
        return f"!{to_text(f.arg)}"
    if isinstance(f, (And, PAnd)):
        return f"({to_text(f.left)} & {to_text(f.right)})"
    if isinstance(f, (Or, POr)):
        return f"({to_text(f.left)} | {to_text(f.right)})"
    if isinstance(f, (Implies, PImplies)):
        return f"({to_text(f.left)} -> {to_text(f.right)})"
    if isinstance(f, Coalition):
        return f"<<{','.join(sorted(f.agents))}>>{to_text(f.path)}"
    if isinstance(f, Lift):
        return to_text(f.state)
    if isinstance(f, AllNext):
        return f"A X {to_text(f.arg)}"
    if isinstance(f, ExNext):
        return f"E X {to_text(f.arg)}"
    if isinstance(f, TEMPORAL_BINARY):
        q = "A" if isinstance(f, (AllUntil, AllRelease)) else "E"
        op = "U" if isinstance(f, (AllUntil, ExUntil)) else "R"
        return f"{q}({to_text(f.left)} {op}{_iv(f.interval)} {to_text(f.right)})"
    if isinstance(f, (AllEventually, ExEventually, AllGlobally, ExGlobally)):
        q = "A" if isinstance(f, (AllEventually, AllGlobally)) else "E"
        op = "F" if isinstance(f, (AllEventually, ExEventually)) else "G"
        return f"{q} {op}{_iv(f.interval)} {to_text(f.arg)}"
    raise TypeError(f"not a formula: {f!r}")


# -- traversal helpers ------------------------------------------------------

def children(f) -> tuple:
    if isinstance(f, (Const, Prop)):
        return ()
    if isinstance(f, (Not, PNot, AllNext, ExNext)):
        return (f.arg,)
    if isinstance(f, (And, Or, Implies, PAnd, POr, PImplies) + TEMPORAL_BINARY):
        return (f.left, f.right)
    if isinstance(f, Coalition):
        return (f.path,)
    if isinstance(f, Lift):
        return (f.state,)
    if isinstance(f, (AllEventually, ExEventually, AllGlobally, ExGlobally)):
        return (f.arg,)
    raise TypeError(f"not a formula: {f!r}")


def walk(f) -> Iterator:
    yield f
    for c in children(f):
        yield from walk(c)


def intervals(f) -> Iterator[Interval]:
    for node in walk(f):
        iv = getattr(node, "interval", None)
        if iv is not None:
            yield iv


def propositions(f) -> set[str]:
    return {n.name for n in walk(f) if isinstance(n, Prop)}


def coalitions(f) -> Iterator[Coalition]:
    return (n for n in walk(f) if isinstance(n, Coalition))


def is_timed(f) -> bool:
    return any(not iv.trivial for iv in intervals(f))


def has_next(f) -> bool:
    return any(isinstance(n, (AllNext, ExNext)) for n in walk(f))


def is_temporal(node) -> bool:
    return isinstance(node, (AllNext,) + TEMPORAL_BINARY + TEMPORAL_SUGAR)


def is_propositional(f) -> bool:
    """No coalitions and no temporal operators below ``f``."""
    return all(isinstance(n, (Const, Prop, Not, And, Or, Implies)) for n in walk(f))


# -- desugaring -------------------------------------------------------------

def desugar(f):
    """Rewrite sugar nodes into the core constructors.  Idempotent."""
    if isinstance(f, (Const, Prop)):
        return f
    if isinstance(f, Not):
        return Not(desugar(f.arg))
    if isinstance(f, And):
        return And(desugar(f.left), desugar(f.right))
    if isinstance(f, Or):
        return Not(And(Not(desugar(f.left)), Not(desugar(f.right))))
    if isinstance(f, Implies):
        return Not(And(desugar(f.left), Not(desugar(f.right))))
    if isinstance(f, Coalition):
        return Coalition(f.agents, desugar(f.path))
    if isinstance(f, Lift):
        return Lift(desugar(f.state))
    if isinstance(f, PNot):
        return PNot(desugar(f.arg))
    if isinstance(f, PAnd):
        return PAnd(desugar(f.left), desugar(f.right))
    if isinstance(f, POr):
        return PNot(PAnd(PNot(desugar(f.left)), PNot(desugar(f.right))))
    if isinstance(f, PImplies):
        return PNot(PAnd(desugar(f.left), PNot(desugar(f.right))))
    if isinstance(f, AllNext):
        return AllNext(desugar(f.arg))
    if isinstance(f, ExNext):
        return PNot(AllNext(PNot(desugar(f.arg))))
    if isinstance(f, TEMPORAL_BINARY):
        return type(f)(desugar(f.left), f.interval, desugar(f.right))
    if isinstance(f, AllEventually):
        return AllUntil(Lift(TRUE), f.interval, desugar(f.arg))
    if isinstance(f, ExEventually):
        return ExUntil(Lift(TRUE), f.interval, desugar(f.arg))
    if isinstance(f, AllGlobally):
        return AllRelease(Lift(FALSE), f.interval, desugar(f.arg))
    if isinstance(f, ExGlobally):
        return ExRelease(Lift(FALSE), f.interval, desugar(f.arg))
    raise TypeError(f"not a formula: {f!r}")


def is_core(f) -> bool:
    return not any(isinstance(n, SUGAR_TYPES) for n in walk(f))


# -- fragments --------------------------------------------------------------

def _atl_shaped(f) -> bool:
    """Every coalition is followed by exactly one universal temporal operator
    whose operands are (lifted) state formulas."""
    for node in walk(f):
        if not isinstance(node, Coalition):
            continue
        p = node.path
        if isinstance(p, AllNext):
            operands = (p.arg,)
        elif isinstance(p, (AllUntil, AllRelease)):
            operands = (p.left, p.right)
        else:
            return False
        if not all(isinstance(o, Lift) for o in operands):
            return False
    return True


def _strategic(f) -> bool:
    return any(c.agents for c in coalitions(f))


def classify_fragment(f: StateFormula) -> Fragment:
    """Least fragment of the lattice CTL < {TCTL, ATL, SCTL} < {TATL, STCTL}
    that admits ``f``.  Empty coalitions count as plain path quantification."""
    timed = is_timed(f)
    if not _strategic(f):
        return Fragment.TCTL if timed else Fragment.CTL
    if _atl_shaped(f):
        return Fragment.TATL if timed else Fragment.ATL
    return Fragment.STCTL if timed else Fragment.SCTL


def admits(fragment: Fragment, f: StateFormula) -> bool:
    """Syntactic membership test for a fragment."""
    timed, strategic, atl = is_timed(f), _strategic(f), _atl_shaped(f)
    if fragment is Fragment.CTL:
        return not timed and not strategic
    if fragment is Fragment.TCTL:
        return not strategic
    if fragment is Fragment.ATL:
        return not timed and atl
    if fragment is Fragment.SCTL:
        return not timed
    if fragment is Fragment.TATL:
        return atl
    return True


def max_constant(f) -> int:
    """Largest finite interval endpoint in ``f`` (0 if none)."""
    best = 0
    for iv in intervals(f):
        best = max(best, iv.lo if iv.hi == INF else int(iv.hi))
    return best


def agents_of(f) -> set[str]:
    out: set[str] = set()
    for c in coalitions(f):
        out |= c.agents
    return out
