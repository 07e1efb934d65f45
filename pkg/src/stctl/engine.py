"""Fixpoint labeling over finite structures.

Sets of vertices are plain lists of booleans indexed by vertex.  Path
formulas are evaluated relative to an edge filter (``allowed``, indexed by
model edge; ``None`` keeps everything) so a pruned model is never
materialised.  Existential path quantifiers range over the infinite paths of
the filtered structure: vertices without one (outside the *core*) satisfy no
``E`` formula and every ``A`` formula.

Temporal operators restart the formula clock.  A fixpoint is computed over
all vertices with the interval test read off each vertex, and the value at
``u`` is then taken from ``reset_map[u]``, the copy of ``u`` whose formula
clock (or elapsed-time counter) is zero.
"""
from __future__ import annotations

from .formula import (AllNext, AllRelease, AllUntil, And, Coalition, Const, ExRelease, ExUntil,
                      Lift, Not, PAnd, PNot, Prop, desugar, is_core)
from .graph import FiniteStructure, TimedOperatorError, UntimedGraph
from .composition import GlobalModel


class EngineError(ValueError):
    def __init__(self, rule: str, message: str = ""):
        self.rule = rule
        super().__init__(f"{rule}: {message}" if message else rule)


def _ok(allowed, e) -> bool:
    return e < 0 or allowed is None or allowed[e]


def infinite_core(g: FiniteStructure, allowed=None) -> list:
    """Vertices with an infinite path using only allowed edges."""
    n = g.n
    cnt = [0] * n
    for v, outs in enumerate(g.succ):
        for _, e in outs:
            if _ok(allowed, e):
                cnt[v] += 1
    alive = [c > 0 for c in cnt]
    stack = [v for v in range(n) if not alive[v]]
    pred = g.pred
    while stack:
        w = stack.pop()
        for u, e in pred[w]:
            if alive[u] and _ok(allowed, e):
                cnt[u] -= 1
                if cnt[u] == 0:
                    alive[u] = False
                    stack.append(u)
    return alive


def exists_until(g, phi, psi, in_i, core, allowed=None) -> list:
    """mu Y. core & ((in_I & psi) | (phi & EX Y))"""
    y = [core[v] and in_i[v] and psi[v] for v in range(g.n)]
    stack = [v for v in range(g.n) if y[v]]
    pred = g.pred
    while stack:
        w = stack.pop()
        for u, e in pred[w]:
            if not y[u] and core[u] and phi[u] and _ok(allowed, e):
                y[u] = True
                stack.append(u)
    return y


def exists_release(g, phi, psi, in_i, core, allowed=None) -> list:
    """nu Y. core & (!in_I | psi) & (phi | EX Y)"""
    n = g.n
    y = [core[v] and (not in_i[v] or psi[v]) for v in range(n)]
    cnt = [0] * n
    for v, outs in enumerate(g.succ):
        if y[v]:
            cnt[v] = sum(1 for w, e in outs if y[w] and _ok(allowed, e))
    stack = [v for v in range(n) if y[v] and not phi[v] and cnt[v] == 0]
    for v in stack:
        y[v] = False
    pred = g.pred
    while stack:
        w = stack.pop()
        for u, e in pred[w]:
            if y[u] and _ok(allowed, e):
                cnt[u] -= 1
                if cnt[u] == 0 and not phi[u]:
                    y[u] = False
                    stack.append(u)
    return y


def exists_next(g, arg, core, allowed=None) -> list:
    out = [False] * g.n
    for v, outs in enumerate(g.succ):
        if core[v]:
            out[v] = any(core[w] and arg[w] and _ok(allowed, e) for w, e in outs)
    return out


class Labeler:
    """Evaluates state and path formulas on one structure.

    ``coalition`` decides non-empty strategic nodes; it receives the labeler
    and the node and returns the vertex set.  State-formula results are
    cached, so nested modalities are computed once and then act like fresh
    propositions."""

    def __init__(self, g: FiniteStructure, coalition=None, states=None):
        self.g = g
        self.coalition = coalition
        # optional labeler over the unpruned structure answering state formulas
        self.states = states
        self.reset = g.resets()
        self._cache: dict = {}
        self._full_core = None
        self._last_core = None
        self.iterations = 0

    def core(self, allowed=None) -> list:
        if allowed is None:
            if self._full_core is None:
                self._full_core = infinite_core(self.g)
            return self._full_core
        if self._last_core is None or self._last_core[0] is not allowed:
            self._last_core = (allowed, infinite_core(self.g, allowed))
        return self._last_core[1]

    def state(self, f) -> list:
        if self.states is not None:
            return self.states.state(f)
        out = self._cache.get(f)
        if out is None:
            out = self._cache[f] = self._state(f)
        return out

    def _state(self, f) -> list:
        n = self.g.n
        if isinstance(f, Const):
            return [f.value] * n
        if isinstance(f, Prop):
            return self.g.labels(f.name)
        if isinstance(f, Not):
            return [not x for x in self.state(f.arg)]
        if isinstance(f, And):
            a, b = self.state(f.left), self.state(f.right)
            return [x and y for x, y in zip(a, b)]
        if isinstance(f, Coalition):
            if not f.agents:
                return self.path(f.path, None)
            if self.coalition is None:
                raise EngineError("strategic-node", "non-empty coalition needs a strategy engine")
            return self.coalition(self, f)
        raise TypeError(f"not a core state formula: {f!r}")

    def path(self, f, allowed=None) -> list:
        g = self.g
        if isinstance(f, Lift):
            return self.state(f.state)
        if isinstance(f, PNot):
            return [not x for x in self.path(f.arg, allowed)]
        if isinstance(f, PAnd):
            a, b = self.path(f.left, allowed), self.path(f.right, allowed)
            return [x and y for x, y in zip(a, b)]
        core = self.core(allowed)
        if isinstance(f, AllNext):
            if g.kind == "continuous":
                raise EngineError("x-not-supported-continuous")
            arg = self.path(f.arg, allowed)
            ex = exists_next(g, [not x for x in arg], core, allowed)
            return [not ex[r] for r in self.reset]
        if isinstance(f, (ExUntil, ExRelease, AllUntil, AllRelease)):
            try:
                in_i = g.interval_mask(f.interval)
            except TimedOperatorError as exc:
                raise EngineError("timed-on-untimed", str(exc)) from None
            left, right = self.path(f.left, allowed), self.path(f.right, allowed)
            self.iterations += 1
            if isinstance(f, ExUntil):
                y = exists_until(g, left, right, in_i, core, allowed)
                return [y[r] for r in self.reset]
            if isinstance(f, ExRelease):
                y = exists_release(g, left, right, in_i, core, allowed)
                return [y[r] for r in self.reset]
            neg_l, neg_r = [not x for x in left], [not x for x in right]
            if isinstance(f, AllUntil):
                y = exists_release(g, neg_l, neg_r, in_i, core, allowed)
            else:
                y = exists_until(g, neg_l, neg_r, in_i, core, allowed)
            return [not y[r] for r in self.reset]
        raise TypeError(f"not a core path formula: {f!r}")


def _core_formula(f):
    return f if is_core(f) else desugar(f)


def check_ctl(g, path, allowed=None) -> list:
    """CTL labeling of a path formula on an untimed structure (a
    :class:`GlobalModel` or an :class:`UntimedGraph`)."""
    if isinstance(g, GlobalModel):
        g = UntimedGraph(g)
    return Labeler(g).path(_core_formula(path), allowed)


def check_tctl_region(rg, path, allowed=None) -> list:
    if rg.kind != "continuous":
        raise EngineError("wrong-structure", "expected a region graph")
    return Labeler(rg).path(_core_formula(path), allowed)


def check_tctl_discrete(tg, path, allowed=None) -> list:
    if tg.kind != "discrete":
        raise EngineError("wrong-structure", "expected a timed-state graph")
    return Labeler(tg).path(_core_formula(path), allowed)


# -- perfect-information ATL -------------------------------------------------

class _Arena:
    """Per state and per coalition choice, the successor states of the
    consistent edges."""

    def __init__(self, m: GlobalModel, agents: tuple):
        import itertools
        self.m = m
        net = m.network
        self.moves = []
        for k, s in enumerate(m.states):
            opts = [net.protocol[i][s[i]] for i in agents]
            moves = []
            for choice in itertools.product(*opts):
                dsts = []
                for e in m.out_edges[k]:
                    acts = m.edges[e].actions
                    if all(acts[i] is None or acts[i] == a for i, a in zip(agents, choice)):
                        dsts.append(m.edges[e].dst)
                moves.append(dsts)
            self.moves.append(moves)

    def pre(self, q: list) -> list:
        """Controllable predecessor; a choice with no consistent edge wins
        vacuously (every outcome from there is empty)."""
        return [any(all(q[d] for d in dsts) for dsts in moves) for moves in self.moves]


def _lfp(step, n) -> list:
    y = [False] * n
    for _ in range(n + 1):
        nxt = step(y)
        if nxt == y:
            return y
        y = nxt
    raise AssertionError("least fixpoint did not converge")


def _gfp(step, n) -> list:
    y = [True] * n
    for _ in range(n + 1):
        nxt = step(y)
        if nxt == y:
            return y
        y = nxt
    raise AssertionError("greatest fixpoint did not converge")


def check_atl_perfect(m: GlobalModel, f) -> list:
    """Controllable-predecessor fixpoints for ATL over an untimed model.

    ``D`` is the set of states from which the coalition can force every
    outcome to die out; those states satisfy any universal goal vacuously,
    matching the strategy engine's treatment of finite behaviour.  On
    deadlock-free models ``D`` is empty and the fixpoints are the textbook
    ones."""
    f = _core_formula(f)
    names = m.spec.names
    n = len(m.states)
    cache: dict = {}

    def state(f) -> list:
        if f in cache:
            return cache[f]
        if isinstance(f, Const):
            out = [f.value] * n
        elif isinstance(f, Prop):
            out = [f.name in v for v in m.valuation]
        elif isinstance(f, Not):
            out = [not x for x in state(f.arg)]
        elif isinstance(f, And):
            out = [x and y for x, y in zip(state(f.left), state(f.right))]
        elif isinstance(f, Coalition):
            out = coalition(f)
        else:
            raise TypeError(f"not a core state formula: {f!r}")
        cache[f] = out
        return out

    def operand(p) -> list:
        if not isinstance(p, Lift):
            raise EngineError("non-atl", "ATL operands must be state formulas")
        return state(p.state)

    def coalition(f) -> list:
        unknown = set(f.agents) - set(names)
        if unknown:
            raise EngineError("unknown-agent", ", ".join(sorted(unknown)))
        agents = tuple(sorted(names.index(a) for a in f.agents))
        arena = _Arena(m, agents)
        dead = _lfp(arena.pre, n)
        p = f.path
        if isinstance(p, AllNext):
            goal = operand(p.arg)
            return arena.pre([x or d for x, d in zip(goal, dead)])
        if isinstance(p, (AllUntil, AllRelease)):
            if not p.interval.trivial:
                raise EngineError("non-atl", "timed interval in ATL formula")
            left, right = operand(p.left), operand(p.right)
            if isinstance(p, AllUntil):
                return _lfp(lambda y: [d or r or (l and q) for d, r, l, q in
                                       zip(dead, right, left, arena.pre(y))], n)
            return _gfp(lambda y: [d or (r and (l or q)) for d, r, l, q in
                                   zip(dead, right, left, arena.pre(y))], n)
        raise EngineError("non-atl", "coalition must be followed by a universal temporal operator")

    return state(f)
