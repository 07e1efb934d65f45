"""Brute-force reference semantics for small untimed and discrete systems.

Nothing here reuses the composition, engine or strategy modules: the oracle
explores the system straight from its :class:`SystemSpec`, keeps its own
strategy encoding (dictionaries from choice points to actions, enumerated in
mixed radix), and decides path formulas by searching for lassos over
``(state, elapsed time)`` pairs with an exact counter clipped at
``c_max + max duration``.  Sugar operators are evaluated natively.
"""
from __future__ import annotations

import itertools
import random

from . import formula as F
from .model import SystemSpec, parse_model, validate

MAX_VERTICES = 512


class OracleError(ValueError):
    pass


class _System:
    def __init__(self, spec: SystemSpec):
        if spec.semantics == "continuous":
            raise OracleError("the oracle covers untimed and discrete semantics only")
        self.spec = spec
        self.names = [a.name for a in spec.agents]
        self.discrete = spec.semantics == "discrete"
        self.init = tuple(a.initial for a in spec.agents)
        self._succ: dict = {}
        self.reachable = self._explore()
        self.max_dur = max([t.duration for a in spec.agents for t in a.transitions] + [1])

    def _local_moves(self, i, local, action):
        a = self.spec.agents[i]
        if action not in a.protocol.get(local, ()):
            return []
        return [t for t in a.transitions if t.src == local and t.action == action]

    def moves(self, s: tuple) -> list:
        """``(actions dict agent-name -> action, dst, duration)`` triples."""
        hit = self._succ.get(s)
        if hit is not None:
            return hit
        out = []
        agents = self.spec.agents
        if self.spec.coordination == "sync":
            for joint in itertools.product(*[a.protocol.get(s[i], ()) for i, a in enumerate(agents)]):
                by_name = dict(zip(self.names, joint))
                options = []
                for i in range(len(agents)):
                    ts = [t for t in self._local_moves(i, s[i], joint[i])
                          if all(by_name.get(o) == act for o, act in t.sync_with)]
                    options.append(ts)
                for combo in itertools.product(*options):
                    durs = {t.duration for t in combo}
                    if self.discrete and len(durs) > 1:
                        continue
                    dst = tuple(t.dst for t in combo)
                    out.append((by_name, dst, max(durs) if self.discrete else 1))
        else:
            events = []
            for a in agents:
                for act in a.actions:
                    if act not in events:
                        events.append(act)
            for ev in events:
                movers = [i for i, a in enumerate(agents) if ev in a.actions]
                options = [self._local_moves(i, s[i], ev) for i in movers]
                for combo in itertools.product(*options):
                    dst = list(s)
                    for i, t in zip(movers, combo):
                        dst[i] = t.dst
                    dur = max(t.duration for t in combo) if self.discrete else 1
                    out.append(({self.names[i]: ev for i in movers}, tuple(dst), dur))
        self._succ[s] = out
        return out

    def _explore(self) -> list:
        seen = {self.init}
        order = [self.init]
        k = 0
        while k < len(order):
            for _, dst, _ in self.moves(order[k]):
                if dst not in seen:
                    seen.add(dst)
                    order.append(dst)
            k += 1
        return order

    def labels(self, s: tuple) -> set:
        out = set()
        for a, l in zip(self.spec.agents, s):
            out |= set(a.labels.get(l, ()))
        return out


class _Strategies:
    """Mixed-radix enumeration of choice dictionaries."""

    def __init__(self, system: _System, coalition, kind: str):
        self.points = []
        for name in sorted(coalition, key=system.names.index):
            i = system.names.index(name)
            agent = system.spec.agents[i]
            if kind == "ir":
                keys = [(name, l) for l in agent.locals]
                opts = [list(agent.protocol.get(l, ())) for l in agent.locals]
            elif kind == "Ir":
                keys = [(name, s) for s in system.reachable]
                opts = [list(agent.protocol.get(s[i], ())) for s in system.reachable]
            else:
                raise OracleError(f"unsupported strategy class {kind!r}")
            self.points.extend(zip(keys, opts))
        self.kind = kind

    def __iter__(self):
        radices = [len(o) for _, o in self.points]
        if any(r == 0 for r in radices):
            return
        digits = [0] * len(radices)
        while True:
            yield {key: opts[d] for (key, opts), d in zip(self.points, digits)}
            k = len(digits) - 1
            while k >= 0:
                digits[k] += 1
                if digits[k] < radices[k]:
                    break
                digits[k] = 0
                k -= 1
            if k < 0:
                return


class Oracle:
    def __init__(self, spec: SystemSpec, kind: str = "ir", extra_bound: int = 0, formula=None):
        self.sys = _System(spec)
        self.kind = kind
        self.extra = extra_bound
        self.c_max = F.max_constant(formula) if formula is not None else 0
        self.cap = self.c_max + self.sys.max_dur + extra_bound if self.sys.discrete else 0
        if len(self.sys.reachable) * (self.cap + 1) > MAX_VERTICES:
            raise OracleError("instance too large for the oracle")
        self._state_memo: dict = {}

    # -- strategy-relative exploration ------------------------------------------

    def _consistent(self, sigma, s, actions) -> bool:
        for name, act in actions.items():
            key = (name, s[self.sys.names.index(name)]) if self.kind == "ir" else (name, s)
            want = sigma.get(key)
            if want is not None and want != act:
                return False
        return True

    def _step(self, ctx, s):
        hit = ctx["succ"].get(s)
        if hit is None:
            sigma = ctx["sigma"]
            hit = [(dst, dur) for acts, dst, dur in self.sys.moves(s)
                   if self._consistent(sigma, s, acts)]
            ctx["succ"][s] = hit
        return hit

    def _infinite(self, ctx, s) -> bool:
        """Some infinite execution from ``s`` (DFS for a reachable cycle)."""
        memo = ctx["inf"]
        if s in memo:
            return memo[s]
        colour = {}
        found = False

        def dfs(u):
            nonlocal found
            colour[u] = 1
            for w, _ in self._step(ctx, u):
                if found:
                    return
                if memo.get(w) is True or colour.get(w) == 1:
                    found = True
                    return
                if colour.get(w) is None and memo.get(w) is not False:
                    dfs(w)
            colour[u] = 2

        dfs(s)
        if found:
            memo[s] = True
        else:
            for u in colour:
                memo[u] = False
        return found

    def _tick(self, d, dur):
        return min(d + dur, self.cap) if self.sys.discrete else 0

    def _until(self, ctx, s, hold, goal, iv) -> bool:
        """Finite prefix through ``hold`` positions to a ``goal`` position
        whose time lies in ``iv`` and which continues forever."""
        start = (s, 0)
        seen = {start}
        todo = [start]
        while todo:
            u, d = todo.pop()
            if self._in(iv, d) and goal(u) and self._infinite(ctx, u):
                return True
            if not hold(u):
                continue
            for w, dur in self._step(ctx, u):
                nxt = (w, self._tick(d, dur))
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
        return False

    def _member_top(self, iv, d):
        # d == cap > c_max: every endpoint lies below d
        return iv.hi == F.INF

    def _in(self, iv, d) -> bool:
        if self.sys.discrete and d >= self.cap:
            return self._member_top(iv, d)
        return iv.contains(d)

    def _lasso(self, ctx, s, valid, release) -> bool:
        """An infinite execution whose positions satisfy ``valid(state, d)``
        until a position satisfying ``release`` (after which anything goes)."""
        colour: dict = {}
        found = False

        def dfs(node):
            nonlocal found
            u, d = node
            colour[node] = 1
            if release(u) and self._infinite(ctx, u):
                found = True
                return
            for w, dur in self._step(ctx, u):
                nxt = (w, self._tick(d, dur))
                if not valid(*nxt):
                    continue
                if colour.get(nxt) == 1:
                    found = True
                    return
                if nxt not in colour:
                    dfs(nxt)
                    if found:
                        return
            colour[node] = 2

        start = (s, 0)
        if valid(*start):
            dfs(start)
        return found

    # -- formulas -----------------------------------------------------------------

    def state(self, f, s) -> bool:
        key = (f, s)
        if key in self._state_memo:
            return self._state_memo[key]
        if isinstance(f, F.Const):
            out = f.value
        elif isinstance(f, F.Prop):
            out = f.name in self.sys.labels(s)
        elif isinstance(f, F.Not):
            out = not self.state(f.arg, s)
        elif isinstance(f, F.And):
            out = self.state(f.left, s) and self.state(f.right, s)
        elif isinstance(f, F.Or):
            out = self.state(f.left, s) or self.state(f.right, s)
        elif isinstance(f, F.Implies):
            out = (not self.state(f.left, s)) or self.state(f.right, s)
        elif isinstance(f, F.Coalition):
            unknown = set(f.agents) - set(self.sys.names)
            if unknown:
                raise OracleError(f"unknown agents {sorted(unknown)}")
            out = False
            for sigma in _Strategies(self.sys, f.agents, self.kind):
                ctx = {"sigma": sigma, "succ": {}, "inf": {}, "memo": {}}
                if self.path(ctx, f.path, s):
                    out = True
                    break
        else:
            raise TypeError(f"not a state formula: {f!r}")
        self._state_memo[key] = out
        return out

    def path(self, ctx, g, s) -> bool:
        key = (g, s)
        memo = ctx["memo"]
        if key not in memo:
            memo[key] = self._path(ctx, g, s)
        return memo[key]

    def _path(self, ctx, g, s) -> bool:
        P = lambda h: (lambda u: self.path(ctx, h, u))
        nP = lambda h: (lambda u: not self.path(ctx, h, u))
        if isinstance(g, F.Lift):
            return self.state(g.state, s)
        if isinstance(g, F.PNot):
            return not self.path(ctx, g.arg, s)
        if isinstance(g, F.PAnd):
            return self.path(ctx, g.left, s) and self.path(ctx, g.right, s)
        if isinstance(g, F.POr):
            return self.path(ctx, g.left, s) or self.path(ctx, g.right, s)
        if isinstance(g, F.PImplies):
            return (not self.path(ctx, g.left, s)) or self.path(ctx, g.right, s)
        if isinstance(g, (F.AllNext, F.ExNext)):
            nexts = [w for w, _ in self._step(ctx, s) if self._infinite(ctx, w)]
            vals = [self.path(ctx, g.arg, w) for w in nexts]
            return all(vals) if isinstance(g, F.AllNext) else any(vals)
        always = lambda u: True
        never = lambda u: False
        if isinstance(g, F.ExUntil):
            return self._until(ctx, s, P(g.left), P(g.right), g.interval)
        if isinstance(g, F.ExEventually):
            return self._until(ctx, s, always, P(g.arg), g.interval)
        if isinstance(g, F.AllRelease):
            return not self._until(ctx, s, nP(g.left), nP(g.right), g.interval)
        if isinstance(g, F.AllGlobally):
            return not self._until(ctx, s, always, nP(g.arg), g.interval)
        iv = getattr(g, "interval", None)
        if isinstance(g, F.ExRelease):
            return self._lasso(ctx, s, lambda u, d: not self._in(iv, d) or self.path(ctx, g.right, u),
                               P(g.left))
        if isinstance(g, F.ExGlobally):
            return self._lasso(ctx, s, lambda u, d: not self._in(iv, d) or self.path(ctx, g.arg, u),
                               never)
        if isinstance(g, F.AllUntil):
            return not self._lasso(ctx, s, lambda u, d: not (self._in(iv, d) and self.path(ctx, g.right, u)),
                                   nP(g.left))
        if isinstance(g, F.AllEventually):
            return not self._lasso(ctx, s, lambda u, d: not (self._in(iv, d) and self.path(ctx, g.arg, u)),
                                   never)
        raise TypeError(f"not a path formula: {g!r}")


def oracle_check(spec: SystemSpec, f, kind: str = "ir", extra_bound: int = 0) -> bool:
    """Truth of ``f`` at the initial state, by exhaustive search."""
    if isinstance(f, str):
        f = F.parse_formula(f, sugar=True)
    o = Oracle(spec, kind, extra_bound, f)
    return o.state(f, o.sys.init)


# -- random instances -----------------------------------------------------------

DEFAULT_PARAMS = {"agents": 3, "locals": 3, "actions": 2, "durations": 3}


def random_system(params: dict | None = None, seed: int = 0) -> SystemSpec:
    """A small validated system, deterministic per seed.

    ``params`` caps agents, locals per agent, actions per agent and
    durations; it may also fix ``coordination`` and ``semantics``
    (``untimed`` or ``discrete``)."""
    p = dict(DEFAULT_PARAMS)
    p.update(params or {})
    rng = random.Random(seed)
    coordination = p.get("coordination") or rng.choice(["sync", "async"])
    semantics = p.get("semantics") or rng.choice(["untimed", "discrete"])
    n_agents = min(p["agents"], rng.choice([1, 2, 2, 3]))
    pool = ["a", "b", "c"]
    agents = []
    for i in range(n_agents):
        n_loc = min(p["locals"], rng.choice([2, 3, 3]))
        locs = [f"l{k}" for k in range(n_loc)]
        n_act = min(p["actions"], rng.choice([1, 2, 2]))
        if coordination == "async":
            # one private event and, with two actions, one event from a shared pool
            acts = [f"e{i}"] + ([rng.choice(["s0", "s1"])] if n_act > 1 else [])
        else:
            acts = [f"{x}{i}" for x in pool[:n_act]]
        protocol = {}
        transitions = []
        for k, l in enumerate(locs):
            chosen = [a for a in acts if rng.random() < 0.7] or [rng.choice(acts)]
            protocol[l] = chosen
            for j, a in enumerate(chosen):
                for _ in range(1 if rng.random() < 0.8 else 2):
                    forward = j == 0 and rng.random() < 0.6
                    t = {"from": l, "action": a, "to": locs[(k + 1) % n_loc] if forward else rng.choice(locs)}
                    if semantics == "discrete":
                        t["duration"] = rng.randint(1, p["durations"])
                    transitions.append(t)
        labels = {}
        for l in locs:
            props = [q for q in ("p", "q") if rng.random() < 0.4]
            if props:
                labels[l] = props
        agents.append({"name": f"ag{i}", "locals": locs, "initial": locs[0], "actions": acts,
                       "protocol": protocol, "transitions": transitions, "labels": labels})
    spec = parse_model({"coordination": coordination, "semantics": semantics, "agents": agents})
    problems = validate(spec)
    assert not problems, problems
    return spec


def _random_interval(rng, max_endpoint: int, timed: bool) -> F.Interval:
    if not timed or rng.random() < 0.4:
        return F.TRIVIAL
    lo = rng.randint(0, max_endpoint)
    if rng.random() < 0.3:
        return F.Interval(lo, F.INF, rng.random() < 0.7, False)
    hi = rng.randint(lo, max_endpoint)
    if hi == lo:
        return F.Interval(lo, hi, True, True)
    return F.Interval(lo, hi, rng.random() < 0.7, rng.random() < 0.7)


def random_formula(rng: random.Random, agents, props, depth: int = 3, max_endpoint: int = 4,
                   timed: bool = False, allow_next: bool = True, sugar: bool = False):
    """A random state formula of height at most ``depth``; core constructors
    only unless ``sugar`` is set."""
    agents = list(agents)
    props = list(props) or ["p"]

    def state(d):
        if d <= 1:
            return rng.choice([F.Prop(rng.choice(props))] * 4 + [F.TRUE, F.FALSE])
        r = rng.random()
        if r < 0.15:
            return F.Not(state(d - 1))
        if r < 0.25:
            return (F.Or if sugar and rng.random() < 0.5 else F.And)(state(d - 1), state(d - 1))
        if r < 0.35:
            return F.Prop(rng.choice(props))
        coal = frozenset(a for a in agents if rng.random() < 0.5)
        return F.Coalition(coal, path(d - 1))

    def path(d):
        if d <= 1:
            return F.Lift(state(1))
        ops = ["until", "until", "release", "not", "and", "lift"]
        if allow_next:
            ops.append("next")
        if sugar:
            ops += ["ev", "glob"]
        op = rng.choice(ops)
        if op == "lift":
            return F.Lift(state(d - 1))
        if op == "not":
            return F.PNot(path(d - 1))
        if op == "and":
            return (F.POr if sugar and rng.random() < 0.5 else F.PAnd)(path(d - 1), path(d - 1))
        if op == "next":
            return (F.ExNext if sugar and rng.random() < 0.5 else F.AllNext)(path(d - 1))
        iv = _random_interval(rng, max_endpoint, timed)
        ex = rng.random() < 0.5
        if op == "ev":
            return (F.ExEventually if ex else F.AllEventually)(iv, path(d - 1))
        if op == "glob":
            return (F.ExGlobally if ex else F.AllGlobally)(iv, path(d - 1))
        if op == "until":
            return (F.ExUntil if ex else F.AllUntil)(path(d - 1), iv, path(d - 1))
        return (F.ExRelease if ex else F.AllRelease)(path(d - 1), iv, path(d - 1))

    return F.Coalition(frozenset(a for a in agents if rng.random() < 0.5), path(depth))


def random_atl_formula(rng: random.Random, agents, props, depth: int = 3):
    """ATL: every coalition directly followed by A X, A U or A R over state
    formulas."""
    agents = list(agents)
    props = list(props) or ["p"]

    def state(d):
        if d <= 1:
            return rng.choice([F.Prop(rng.choice(props))] * 3 + [F.TRUE, F.FALSE])
        r = rng.random()
        if r < 0.2:
            return F.Not(state(d - 1))
        if r < 0.3:
            return F.And(state(d - 1), state(d - 1))
        coal = frozenset(a for a in agents if rng.random() < 0.5)
        op = rng.choice(["next", "until", "release"])
        if op == "next":
            return F.Coalition(coal, F.AllNext(F.Lift(state(d - 1))))
        cls = F.AllUntil if op == "until" else F.AllRelease
        return F.Coalition(coal, cls(F.Lift(state(d - 1)), F.TRIVIAL, F.Lift(state(d - 1))))

    return state(depth)


def canonical(f):
    """The representative the parser produces: state subterms in path
    position are lifted as a whole (``!p`` is ``Lift(Not p)``, never
    ``PNot(Lift p)``)."""
    if isinstance(f, (F.Const, F.Prop)):
        return f
    if isinstance(f, (F.Not,)):
        return F.Not(canonical(f.arg))
    if isinstance(f, (F.And, F.Or, F.Implies)):
        return type(f)(canonical(f.left), canonical(f.right))
    if isinstance(f, F.Coalition):
        return F.Coalition(f.agents, canonical(f.path))
    if isinstance(f, F.Lift):
        return F.Lift(canonical(f.state))
    if isinstance(f, F.PNot):
        a = canonical(f.arg)
        return F.Lift(F.Not(a.state)) if isinstance(a, F.Lift) else F.PNot(a)
    if isinstance(f, (F.PAnd, F.POr, F.PImplies)):
        a, b = canonical(f.left), canonical(f.right)
        if isinstance(a, F.Lift) and isinstance(b, F.Lift):
            st = {F.PAnd: F.And, F.POr: F.Or, F.PImplies: F.Implies}[type(f)]
            return F.Lift(st(a.state, b.state))
        return type(f)(a, b)
    if isinstance(f, (F.AllNext, F.ExNext)):
        return type(f)(canonical(f.arg))
    if isinstance(f, F.TEMPORAL_BINARY):
        return type(f)(canonical(f.left), f.interval, canonical(f.right))
    if isinstance(f, (F.AllEventually, F.ExEventually, F.AllGlobally, F.ExGlobally)):
        return type(f)(f.interval, canonical(f.arg))
    raise TypeError(f"not a formula: {f!r}")
