"""Guess, prune, check: memoryless strategy synthesis.

A coalition strategy is enumerated, the structure is pruned to the edges
consistent with it, and the path formula is checked on what is left.
Nested strategic modalities are labeled bottom-up over every vertex; the
label of ``<<A>>g`` at a vertex is the union, over strategies of ``A``, of
the vertices where ``g`` holds under that strategy.
"""
from __future__ import annotations

import itertools
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .composition import GlobalModel, Network, compose
from .discrete import TOP, build_dts, interval_member
from .engine import EngineError, Labeler
from .formula import (INF, Coalition, ExUntil, Lift, desugar, has_next, is_core, is_propositional,
                      is_temporal, is_timed, max_constant, walk, children, Interval, Prop,
                      Const, Not, And)
from .graph import UntimedGraph
from .model import SystemSpec
from .regions import (BEYOND, RegionSpace, build_region_graph, reset_region)

KINDS = ("ir", "Ir")


class StrategyError(ValueError):
    def __init__(self, rule: str, message: str = ""):
        self.rule = rule
        super().__init__(f"{rule}: {message}" if message else rule)


@dataclass(frozen=True)
class Strategy:
    """``maps[k]`` is the choice table of agent ``agents[k]``: indexed by
    the agent's local state for ``ir`` and by global state for ``Ir``."""
    kind: str
    agents: tuple
    maps: tuple

    def choice(self, k: int, local: int, state: int) -> str:
        return self.maps[k][local if self.kind == "ir" else state]

    def to_dict(self, domain) -> dict:
        """``domain`` is a :class:`StrategySpace`, used for naming."""
        out = {}
        for k, i in enumerate(self.agents):
            name = domain.agent_names[i]
            keys = domain.keys(k)
            out[name] = {key: act for key, act in zip(keys, self.maps[k])}
        return out


@dataclass
class Verdict:
    holds: bool
    witness: Strategy | None = None
    stats: dict = field(default_factory=dict)
    strategies: list | None = None
    space: "StrategySpace | None" = None

    def to_dict(self) -> dict:
        out = {"holds": self.holds, "witness": None, "stats": dict(self.stats)}
        if self.witness is not None:
            out["witness"] = self.witness.to_dict(self.space)
        if self.strategies is not None:
            out["strategies"] = [s.to_dict(self.space) for s in self.strategies]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


class StrategySpace:
    """Choice points of a coalition.

    ``ir`` strategies choose per local state of each coalition agent, over
    all declared locals.  ``Ir`` strategies choose per global state of the
    (reachable) global model."""

    def __init__(self, net: Network, agents, kind: str, model: GlobalModel | None = None):
        if kind not in KINDS:
            raise StrategyError("unsupported-strategy-class",
                                f"{kind!r}; only memoryless ir and Ir are decidable here")
        spec = net.spec
        names = spec.names
        unknown = [a for a in agents if a not in names]
        if unknown:
            raise StrategyError("unknown-agent", ", ".join(sorted(unknown)))
        self.net = net
        self.kind = kind
        self.agent_names = names
        self.agents = tuple(sorted(names.index(a) for a in agents))
        self.model = model
        if kind == "Ir" and model is None:
            raise StrategyError("needs-model", "Ir strategies range over global states")
        self.options = []      # per agent: list over choice points of action tuples
        for i in self.agents:
            order = {a: k for k, a in enumerate(spec.agents[i].actions)}
            if kind == "ir":
                locs = range(len(net.local_names[i]))
                self.options.append([tuple(sorted(net.protocol[i][l], key=order.get)) for l in locs])
            else:
                self.options.append([tuple(sorted(net.protocol[i][s[i]], key=order.get))
                                     for s in model.states])

    def keys(self, k: int) -> list:
        i = self.agents[k]
        if self.kind == "ir":
            return list(self.net.local_names[i])
        return [",".join(self.net.state_name(s)) for s in self.model.states]

    def count(self) -> int:
        return math.prod(len(o) for opts in self.options for o in opts)

    def __iter__(self):
        return self.strategies()

    def strategies(self, start: int = 0, stop: int | None = None):
        """Lexicographic order: agents by index, then choice points by index,
        then actions in declaration order."""
        flat = [o for opts in self.options for o in opts]
        sizes = [len(opts) for opts in self.options]
        for choice in itertools.islice(itertools.product(*flat), start, stop):
            maps, k = [], 0
            for size in sizes:
                maps.append(tuple(choice[k:k + size]))
                k += size
            yield Strategy(self.kind, self.agents, tuple(maps))

    def consistent(self, sigma: Strategy, state: int, local_state: tuple, actions: tuple) -> bool:
        for k, i in enumerate(self.agents):
            a = actions[i]
            if a is not None and a != sigma.choice(k, local_state[i], state):
                return False
        return True


def enumerate_strategies(spec_or_model, agents, kind: str = "ir"):
    """Ordered stream of every memoryless strategy of ``agents``."""
    return iter(_space(spec_or_model, agents, kind))


def _space(spec_or_model, agents, kind):
    if isinstance(spec_or_model, GlobalModel):
        return StrategySpace(spec_or_model.network, agents, kind, spec_or_model)
    if kind == "Ir":
        m = compose(spec_or_model)
        return StrategySpace(m.network, agents, kind, m)
    return StrategySpace(Network(spec_or_model), agents, kind)


def edge_mask(m: GlobalModel, space: StrategySpace, sigma: Strategy) -> list:
    """Model edges consistent with ``sigma``; non-movers are unconstrained."""
    return [space.consistent(sigma, e.src, m.states[e.src], e.actions) for e in m.edges]


def prune(g, sigma: Strategy, space: StrategySpace | None = None):
    """A copy of ``g`` (GlobalModel or a finite structure) keeping only the
    edges consistent with ``sigma``.  Delay edges are always kept."""
    import copy
    model = g if isinstance(g, GlobalModel) else g.model
    if space is None:
        names = [model.spec.names[i] for i in sigma.agents]
        space = StrategySpace(model.network, names, sigma.kind, model)
    mask = edge_mask(model, space, sigma)
    if isinstance(g, GlobalModel):
        keep = [k for k, ok in enumerate(mask) if ok]
        return GlobalModel(g.network, g.states, g.initial, [g.edges[k] for k in keep], lint=list(g.lint))
    out = copy.copy(g)
    out.__dict__.pop("succ", None)
    out.__dict__.pop("pred", None)
    out.edges = [(s, d, e) for s, d, e in g.edges if e < 0 or mask[e]]
    return out


# -- structures ---------------------------------------------------------------

def _needs_closure(f) -> bool:
    """A timed operator strictly below another temporal operator."""
    def timed_inside(node) -> bool:
        return any(is_timed(c) for c in children(node))
    return any(is_temporal(n) and timed_inside(n) for n in walk(f))


def build_structure(m: GlobalModel, f):
    sem = m.spec.semantics
    if sem == "untimed":
        return UntimedGraph(m)
    if sem == "discrete":
        return build_dts(m, max_constant(f))
    if has_next(f):
        raise EngineError("x-not-supported-continuous")
    return build_region_graph(m, max_constant(f), formula_clock=is_timed(f),
                              closure=_needs_closure(f))


# -- global engine ---------------------------------------------------------------

class _Context:
    def __init__(self, spec: SystemSpec, kind: str):
        self.spec = spec
        self.kind = kind
        self.model = compose(spec)
        self.spaces: dict = {}
        self.masks: dict = {}
        self.examined = 0

    def space(self, agents) -> StrategySpace:
        key = frozenset(agents)
        if key not in self.spaces:
            self.spaces[key] = StrategySpace(self.model.network, agents, self.kind, self.model)
        return self.spaces[key]

    def coalition(self, lab: Labeler, node: Coalition) -> list:
        space = self.space(node.agents)
        out = [False] * lab.g.n
        for sigma in space:
            self.examined += 1
            res = lab.path(node.path, edge_mask(self.model, space, sigma))
            out = [a or b for a, b in zip(out, res)]
            if all(out):
                break
        return out


def _prepare(f):
    f = f if is_core(f) else desugar(f)
    return f


def _check_kind(kind):
    if kind not in KINDS:
        raise StrategyError("unsupported-strategy-class",
                            f"{kind!r}; only memoryless ir and Ir are supported")


def local_applicable(f, kind: str) -> bool:
    """Top-level ``<<A>> E(phi U_I psi)`` with propositional operands."""
    if kind != "ir" or not isinstance(f, Coalition):
        return False
    p = f.path
    return (isinstance(p, ExUntil) and isinstance(p.left, Lift) and isinstance(p.right, Lift)
            and is_propositional(p.left.state) and is_propositional(p.right.state))


def check_strategic(spec: SystemSpec, f, kind: str = "ir", witness: bool = False,
                    all_strategies: bool = False, engine: str = "auto", jobs: int = 1,
                    only: Strategy | None = None) -> Verdict:
    """Decide ``f`` at the initial configuration.

    ``engine`` is ``global`` (build the whole structure once), ``local``
    (on-the-fly search, top-level existential until only) or ``auto``.
    With ``only`` a single strategy is checked (prune-then-check)."""
    _check_kind(kind)
    f = _prepare(f)
    for c in (n for n in walk(f) if isinstance(n, Coalition)):
        unknown = set(c.agents) - set(spec.names)
        if unknown:
            raise StrategyError("unknown-agent", ", ".join(sorted(unknown)))
    if spec.semantics == "continuous" and has_next(f):
        raise EngineError("x-not-supported-continuous")
    if engine == "auto":
        engine = "local" if local_applicable(f, kind) else "global"
    if engine == "local":
        if not local_applicable(f, kind):
            raise StrategyError("local-not-applicable",
                                "local engine handles <<A>> E(p U_I q) with propositional p, q under ir")
        return _check_local(spec, f, witness, all_strategies, only)
    return _check_global(spec, f, kind, witness, all_strategies, jobs, only)


def _check_global(spec, f, kind, witness, all_strategies, jobs, only) -> Verdict:
    t0 = time.perf_counter()
    ctx = _Context(spec, kind)
    g = build_structure(ctx.model, f)
    lab = Labeler(g, ctx.coalition)
    stats = {"engine": "global", "structure": g.kind, "vertices": g.n, "edges": len(g.edges),
             "states": len(ctx.model.states)}
    if not isinstance(f, Coalition) or not f.agents:
        holds = lab.state(f)[g.initial]
        stats.update(strategies_examined=ctx.examined, millis=_ms(t0))
        return Verdict(holds, None, stats)
    space = ctx.space(f.agents)
    stats["strategy_count"] = space.count()
    jobs = _jobs(jobs)
    if only is not None:
        stream = [(0, only)]
    elif jobs > 1 and space.count() > 1:
        return _check_parallel(spec, f, kind, witness, all_strategies, jobs, space, stats, t0)
    else:
        stream = enumerate(space)
    found = []
    examined = 0
    for idx, sigma in stream:
        examined += 1
        res = lab.path(f.path, edge_mask(ctx.model, space, sigma))
        if res[g.initial]:
            found.append(sigma)
            if not all_strategies:
                break
    stats.update(strategies_examined=examined + ctx.examined, millis=_ms(t0))
    holds = bool(found)
    return Verdict(holds, found[0] if (holds and witness) else None, stats,
                   found if all_strategies else None, space)


def _jobs(jobs) -> int:
    if jobs is None or jobs == 0:
        jobs = int(os.environ.get("STCTL_JOBS", "1") or 1)
    return max(1, int(jobs))


def _range_worker(args):
    spec, f, kind, start, stop, first_only = args
    ctx = _Context(spec, kind)
    g = build_structure(ctx.model, f)
    lab = Labeler(g, ctx.coalition)
    space = ctx.space(f.agents)
    hits = []
    for idx, sigma in enumerate(space.strategies(start, stop), start):
        if lab.path(f.path, edge_mask(ctx.model, space, sigma))[g.initial]:
            hits.append(idx)
            if first_only:
                break
    return hits


def _check_parallel(spec, f, kind, witness, all_strategies, jobs, space, stats, t0) -> Verdict:
    """Disjoint index ranges checked by worker processes; the reported
    witness is the minimum-index success, as in the sequential order."""
    total = space.count()
    step = max(1, math.ceil(total / jobs))
    tasks = [(spec, f, kind, lo, min(total, lo + step), not all_strategies)
             for lo in range(0, total, step)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(_range_worker, tasks))
    hits = sorted(i for r in results for i in r)
    strategies = list(space.strategies())
    found = [strategies[i] for i in hits]
    if not all_strategies:
        found = found[:1]
    stats.update(strategies_examined=total if all_strategies or not hits else hits[0] + 1,
                 millis=_ms(t0), jobs=jobs)
    holds = bool(found)
    return Verdict(holds, found[0] if (holds and witness) else None, stats,
                   found if all_strategies else None, space)


def _ms(t0) -> float:
    return round((time.perf_counter() - t0) * 1000, 3)


# -- on-the-fly engine ---------------------------------------------------------

class LazySystem:
    """Configurations of a network explored on demand.

    Continuous: ``(locals, region)`` over the network clocks plus the
    formula clock.  Discrete: ``(locals, counter)``.  Untimed: ``(locals,
    None)``."""

    def __init__(self, spec: SystemSpec, iv: Interval):
        self.net = Network(spec)
        self.sem = spec.semantics
        self.iv = iv
        self.c_max = 0 if iv.hi == INF and iv.lo == 0 else (iv.lo if iv.hi == INF else int(iv.hi))
        self._succ: dict = {}
        self._inv: dict = {}
        if self.sem == "continuous":
            maxc = _network_maxima(self.net)
            self.z = len(maxc)
            maxc.append(self.c_max)
            self.space = RegionSpace(maxc)

    def initial(self):
        if self.sem == "continuous":
            return (self.net.initial, self.space.zero())
        return (self.net.initial, 0 if self.sem == "discrete" else None)

    def _moves(self, s):
        out = self._succ.get(s)
        if out is None:
            out = self._succ[s] = self.net.successors(s)
        return out

    def _invariant(self, s):
        out = self._inv.get(s)
        if out is None:
            out = self._inv[s] = self.net.invariant(s)
        return out

    def successors(self, conf):
        """Yields ``(next configuration, actions or None for delay)``.
        Action edges come first, ordered by lowest mover index."""
        s, t = conf
        moves = self._moves(s)
        if self.sem == "continuous":
            sp = self.space
            inv = self._invariant(s)
            if not sp.sat(t, inv):
                return
            for label, guard, resets, dst, _, actions in moves:
                if sp.sat(t, guard):
                    r = reset_region(t, resets)
                    if sp.sat(r, self._invariant(dst)):
                        yield (dst, r), actions
            r2 = sp.succ(t)
            if r2 != t and sp.sat(r2, inv):
                yield (s, r2), None
        elif self.sem == "discrete":
            for label, guard, resets, dst, dur, actions in moves:
                d = TOP if t == TOP else (TOP if t + dur > self.c_max else t + dur)
                yield (dst, d), actions
        else:
            for *_, dst, _, actions in moves:
                yield (dst, None), actions

    def in_interval(self, conf) -> bool:
        t = conf[1]
        if self.sem == "continuous":
            from .regions import _in_interval
            return _in_interval(t, self.z, self.iv, self.c_max)
        if self.sem == "discrete":
            return interval_member(t, self.iv)
        return True

    def past_interval(self, conf) -> bool:
        """No extension of this configuration can be inside the interval."""
        iv, t = self.iv, conf[1]
        if iv.hi == INF:
            return False
        if self.sem == "continuous":
            n, rank = t.ints[self.z], t.ranks[self.z]
            if rank == BEYOND:
                return True
            return n > iv.hi or (n == iv.hi and (rank > 0 or not iv.hi_closed))
        if self.sem == "discrete":
            return t == TOP or t > iv.hi or (t == iv.hi and not iv.hi_closed)
        return False


def _network_maxima(net: Network) -> list:
    maxc = [0] * len(net.clocks)
    ccs = []
    for per_agent in net.transitions:
        for per_local in per_agent:
            ccs.extend(t.guard for t in per_local)
    for per_agent in net.invariants:
        ccs.extend(per_agent)
    for cc in ccs:
        for a in cc.atoms:
            maxc[a.clock] = max(maxc[a.clock], a.const)
            if a.other is not None:
                maxc[a.other] = max(maxc[a.other], a.const)
    return maxc


def _prop_holds(f, labels) -> bool:
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Prop):
        return f.name in labels
    if isinstance(f, Not):
        return not _prop_holds(f.arg, labels)
    if isinstance(f, And):
        return _prop_holds(f.left, labels) and _prop_holds(f.right, labels)
    raise TypeError(f"not propositional: {f!r}")


def _local_search(lazy: LazySystem, space: StrategySpace, sigma: Strategy, phi, psi, stats) -> bool:
    """Is there a finite path of phi-configurations ending in a psi
    configuration inside the interval, from which some infinite path
    continues?"""
    net = lazy.net

    def allowed(conf, actions):
        if actions is None:
            return True
        return space.consistent(sigma, -1, conf[0], actions)

    labels_cache: dict = {}

    def labels(s):
        out = labels_cache.get(s)
        if out is None:
            out = labels_cache[s] = net.valuation(s)
        return out

    dead: set = set()   # configurations known to have no infinite continuation

    def infinite_from(start) -> bool:
        on_stack = {start}
        done: set = set()
        stack = [(start, lazy.successors(start))]
        while stack:
            conf, it = stack[-1]
            for nxt, acts in it:
                if not allowed(conf, acts):
                    continue
                if nxt in on_stack:
                    return True
                if nxt in dead or nxt in done:
                    continue
                on_stack.add(nxt)
                stack.append((nxt, lazy.successors(nxt)))
                stats["configurations"] += 1
                break
            else:
                stack.pop()
                on_stack.discard(conf)
                done.add(conf)
        dead.update(done)
        return False

    start = lazy.initial()
    seen = {start}
    stack = [start]
    while stack:
        conf = stack.pop()
        stats["configurations"] += 1
        lab = labels(conf[0])
        if lazy.in_interval(conf) and _prop_holds(psi, lab) and infinite_from(conf):
            return True
        if lazy.past_interval(conf) or not _prop_holds(phi, lab):
            continue
        nexts = [nxt for nxt, acts in lazy.successors(conf) if allowed(conf, acts)]
        for nxt in reversed(nexts):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return False


def _check_local(spec, f, witness, all_strategies, only) -> Verdict:
    t0 = time.perf_counter()
    p = f.path
    lazy = LazySystem(spec, p.interval)
    space = StrategySpace(lazy.net, f.agents, "ir")
    stats = {"engine": "local", "structure": spec.semantics, "configurations": 0,
             "strategy_count": space.count()}
    found = []
    examined = 0
    stream = [only] if only is not None else space
    for sigma in stream:
        examined += 1
        if _local_search(lazy, space, sigma, p.left.state, p.right.state, stats):
            found.append(sigma)
            if not all_strategies:
                break
    stats.update(strategies_examined=examined, millis=_ms(t0))
    holds = bool(found)
    return Verdict(holds, found[0] if (holds and witness) else None, stats,
                   found if all_strategies else None, space)


# -- public helpers ---------------------------------------------------------------

def synth_all(spec: SystemSpec, f, kind: str = "ir", engine: str = "auto", jobs: int = 1) -> list:
    """Every winning strategy of the outermost coalition, in enumeration order."""
    f = _prepare(f)
    if not isinstance(f, Coalition):
        raise StrategyError("not-strategic", "outermost node must be a coalition")
    return check_strategic(spec, f, kind, all_strategies=True, engine=engine, jobs=jobs).strategies


def verify_witness(spec: SystemSpec, f, sigma: Strategy, engine: str = "auto") -> bool:
    """Prune by ``sigma`` and re-check.

    With the global engine the structure is physically pruned (edges
    removed) and ``f``'s path formula is evaluated on the copy; state
    subformulas, including nested coalitions, are still answered on the
    unpruned structure.  The on-the-fly engine re-runs its search with
    ``sigma`` as the only candidate."""
    f = _prepare(f)
    if not isinstance(f, Coalition):
        raise StrategyError("not-strategic", "witnesses belong to coalition formulas")
    if engine == "auto":
        engine = "local" if local_applicable(f, sigma.kind) else "global"
    if engine == "local":
        return check_strategic(spec, f, sigma.kind, engine="local", only=sigma).holds
    ctx = _Context(spec, sigma.kind)
    g = build_structure(ctx.model, f)
    full = Labeler(g, ctx.coalition)
    pruned = prune(g, sigma, ctx.space(f.agents))
    return Labeler(pruned, states=full).path(f.path)[pruned.initial]
