"""Global models of agent networks under synchronous or asynchronous
coordination.

:class:`Network` computes successors of a global state on demand; the
explicit :class:`GlobalModel` is built from it by search.  The on-the-fly
checker in :mod:`stctl.strategy` uses the network directly so that large
interleavings never have to be materialised.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field

from .model import ClockConstraint, SystemSpec


@dataclass(frozen=True)
class JointAction:
    actions: tuple

    def __str__(self):
        return "(" + ",".join(self.actions) + ")"


@dataclass(frozen=True)
class Event:
    name: str
    movers: tuple

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Edge:
    src: int
    label: object
    guard: ClockConstraint
    resets: frozenset
    dst: int
    duration: int
    # per agent: the action it performs, or None when it does not move
    actions: tuple


@dataclass(frozen=True)
class _LocalTransition:
    action: str
    dst: int
    guard: ClockConstraint
    resets: frozenset
    duration: int
    sync_with: tuple  # (agent index, action) pairs


class Network:
    """Compiled form of a :class:`SystemSpec`: local states become indices and
    clocks become indices into the global clock vector."""

    def __init__(self, spec: SystemSpec):
        self.spec = spec
        self.n = len(spec.agents)
        self.clocks: list[str] = []
        for a in spec.agents:
            self.clocks.extend(f"{a.name}.{c}" for c in a.clocks)
        clock_index = {c: i for i, c in enumerate(self.clocks)}
        self.local_names = [tuple(a.locals) for a in spec.agents]
        self.local_index = [{l: k for k, l in enumerate(a.locals)} for a in spec.agents]
        self.initial = tuple(self.local_index[i][a.initial] for i, a in enumerate(spec.agents))
        self.protocol = []
        self.transitions = []  # agent -> local -> list[_LocalTransition]
        self.invariants = []   # agent -> local -> ClockConstraint (global indices)
        self.labels = []       # agent -> local -> frozenset
        names = {a.name: i for i, a in enumerate(spec.agents)}
        for i, a in enumerate(spec.agents):
            qual = {c: clock_index[f"{a.name}.{c}"] for c in a.clocks}
            self.protocol.append([tuple(a.protocol.get(l, ())) for l in a.locals])
            per_local = [[] for _ in a.locals]
            for t in a.transitions:
                if t.action not in a.protocol.get(t.src, ()):
                    continue
                per_local[self.local_index[i][t.src]].append(_LocalTransition(
                    t.action, self.local_index[i][t.dst], t.guard.rename(qual),
                    frozenset(qual[c] for c in t.resets), t.duration,
                    tuple((names[other], act) for other, act in t.sync_with)))
            self.transitions.append(per_local)
            self.invariants.append([a.invariant(l).rename(qual) for l in a.locals])
            self.labels.append([frozenset(a.labels.get(l, ())) for l in a.locals])
        self.event_movers = {}
        if spec.coordination == "async":
            for i, a in enumerate(spec.agents):
                for act in a.actions:
                    self.event_movers.setdefault(act, tuple(spec.movers(act)))
        self.lint: list[str] = []

    def state_name(self, s: tuple) -> tuple:
        return tuple(self.local_names[i][l] for i, l in enumerate(s))

    def valuation(self, s: tuple) -> frozenset:
        out = frozenset()
        for i, l in enumerate(s):
            out |= self.labels[i][l]
        return out

    def invariant(self, s: tuple) -> ClockConstraint:
        atoms = ()
        for i, l in enumerate(s):
            atoms += self.invariants[i][l].atoms
        return ClockConstraint(atoms)

    def successors(self, s: tuple) -> list:
        """Outgoing global transitions of ``s`` as tuples
        ``(label, guard, resets, dst, duration, actions)``."""
        if self.spec.coordination == "sync":
            return self._sync_successors(s)
        return self._async_successors(s)

    def _sync_successors(self, s: tuple) -> list:
        discrete = self.spec.semantics == "discrete"
        out = []
        choices = [self.protocol[i][l] for i, l in enumerate(s)]
        for alpha in itertools.product(*choices):
            per_agent = []
            for i, l in enumerate(s):
                cands = [t for t in self.transitions[i][l]
                         if t.action == alpha[i] and all(alpha[j] == act for j, act in t.sync_with)]
                if not cands:
                    break
                per_agent.append(cands)
            else:
                for combo in itertools.product(*per_agent):
                    durations = {t.duration for t in combo}
                    if discrete and len(durations) > 1:
                        self.lint.append(
                            f"dropped joint action {alpha} at {self.state_name(s)}: "
                            f"durations {sorted(durations)} disagree")
                        continue
                    out.append(self._combine(s, JointAction(alpha), list(range(self.n)), combo, alpha))
        return out

    def _async_successors(self, s: tuple) -> list:
        out = []
        for i, l in enumerate(s):
            for t in self.transitions[i][l]:
                movers = self.event_movers[t.action]
                if movers[0] != i:
                    continue
                per_mover = [[t]]
                for j in movers[1:]:
                    cands = [u for u in self.transitions[j][s[j]] if u.action == t.action]
                    if not cands:
                        break
                    per_mover.append(cands)
                else:
                    actions = tuple(t.action if k in movers else None for k in range(self.n))
                    for combo in itertools.product(*per_mover):
                        out.append(self._combine(s, Event(t.action, movers), movers, combo, actions))
        return out

    def _combine(self, s, label, movers, combo, actions):
        dst = list(s)
        atoms = ()
        resets = frozenset()
        for k, t in zip(movers, combo):
            dst[k] = t.dst
            atoms += t.guard.atoms
            resets |= t.resets
        duration = max(t.duration for t in combo)
        return (label, ClockConstraint(atoms), resets, tuple(dst), duration, tuple(actions))


@dataclass
class GlobalModel:
    network: Network
    states: list                  # index -> tuple of local indices
    initial: int
    edges: list                   # list[Edge]
    out_edges: list = field(default_factory=list)
    lint: list = field(default_factory=list)

    def __post_init__(self):
        self.index = {s: k for k, s in enumerate(self.states)}
        if not self.out_edges:
            self.out_edges = [[] for _ in self.states]
            for k, e in enumerate(self.edges):
                self.out_edges[e.src].append(k)
        self.valuation = [self.network.valuation(s) for s in self.states]
        self.invariant = [self.network.invariant(s) for s in self.states]

    @property
    def spec(self) -> SystemSpec:
        return self.network.spec

    @property
    def clocks(self) -> list:
        return self.network.clocks

    @property
    def agents(self) -> list:
        return self.spec.names

    def state_name(self, k: int) -> tuple:
        return self.network.state_name(self.states[k])

    def local(self, k: int, agent: int) -> int:
        return self.states[k][agent]

    def to_dict(self) -> dict:
        net = self.network
        return {
            "agents": self.agents,
            "coordination": self.spec.coordination,
            "semantics": self.spec.semantics,
            "clocks": list(self.clocks),
            "initial": self.initial,
            "states": [
                {"id": k, "locals": list(self.state_name(k)),
                 "labels": sorted(self.valuation[k]),
                 "invariant": str(_named(self.invariant[k], net.clocks))}
                for k in range(len(self.states))],
            "edges": [
                {"src": e.src, "dst": e.dst, "label": str(e.label),
                 "guard": str(_named(e.guard, net.clocks)),
                 "reset": sorted(net.clocks[c] for c in e.resets),
                 "duration": e.duration}
                for e in self.edges],
            "lint": list(self.lint),
        }


def _named(cc: ClockConstraint, clocks: list) -> ClockConstraint:
    return cc.rename({i: c for i, c in enumerate(clocks)})


def _build(spec: SystemSpec, reachable: bool) -> GlobalModel:
    net = Network(spec)
    if reachable:
        states = [net.initial]
        index = {net.initial: 0}
        queue = deque([net.initial])
        succ_cache = {}
        while queue:
            s = queue.popleft()
            succ = net.successors(s)
            succ_cache[s] = succ
            for *_, dst, _, _ in succ:
                if dst not in index:
                    index[dst] = len(states)
                    states.append(dst)
                    queue.append(dst)
    else:
        states = list(itertools.product(*[range(len(ls)) for ls in net.local_names]))
        index = {s: k for k, s in enumerate(states)}
        succ_cache = {s: net.successors(s) for s in states}
    edges = []
    for s in states:
        for label, guard, resets, dst, duration, actions in succ_cache[s]:
            edges.append(Edge(index[s], label, guard, resets, index[dst], duration, actions))
    return GlobalModel(net, states, index[net.initial], edges, lint=list(net.lint))


def compose_sync(spec: SystemSpec, reachable: bool = True) -> GlobalModel:
    """Synchronous product: one edge per joint action and per combination of
    local transition variants.  Discrete durations must agree (else the
    combination is dropped and reported in ``lint``)."""
    if spec.coordination != "sync":
        raise ValueError("compose_sync needs a synchronous system")
    return _build(spec, reachable)


def compose_async(spec: SystemSpec, reachable: bool = True) -> GlobalModel:
    """Interleaving product: one edge per event and per combination of the
    movers' enabled local transitions; non-movers stay put and the discrete
    duration is the movers' maximum."""
    if spec.coordination != "async":
        raise ValueError("compose_async needs an asynchronous system")
    return _build(spec, reachable)


def compose(spec: SystemSpec, reachable: bool = True) -> GlobalModel:
    if spec.coordination == "sync":
        return compose_sync(spec, reachable)
    return compose_async(spec, reachable)


def reachable_restrict(m: GlobalModel) -> GlobalModel:
    """Keep the states reachable from the initial state, ignoring guards."""
    seen = {m.initial}
    order = [m.initial]
    queue = deque([m.initial])
    while queue:
        k = queue.popleft()
        for e in m.out_edges[k]:
            d = m.edges[e].dst
            if d not in seen:
                seen.add(d)
                order.append(d)
                queue.append(d)
    order.sort()
    remap = {old: new for new, old in enumerate(order)}
    edges = [Edge(remap[e.src], e.label, e.guard, e.resets, remap[e.dst], e.duration, e.actions)
             for e in m.edges if e.src in seen]
    return GlobalModel(m.network, [m.states[k] for k in order], remap[m.initial], edges,
                       lint=list(m.lint))
