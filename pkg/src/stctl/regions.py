"""Clock regions and region graphs for the continuous semantics.

A region over ``n`` clocks with per-clock maximal constants ``M`` is stored
as a pair ``(ints, ranks)``:

* ``ints[i]`` is the integer part of clock ``i``, or ``M[i] + 1`` when the
  clock is beyond its maximal constant;
* ``ranks[i]`` is ``-1`` for a beyond clock, ``0`` for a zero fractional part
  and ``k >= 1`` for the ``k``-th smallest positive fractional part.

Ranks are kept contiguous, so equal regions have equal tuples.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import NamedTuple, Sequence

from .formula import INF, Interval
from .model import ClockConstraint
from .composition import GlobalModel
from .graph import FiniteStructure

BEYOND = -1


class RegionError(ValueError):
    pass


class Region(NamedTuple):
    ints: tuple
    ranks: tuple

    def __str__(self):
        parts = []
        for i, (n, k) in enumerate(zip(self.ints, self.ranks)):
            if k == BEYOND:
                parts.append(f">{n - 1}")
            elif k == 0:
                parts.append(f"={n}")
            else:
                parts.append(f"{n}+f{k}")
        return "[" + " ".join(parts) + "]"


def _normalize(ranks: list) -> tuple:
    used = sorted({k for k in ranks if k > 0})
    remap = {k: j + 1 for j, k in enumerate(used)}
    return tuple(remap.get(k, k) for k in ranks)


def zero_region(max_consts: Sequence[int]) -> Region:
    return Region(tuple(0 for _ in max_consts), tuple(0 for _ in max_consts))


def region_of(v: Sequence, max_consts: Sequence[int]) -> Region:
    """Canonical region of a valuation (floats or Fractions)."""
    ints, fracs = [], []
    for x, m in zip(v, max_consts):
        if x > m:
            ints.append(m + 1)
            fracs.append(None)
        else:
            n = math.floor(x)
            ints.append(n)
            fracs.append(x - n)
    distinct = sorted({f for f in fracs if f is not None and f > 0})
    order = {f: j + 1 for j, f in enumerate(distinct)}
    ranks = tuple(BEYOND if f is None else (0 if f == 0 else order[f]) for f in fracs)
    return Region(tuple(ints), ranks)


def time_successor(r: Region, max_consts: Sequence[int]) -> Region:
    """Immediate successor region under uniform time elapse."""
    ints, ranks = list(r.ints), list(r.ranks)
    live = [i for i, k in enumerate(ranks) if k != BEYOND]
    if not live:
        return r
    zeros = [i for i in live if ranks[i] == 0]
    if zeros:
        for i in live:
            if ranks[i] > 0:
                ranks[i] += 1
        for i in zeros:
            if ints[i] == max_consts[i]:
                ints[i] = max_consts[i] + 1
                ranks[i] = BEYOND
            else:
                ranks[i] = 1
    else:
        top = max(ranks[i] for i in live)
        for i in live:
            if ranks[i] == top:
                ints[i] += 1
                ranks[i] = 0
    return Region(tuple(ints), _normalize(ranks))


def reset_region(r: Region, clocks) -> Region:
    clocks = set(clocks)
    if not clocks:
        return r
    ints = tuple(0 if i in clocks else n for i, n in enumerate(r.ints))
    ranks = [0 if i in clocks else k for i, k in enumerate(r.ranks)]
    return Region(ints, _normalize(ranks))


def _cmp(sign_value: int, exact: bool, rel: str) -> bool:
    """Compare ``value`` with a constant given the integer relation of the
    value's floor to the constant.  ``sign_value`` is -1/0/+1 for
    value-below / value-at / value-above when ``exact``; when not exact the
    value lies strictly between two integers and ``sign_value`` is the
    side it falls on."""
    if rel == "<":
        return sign_value < 0
    if rel == "<=":
        return sign_value <= 0
    if rel == "=":
        return sign_value == 0 and exact
    if rel == ">=":
        return sign_value >= 0
    return sign_value > 0


def _atom_holds(r: Region, a, max_consts) -> bool:
    i = a.clock
    if a.other is None:
        if a.const > max_consts[i]:
            raise RegionError(f"constant {a.const} exceeds max {max_consts[i]} of clock {i}")
        if r.ranks[i] == BEYOND:
            return a.rel in (">", ">=")
        n, frac = r.ints[i], r.ranks[i] > 0
        if n < a.const:
            sign = -1
        elif n > a.const:
            sign = 1
        else:
            sign = 1 if frac else 0
        return _cmp(sign, not frac, a.rel)
    j = a.other
    if r.ranks[i] == BEYOND or r.ranks[j] == BEYOND:
        raise RegionError("difference atom on a clock beyond its maximal constant")
    d = r.ints[i] - r.ints[j]
    fi, fj = r.ranks[i], r.ranks[j]
    # value lies at d (equal fractions), in (d, d+1) or in (d-1, d)
    if fi == fj:
        sign = (d > a.const) - (d < a.const)
        return _cmp(sign, True, a.rel)
    lo = d if fi > fj else d - 1
    sign = -1 if lo + 1 <= a.const else 1
    return _cmp(sign, False, a.rel)


def region_satisfies(r: Region, cc: ClockConstraint, max_consts: Sequence[int]) -> bool:
    return all(_atom_holds(r, a, max_consts) for a in cc.atoms)


def representative(r: Region, max_consts: Sequence[int], rng: random.Random) -> tuple:
    """A random valuation (of Fractions) lying in ``r``."""
    k = max([x for x in r.ranks] + [0])
    fr = sorted({Fraction(rng.randrange(1, 10**6), 10**6) for _ in range(4 * k + 4)})
    while len(fr) < k:
        fr = sorted(set(fr) | {Fraction(rng.randrange(1, 10**6), 10**6)})
    picks = sorted(rng.sample(fr, k))
    out = []
    for n, rank, m in zip(r.ints, r.ranks, max_consts):
        if rank == BEYOND:
            out.append(m + Fraction(rng.randrange(1, 3 * 10**6), 10**6))
        elif rank == 0:
            out.append(Fraction(n))
        else:
            out.append(n + picks[rank - 1])
    return tuple(out)


def _weak_orders(items: list):
    """All ordered set partitions of ``items``."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for order in _weak_orders(rest):
        for k in range(len(order)):
            yield order[:k] + [order[k] | {first}] + order[k + 1:]
        for k in range(len(order) + 1):
            yield order[:k] + [{first}] + order[k:]


def enumerate_regions(max_consts: Sequence[int]) -> list:
    """Every region over clocks with the given maximal constants."""
    n = len(max_consts)
    per_clock = []
    for m in max_consts:
        opts = [("beyond", m + 1)] + [("zero", k) for k in range(m + 1)] + [("frac", k) for k in range(m)]
        per_clock.append(opts)
    out = []
    for combo in itertools.product(*per_clock):
        fracs = [i for i in range(n) if combo[i][0] == "frac"]
        for order in _weak_orders(fracs):
            ranks = [0] * n
            for i in range(n):
                if combo[i][0] == "beyond":
                    ranks[i] = BEYOND
            for j, block in enumerate(order):
                for i in block:
                    ranks[i] = j + 1
            out.append(Region(tuple(c[1] for c in combo), tuple(ranks)))
    return out


def classical_bound(max_consts: Sequence[int]) -> int:
    n = len(max_consts)
    return math.factorial(n) * 2 ** n * math.prod(2 * c + 2 for c in max_consts)


def clock_maxima(m: GlobalModel) -> list:
    """Per-clock maximal constant over all guards and invariants."""
    maxc = [0] * len(m.clocks)
    ccs = [e.guard for e in m.edges] + list(m.invariant)
    for cc in ccs:
        for a in cc.atoms:
            maxc[a.clock] = max(maxc[a.clock], a.const)
            if a.other is not None:
                maxc[a.other] = max(maxc[a.other], a.const)
    return maxc


@dataclass(eq=False)
class RegionGraph(FiniteStructure):
    """Reachable (state, region) pairs of a continuous model.

    When ``formula_clock`` is set the last clock is the formula clock ``z``:
    it is never reset by model edges and ``reset_map`` sends each vertex to
    its ``z := 0`` twin (present in the graph when built with closure)."""
    model: GlobalModel
    max_consts: list
    formula_clock: bool
    vertices: list                  # index -> (state, Region)
    edges: list                     # (src, dst, model edge index or -1 for delay)
    initial: int = 0
    reset_map: list | None = None
    index: dict = field(default_factory=dict)

    kind = "continuous"

    @cached_property
    def vstate(self) -> list:
        return [s for s, _ in self.vertices]

    @property
    def n(self) -> int:
        return len(self.vertices)

    def interval_mask(self, iv: Interval) -> list:
        if iv.trivial:
            return [True] * self.n
        if not self.formula_clock:
            raise RegionError("timed interval needs a region graph with a formula clock")
        z = len(self.max_consts) - 1
        return [_in_interval(r, z, iv, self.max_consts[z]) for _, r in self.vertices]

    def region_count(self) -> int:
        """Distinct regions over the model clocks (formula clock projected out)."""
        k = len(self.model.clocks)
        return len({(r.ints[:k], _normalize(list(r.ranks[:k]))) for _, r in self.vertices})


def _in_interval(r: Region, z: int, iv: Interval, zmax: int) -> bool:
    if r.ranks[z] == BEYOND:
        return iv.hi == INF
    n = r.ints[z]
    if r.ranks[z] > 0:
        # z ranges over the open unit interval (n, n+1); bounds are integers
        return n >= iv.lo and (iv.hi == INF or n + 1 <= iv.hi)
    return iv.contains(n)


class RegionSpace:
    """Region operations for a fixed vector of maximal constants, with
    memoised constraint checks."""

    def __init__(self, max_consts: Sequence[int]):
        self.max_consts = tuple(max_consts)
        self._sat: dict = {}
        self._succ: dict = {}

    def zero(self) -> Region:
        return zero_region(self.max_consts)

    def succ(self, r: Region) -> Region:
        out = self._succ.get(r)
        if out is None:
            out = self._succ[r] = time_successor(r, self.max_consts)
        return out

    def sat(self, r: Region, cc: ClockConstraint) -> bool:
        if not cc.atoms:
            return True
        key = (r, cc)
        out = self._sat.get(key)
        if out is None:
            out = self._sat[key] = region_satisfies(r, cc, self.max_consts)
        return out

    def reset(self, r: Region, clocks) -> Region:
        return reset_region(r, clocks)


def build_region_graph(m: GlobalModel, formula_max: int = 0, formula_clock: bool | None = None,
                       closure: bool = True, clock_max=None) -> RegionGraph:
    """Region graph of ``m`` from ``(initial, 0)``.

    ``formula_clock`` defaults to ``formula_max > 0``.  With ``closure`` the
    ``z := 0`` twin of every vertex is explored too, so timed operators can be
    evaluated from any configuration.  ``clock_max`` overrides the model
    clocks' maximal constants (it may not go below them)."""
    if formula_clock is None:
        formula_clock = formula_max > 0
    maxc = clock_maxima(m)
    if clock_max is not None:
        if len(clock_max) != len(maxc) or any(a < b for a, b in zip(clock_max, maxc)):
            raise RegionError("clock_max must cover every model clock's constants")
        maxc = list(clock_max)
    if formula_clock:
        maxc.append(formula_max)
    z = len(maxc) - 1 if formula_clock else None
    space = RegionSpace(maxc)
    vertices: list = []
    index: dict = {}
    edges: list = []
    reset_map: list = []
    stack: list = []

    def intern(key) -> int:
        k = index.get(key)
        if k is None:
            k = index[key] = len(vertices)
            vertices.append(key)
            reset_map.append(None)
            stack.append(k)
        return k

    intern((m.initial, space.zero()))
    while stack:
        v = stack.pop()
        s, r = vertices[v]
        if formula_clock and closure:
            reset_map[v] = intern((s, reset_region(r, (z,))))
        else:
            reset_map[v] = v
        inv = m.invariant[s]
        if not space.sat(r, inv):
            continue
        r2 = space.succ(r)
        if r2 != r and space.sat(r2, inv):
            edges.append((v, intern((s, r2)), -1))
        for e in m.out_edges[s]:
            edge = m.edges[e]
            if not space.sat(r, edge.guard):
                continue
            r3 = reset_region(r, edge.resets)
            if space.sat(r3, m.invariant[edge.dst]):
                edges.append((v, intern((edge.dst, r3)), e))
    return RegionGraph(m, maxc, formula_clock, vertices, edges, 0, reset_map, index)
