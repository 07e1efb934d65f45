"""Discrete-time semantics: global states paired with a saturated
elapsed-time counter."""
from __future__ import annotations

from functools import cached_property

from .formula import INF, Interval
from .composition import GlobalModel
from .graph import FiniteStructure

TOP = "T"


def saturate(d, c_max: int):
    if d == TOP or d > c_max:
        return TOP
    return d


def interval_member(d, iv: Interval) -> bool:
    """``d`` is a counter value or ``TOP`` (strictly above every endpoint)."""
    if d == TOP:
        return iv.hi == INF
    return iv.contains(d)


class TimedStateGraph(FiniteStructure):
    kind = "discrete"

    def __init__(self, model: GlobalModel, c_max: int, vertices: list, edges: list, index: dict):
        self.model = model
        self.c_max = c_max
        self.vertices = vertices        # (state, counter)
        self.edges = edges
        self.index = index
        self.initial = index[(model.initial, 0)]
        self.reset_map = [index[(s, 0)] for s, _ in vertices]

    @property
    def n(self) -> int:
        return len(self.vertices)

    @cached_property
    def vstate(self) -> list:
        return [s for s, _ in self.vertices]

    def interval_mask(self, iv: Interval) -> list:
        return [interval_member(d, iv) for _, d in self.vertices]


def build_dts(m: GlobalModel, c_max: int) -> TimedStateGraph:
    """All ``(s, d)`` reachable from some ``(s', 0)`` with ``s'`` a state of
    ``m``; counters saturate to ``TOP`` above ``c_max``."""
    vertices: list = []
    index: dict = {}
    stack: list = []

    def intern(key):
        k = index.get(key)
        if k is None:
            k = index[key] = len(vertices)
            vertices.append(key)
            stack.append(k)
        return k

    intern((m.initial, 0))
    for s in range(len(m.states)):
        intern((s, 0))
    edges = []
    while stack:
        v = stack.pop()
        s, d = vertices[v]
        for e in m.out_edges[s]:
            edge = m.edges[e]
            d2 = TOP if d == TOP else saturate(d + edge.duration, c_max)
            edges.append((v, intern((edge.dst, d2)), e))
    return TimedStateGraph(m, c_max, vertices, edges, index)
