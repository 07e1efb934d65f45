"""Finite structures the fixpoint engine runs on.

Every structure exposes dense vertex indices, an edge list of
``(src, dst, model_edge)`` triples (``model_edge`` is ``-1`` for delay
edges), the global state of each vertex, and a ``reset_map`` sending a
vertex to the configuration where the formula clock or elapsed-time counter
is zero.  Strategies prune by model edge, so the same structure is shared by
every strategy check.
"""
from __future__ import annotations

from functools import cached_property

from .formula import Interval
from .composition import GlobalModel


class TimedOperatorError(ValueError):
    pass


class FiniteStructure:
    kind = "abstract"
    model: GlobalModel
    edges: list
    initial: int
    reset_map: list | None

    @property
    def n(self) -> int:
        raise NotImplementedError

    @property
    def vstate(self) -> list:
        raise NotImplementedError

    @cached_property
    def succ(self) -> list:
        out = [[] for _ in range(self.n)]
        for src, dst, e in self.edges:
            out[src].append((dst, e))
        return out

    @cached_property
    def pred(self) -> list:
        out = [[] for _ in range(self.n)]
        for src, dst, e in self.edges:
            out[dst].append((src, e))
        return out

    def resets(self) -> list:
        return self.reset_map if self.reset_map is not None else list(range(self.n))

    def interval_mask(self, iv: Interval) -> list:
        raise NotImplementedError

    def labels(self, prop: str) -> list:
        val = self.model.valuation
        return [prop in val[s] for s in self.vstate]


class UntimedGraph(FiniteStructure):
    """The global model itself, one vertex per global state."""
    kind = "untimed"

    def __init__(self, model: GlobalModel):
        self.model = model
        self.edges = [(e.src, e.dst, k) for k, e in enumerate(model.edges)]
        self.initial = model.initial
        self.reset_map = None

    @property
    def n(self) -> int:
        return len(self.model.states)

    @cached_property
    def vstate(self) -> list:
        return list(range(self.n))

    def interval_mask(self, iv: Interval) -> list:
        if not iv.trivial:
            raise TimedOperatorError(f"timed interval {iv} on an untimed structure")
        return [True] * self.n
