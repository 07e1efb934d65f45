"""Agents, systems and clock arithmetic."""
from __future__ import annotations

import json
import operator
import re
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

import jsonschema

RELATIONS = {
    "<=": operator.le,
    "<": operator.lt,
    "=": operator.eq,
    ">": operator.gt,
    ">=": operator.ge,
}


class ModelError(ValueError):
    """Raised for malformed model documents; ``path`` is a JSON pointer."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class Atom:
    """``clock ~ c`` or, with ``other`` set, ``clock - other ~ c``."""
    clock: Any
    rel: str
    const: int
    other: Any = None

    def rename(self, mapping: Mapping) -> "Atom":
        other = None if self.other is None else mapping[self.other]
        return Atom(mapping[self.clock], self.rel, self.const, other)

    def __str__(self):
        lhs = self.clock if self.other is None else f"{self.clock} - {self.other}"
        return f"{lhs} {self.rel} {self.const}"


@dataclass(frozen=True)
class ClockConstraint:
    atoms: tuple = ()

    @property
    def is_true(self) -> bool:
        return not self.atoms

    def clocks(self) -> set:
        out = set()
        for a in self.atoms:
            out.add(a.clock)
            if a.other is not None:
                out.add(a.other)
        return out

    def rename(self, mapping: Mapping) -> "ClockConstraint":
        return ClockConstraint(tuple(a.rename(mapping) for a in self.atoms))

    def __and__(self, other: "ClockConstraint") -> "ClockConstraint":
        return ClockConstraint(self.atoms + other.atoms)

    def __str__(self):
        return " & ".join(str(a) for a in self.atoms) if self.atoms else "true"


TRUE_CC = ClockConstraint()

_ATOM_RE = re.compile(
    r"^\s*([A-Za-z_][\w.]*)\s*(?:-\s*([A-Za-z_][\w.]*)\s*)?(<=|>=|==|=|<|>)\s*(\d+)\s*$")
_REV_ATOM_RE = re.compile(r"^\s*(\d+)\s*(<=|>=|==|=|<|>)\s*([A-Za-z_][\w.]*)\s*$")
_FLIP = {"<=": ">=", "<": ">", "=": "=", ">": "<", ">=": "<="}


def parse_constraint(text: str | None) -> ClockConstraint:
    """Parse ``x <= 3 & x - y > 1 & 1 <= t``; ``true``/empty means no atoms."""
    if text is None or text.strip() in ("", "true"):
        return TRUE_CC
    atoms = []
    for part in text.split("&"):
        if part.strip() == "true":
            continue
        m = _ATOM_RE.match(part)
        if m:
            clock, other, rel, const = m.groups()
            atoms.append(Atom(clock, "=" if rel == "==" else rel, int(const), other))
            continue
        m = _REV_ATOM_RE.match(part)
        if m:
            const, rel, clock = m.groups()
            rel = "=" if rel == "==" else rel
            atoms.append(Atom(clock, _FLIP[rel], int(const)))
            continue
        raise ModelError(f"bad clock constraint atom {part.strip()!r}")
    return ClockConstraint(tuple(atoms))


def eval_constraint(cc: ClockConstraint, v: Sequence) -> bool:
    """Truth of ``cc`` at valuation ``v``; atoms must reference clock indices."""
    for a in cc.atoms:
        try:
            lhs = v[a.clock] if a.other is None else v[a.clock] - v[a.other]
        except (IndexError, TypeError):
            raise ModelError(f"unknown clock index in atom {a}") from None
        if not RELATIONS[a.rel](lhs, a.const):
            return False
    return True


def delay(v: Sequence, d) -> tuple:
    if d < 0:
        raise ValueError("negative delay")
    return tuple(x + d for x in v)


def reset(v: Sequence, clocks) -> tuple:
    clocks = set(clocks)
    bad = [c for c in clocks if not (isinstance(c, int) and 0 <= c < len(v))]
    if bad:
        raise ModelError(f"unknown clock index {bad[0]!r}")
    return tuple(0 * x if i in clocks else x for i, x in enumerate(v))


# -- agents and systems -----------------------------------------------------

@dataclass(frozen=True)
class Transition:
    src: str
    action: str
    dst: str
    guard: ClockConstraint = TRUE_CC
    resets: frozenset = frozenset()
    duration: int = 1
    # synchronous mode only: required action components of other agents
    sync_with: tuple = ()


@dataclass(frozen=True)
class AgentSpec:
    name: str
    locals: tuple
    initial: str
    actions: tuple
    protocol: Mapping
    transitions: tuple = ()
    clocks: tuple = ()
    invariants: Mapping = field(default_factory=dict)
    labels: Mapping = field(default_factory=dict)

    def props(self) -> set:
        return {p for ps in self.labels.values() for p in ps}

    def invariant(self, local: str) -> ClockConstraint:
        return self.invariants.get(local, TRUE_CC)

    def transitions_from(self, local: str, action: str | None = None) -> list:
        return [t for t in self.transitions
                if t.src == local and (action is None or t.action == action)]


@dataclass(frozen=True)
class SystemSpec:
    agents: tuple
    coordination: str = "sync"
    semantics: str = "continuous"

    @property
    def names(self) -> list:
        return [a.name for a in self.agents]

    def agent(self, name: str) -> AgentSpec:
        for a in self.agents:
            if a.name == name:
                return a
        raise KeyError(f"unknown agent {name!r}")

    def index(self, name: str) -> int:
        for i, a in enumerate(self.agents):
            if a.name == name:
                return i
        raise KeyError(f"unknown agent {name!r}")

    def movers(self, event: str) -> list:
        """``Agent(event)``: indices of agents whose alphabet contains it."""
        return [i for i, a in enumerate(self.agents) if event in a.actions]

    def with_semantics(self, semantics: str) -> "SystemSpec":
        return replace(self, semantics=semantics)


@dataclass(frozen=True)
class Diagnostic:
    rule: str
    agent: str
    location: str
    message: str

    def __str__(self):
        where = f"{self.agent}:{self.location}" if self.location else self.agent
        return f"{self.rule} at {where}: {self.message}"


def validate(spec: SystemSpec) -> list[Diagnostic]:
    """Check agent and system side conditions; empty list means valid."""
    out: list[Diagnostic] = []

    def diag(rule, agent, loc, msg):
        out.append(Diagnostic(rule, agent, loc, msg))

    if spec.coordination not in ("sync", "async"):
        diag("bad-coordination", "", "", f"unknown coordination {spec.coordination!r}")
    if spec.semantics not in ("continuous", "discrete", "untimed"):
        diag("bad-semantics", "", "", f"unknown semantics {spec.semantics!r}")
    if not spec.agents:
        diag("at-least-one-agent", "", "", "system has no agents")
    seen = set()
    for a in spec.agents:
        if a.name in seen:
            diag("duplicate-agent", a.name, "", "agent name used twice")
        seen.add(a.name)
    names = set(seen)

    for a in spec.agents:
        locs = set(a.locals)
        clocks = set(a.clocks)
        if not a.locals:
            diag("empty-locals", a.name, "", "no local states")
        if len(locs) != len(a.locals):
            diag("duplicate-local", a.name, "", "local state listed twice")
        if a.initial not in locs:
            diag("bad-initial", a.name, a.initial, "initial state is not a local state")
        if not a.actions:
            diag("empty-actions", a.name, "", "no actions")
        if spec.semantics in ("untimed", "discrete") and a.clocks:
            diag(f"{spec.semantics}-has-clocks", a.name, "", "clocks are not allowed here")
        for loc in a.locals:
            acts = a.protocol.get(loc, ())
            if not acts:
                diag("empty-protocol", a.name, loc, "protocol allows no action")
            for act in acts:
                if act not in a.actions:
                    diag("protocol-unknown-action", a.name, loc, f"{act!r} not in the agent's actions")
                elif not a.transitions_from(loc, act):
                    diag("protocol-action-without-transition", a.name, loc,
                         f"no local transition for {act!r}")
        for loc in a.protocol:
            if loc not in locs:
                diag("unknown-local", a.name, loc, "protocol for an undeclared local state")
        for loc, cc in a.invariants.items():
            if loc not in locs:
                diag("unknown-local", a.name, loc, "invariant for an undeclared local state")
            if not cc.clocks() <= clocks:
                diag("unknown-clock", a.name, loc, f"invariant uses {sorted(cc.clocks() - clocks)}")
            if spec.semantics != "continuous" and not cc.is_true:
                diag(f"{spec.semantics}-has-invariant", a.name, loc, "invariants need clocks")
        for loc in a.labels:
            if loc not in locs:
                diag("unknown-local", a.name, loc, "labels for an undeclared local state")
        for k, t in enumerate(a.transitions):
            where = f"{t.src}-{t.action}->{t.dst}"
            if t.src not in locs or t.dst not in locs:
                diag("unknown-local", a.name, where, "transition endpoint is not a local state")
            elif t.action not in a.protocol.get(t.src, ()):
                diag("transition-not-in-protocol", a.name, where, f"{t.action!r} not allowed at {t.src}")
            if t.action not in a.actions:
                diag("transition-unknown-action", a.name, where, f"{t.action!r} not in the agent's actions")
            if not (t.guard.clocks() | set(t.resets)) <= clocks:
                diag("unknown-clock", a.name, where, "guard or reset uses an undeclared clock")
            if spec.semantics != "continuous" and not t.guard.is_true:
                diag(f"{spec.semantics}-has-guard", a.name, where, "guards need clocks")
            if spec.semantics == "discrete" and t.duration < 1:
                diag("non-positive-duration", a.name, where, f"duration {t.duration} < 1")
            if t.sync_with:
                if spec.coordination != "sync":
                    diag("sync-with-in-async", a.name, where, "sync_with needs synchronous coordination")
                for other, act in t.sync_with:
                    if other not in names or other == a.name:
                        diag("sync-with-unknown-agent", a.name, where, f"bad agent {other!r}")
                    elif act not in spec.agent(other).actions:
                        diag("sync-with-unknown-action", a.name, where, f"{other} has no action {act!r}")
    return out


# -- JSON front-end ---------------------------------------------------------

MODEL_SCHEMA = {
    "type": "object",
    "required": ["agents"],
    "properties": {
        "coordination": {"enum": ["sync", "async"]},
        "semantics": {"enum": ["continuous", "discrete", "untimed"]},
        "agents": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "locals", "initial"],
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "locals": {"type": "array", "items": {"type": "string"}},
                    "initial": {"type": "string"},
                    "actions": {"type": "array", "items": {"type": "string"}},
                    "clocks": {"type": "array", "items": {"type": "string"}},
                    "protocol": {"type": "object",
                                 "additionalProperties": {"type": "array", "items": {"type": "string"}}},
                    "invariants": {"type": "object", "additionalProperties": {"type": "string"}},
                    "labels": {"type": "object",
                               "additionalProperties": {"type": "array", "items": {"type": "string"}}},
                    "transitions": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["from", "action", "to"],
                            "properties": {
                                "from": {"type": "string"},
                                "action": {"type": "string"},
                                "to": {"type": "string"},
                                "guard": {"type": "string"},
                                "reset": {"type": "array", "items": {"type": "string"}},
                                "duration": {"type": "integer"},
                                "sync_with": {"type": "object",
                                              "additionalProperties": {"type": "string"}},
                            },
                            "additionalProperties": False,
                        },
                    },
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path) if path else ""


def _agent_from_doc(doc: dict, where: str) -> AgentSpec:
    locals_ = tuple(doc["locals"])
    transitions = []
    for k, t in enumerate(doc.get("transitions", [])):
        try:
            guard = parse_constraint(t.get("guard"))
        except ModelError as exc:
            raise ModelError(str(exc), f"{where}/transitions/{k}/guard") from None
        transitions.append(Transition(
            src=t["from"], action=t["action"], dst=t["to"], guard=guard,
            resets=frozenset(t.get("reset", ())), duration=t.get("duration", 1),
            sync_with=tuple(sorted(t.get("sync_with", {}).items()))))
    if "protocol" in doc:
        protocol = {loc: tuple(acts) for loc, acts in doc["protocol"].items()}
    else:
        protocol = {}
        for t in transitions:
            acts = protocol.setdefault(t.src, ())
            if t.action not in acts:
                protocol[t.src] = acts + (t.action,)
    if "actions" in doc:
        actions = tuple(doc["actions"])
    else:
        seen: dict = {}
        for loc in locals_:
            for act in protocol.get(loc, ()):
                seen.setdefault(act, None)
        for t in transitions:
            seen.setdefault(t.action, None)
        actions = tuple(seen)
    invariants = {}
    for loc, text in doc.get("invariants", {}).items():
        try:
            invariants[loc] = parse_constraint(text)
        except ModelError as exc:
            raise ModelError(str(exc), f"{where}/invariants/{loc}") from None
    return AgentSpec(
        name=doc["name"], locals=locals_, initial=doc["initial"], actions=actions,
        protocol=protocol, transitions=tuple(transitions), clocks=tuple(doc.get("clocks", ())),
        invariants=invariants,
        labels={loc: tuple(ps) for loc, ps in doc.get("labels", {}).items()})


def parse_model(document: str | Mapping) -> SystemSpec:
    """Build a :class:`SystemSpec` from a JSON document (text or decoded)."""
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ModelError(f"invalid JSON: {exc}") from None
    if isinstance(document, Mapping) and document.get("agents") == []:
        raise ModelError("at-least-one-agent: system has no agents", "/agents")
    validator = jsonschema.Draft7Validator(MODEL_SCHEMA)
    errors = sorted(validator.iter_errors(document), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ModelError(err.message, _pointer(err.absolute_path))
    agents = tuple(_agent_from_doc(a, f"/agents/{i}") for i, a in enumerate(document["agents"]))
    return SystemSpec(agents=agents,
                      coordination=document.get("coordination", "sync"),
                      semantics=document.get("semantics", "continuous"))


def load_model(path) -> SystemSpec:
    with open(path) as fh:
        return parse_model(fh.read())


def spec_to_dict(spec: SystemSpec) -> dict:
    agents = []
    for a in spec.agents:
        doc = {
            "name": a.name,
            "locals": list(a.locals),
            "initial": a.initial,
            "actions": list(a.actions),
            "clocks": list(a.clocks),
            "protocol": {loc: list(acts) for loc, acts in a.protocol.items()},
            "invariants": {loc: str(cc) for loc, cc in a.invariants.items() if not cc.is_true},
            "labels": {loc: list(ps) for loc, ps in a.labels.items() if ps},
            "transitions": [],
        }
        for t in a.transitions:
            td = {"from": t.src, "action": t.action, "to": t.dst}
            if not t.guard.is_true:
                td["guard"] = str(t.guard)
            if t.resets:
                td["reset"] = sorted(t.resets)
            if t.duration != 1:
                td["duration"] = t.duration
            if t.sync_with:
                td["sync_with"] = dict(t.sync_with)
            doc["transitions"].append(td)
        agents.append(doc)
    return {"coordination": spec.coordination, "semantics": spec.semantics, "agents": agents}
