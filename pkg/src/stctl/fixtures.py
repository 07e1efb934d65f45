"""Generated systems used by the tests, the benchmark and the CLI.

Voting: ``v`` voters and an election authority ``EA``.  A voter registers
for one modality (mail ``m``, internet ``i`` or polling station ``p``),
receives a package for it, votes for one of ``c`` candidates and then idles.
Every step is an event shared with ``EA``, which owns two clocks: ``t``
(global election time, never reset) and ``x`` (reset on registration, so
that the package is handed out immediately).  ``EA``'s windows:

=================  ==================
registration       mail t<=1, internet t<=6, polling t<=10
votes              mail 1<=t<=7, internet 6<=t<=9, polling 10<=t<=11
close              t=11, then EA idles
=================  ==================

The discrete twin drops clocks, guards and invariants and gives every
transition duration 1; it exists for cross-semantics tests only.
"""
from __future__ import annotations

from .model import SystemSpec, parse_model

MODALITIES = ("m", "i", "p")
REGISTER_GUARD = {"m": "t <= 1", "i": "t <= 6", "p": "t <= 10"}
VOTE_GUARD = {"m": "1 <= t & t <= 7", "i": "6 <= t & t <= 9", "p": "10 <= t & t <= 11"}


def voter_doc(j: int, c: int) -> dict:
    locals_ = ["q0"] + [f"reg_{m}" for m in MODALITIES] + [f"pack_{m}" for m in MODALITIES]
    locals_ += [f"voted_{m}_{k}" for m in MODALITIES for k in range(1, c + 1)]
    tr = []
    for m in MODALITIES:
        tr.append({"from": "q0", "action": f"reg_{m}_{j}", "to": f"reg_{m}"})
    for m in MODALITIES:
        tr.append({"from": f"reg_{m}", "action": f"pack_{m}_{j}", "to": f"pack_{m}"})
    for m in MODALITIES:
        for k in range(1, c + 1):
            tr.append({"from": f"pack_{m}", "action": f"vote{k}_{m}_{j}", "to": f"voted_{m}_{k}"})
    for m in MODALITIES:
        for k in range(1, c + 1):
            tr.append({"from": f"voted_{m}_{k}", "action": f"idle_{j}", "to": f"voted_{m}_{k}"})
    labels = {f"voted_{m}_{k}": [f"v{k}_{j}"] for m in MODALITIES for k in range(1, c + 1)}
    return {"name": f"voter{j}", "locals": locals_, "initial": "q0", "transitions": tr,
            "labels": labels}


def authority_doc(v: int, c: int) -> dict:
    locals_ = ["start"] + [f"wait_{m}_{j}" for j in range(1, v + 1) for m in MODALITIES] + ["closed"]
    tr = []
    invariants = {"start": "t <= 11"}
    for j in range(1, v + 1):
        for m in MODALITIES:
            tr.append({"from": "start", "action": f"reg_{m}_{j}", "guard": REGISTER_GUARD[m],
                       "reset": ["x"], "to": f"wait_{m}_{j}"})
            tr.append({"from": f"wait_{m}_{j}", "action": f"pack_{m}_{j}", "to": "start"})
            invariants[f"wait_{m}_{j}"] = "x <= 0"
    for j in range(1, v + 1):
        for m in MODALITIES:
            for k in range(1, c + 1):
                tr.append({"from": "start", "action": f"vote{k}_{m}_{j}",
                           "guard": VOTE_GUARD[m], "to": "start"})
    tr.append({"from": "start", "action": "close", "guard": "t = 11", "to": "closed"})
    tr.append({"from": "closed", "action": "idle_EA", "to": "closed"})
    return {"name": "EA", "locals": locals_, "initial": "start", "clocks": ["t", "x"],
            "invariants": invariants, "transitions": tr}


def voting_doc(v: int, c: int, discrete: bool = False) -> dict:
    if v < 1 or c < 1:
        raise ValueError("need at least one voter and one candidate")
    agents = [voter_doc(j, c) for j in range(1, v + 1)] + [authority_doc(v, c)]
    if discrete:
        for a in agents:
            a.pop("clocks", None)
            a.pop("invariants", None)
            for t in a["transitions"]:
                t.pop("guard", None)
                t.pop("reset", None)
                t["duration"] = 1
    return {"coordination": "async", "semantics": "discrete" if discrete else "continuous",
            "agents": agents}


def gen_voting(v: int, c: int, discrete: bool = False) -> SystemSpec:
    return parse_model(voting_doc(v, c, discrete))


def voting_formula(k: int, interval: str = "[0,8]", candidate: int = 1) -> str:
    """``<<voter1..voterk>> E F[0,8] (v1_1 & ... & v1_k)``"""
    coalition = ",".join(f"voter{j}" for j in range(1, k + 1))
    goal = " & ".join(f"v{candidate}_{j}" for j in range(1, k + 1))
    return f"<<{coalition}>> E F{interval} ({goal})"


# -- expressivity pair ----------------------------------------------------------

def _template_a() -> list:
    one = {
        "name": "1", "locals": ["q0", "q1", "q2", "q3"], "initial": "q0",
        "protocol": {"q0": ["a"], "q1": ["a1", "a2"], "q2": ["a"], "q3": ["a1", "a2"]},
        "labels": {"q2": ["p"]},
        "transitions": [
            {"from": "q0", "action": "a", "to": "q1", "sync_with": {"2": "b1"}},
            {"from": "q0", "action": "a", "to": "q3", "sync_with": {"2": "b2"}},
            {"from": "q1", "action": "a1", "to": "q1"},
            {"from": "q1", "action": "a2", "to": "q2"},
            {"from": "q3", "action": "a1", "to": "q3"},
            {"from": "q3", "action": "a2", "to": "q2"},
            {"from": "q2", "action": "a", "to": "q2"},
        ],
    }
    two = {
        "name": "2", "locals": ["q0", "q1", "q2", "q3"], "initial": "q0",
        "protocol": {"q0": ["b1", "b2"], "q1": ["b"], "q2": ["b"], "q3": ["b"]},
        "labels": {"q2": ["p"]},
        "transitions": [
            {"from": "q0", "action": "b1", "to": "q1"},
            {"from": "q0", "action": "b2", "to": "q3"},
            {"from": "q1", "action": "b", "to": "q1", "sync_with": {"1": "a1"}},
            {"from": "q1", "action": "b", "to": "q2", "sync_with": {"1": "a2"}},
            {"from": "q3", "action": "b", "to": "q3", "sync_with": {"1": "a1"}},
            {"from": "q3", "action": "b", "to": "q2", "sync_with": {"1": "a2"}},
            {"from": "q2", "action": "b", "to": "q2"},
        ],
    }
    return [one, two]


def _template_a_prime() -> list:
    one = {
        "name": "1", "locals": ["q0", "q1", "q2"], "initial": "q0",
        "protocol": {"q0": ["a"], "q1": ["a1", "a2"], "q2": ["a"]},
        "labels": {"q2": ["p"]},
        "transitions": [
            {"from": "q0", "action": "a", "to": "q1"},
            {"from": "q1", "action": "a1", "to": "q1"},
            {"from": "q1", "action": "a2", "to": "q2"},
            {"from": "q2", "action": "a", "to": "q2"},
        ],
    }
    two = {
        "name": "2", "locals": ["q0", "q1", "q2"], "initial": "q0",
        "protocol": {"q0": ["b1", "b2"], "q1": ["b"], "q2": ["b"]},
        "labels": {"q2": ["p"]},
        "transitions": [
            {"from": "q0", "action": "b1", "to": "q1"},
            {"from": "q0", "action": "b2", "to": "q1"},
            {"from": "q1", "action": "b", "to": "q1", "sync_with": {"1": "a1"}},
            {"from": "q1", "action": "b", "to": "q2", "sync_with": {"1": "a2"}},
            {"from": "q2", "action": "b", "to": "q2"},
        ],
    }
    return [one, two]


def expressivity_docs(semantics: str = "untimed") -> tuple:
    return tuple({"coordination": "sync", "semantics": semantics, "agents": agents}
                 for agents in (_template_a(), _template_a_prime()))


def gen_expressivity(semantics: str = "untimed") -> tuple:
    """``(S, S')``: two-agent synchronous systems over templates a and a'.
    In template a the first joint step branches to q1 or q3 on the second
    agent's choice; in a' both choices lead to the single state q1."""
    return tuple(parse_model(d) for d in expressivity_docs(semantics))


EXPRESSIVITY_FORMULA = "<<1>>(E F p & E G !p)"
