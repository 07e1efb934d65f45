import json
import random

import pytest

from stctl import fixtures
from stctl.composition import compose
from stctl.engine import EngineError
from stctl.formula import Coalition, parse_formula, walk
from stctl.model import parse_model
from stctl.oracle import random_formula, random_system
from stctl.strategy import (StrategyError, StrategySpace, check_strategic,
                            enumerate_strategies, prune, synth_all, verify_witness)

PHI1 = parse_formula(fixtures.voting_formula(1))
EXPR = parse_formula(fixtures.EXPRESSIVITY_FORMULA)

# [DERIVED] product of protocol sizes over the voter's 13 locals (c = 2):
# q0 offers 3 modalities, each package 2 candidates, the rest 1 action
VOTER_IR_COUNT = 3 * 1 * 1 * 1 * 2 * 2 * 2
# [DERIVED] hand enumeration for v = 1: mail or internet registration, then
# candidate 1 at that package; the other package's choice is free (2 x 2 x 2)
VOTING_1_WINNERS = 8


def test_voter_strategy_count():
    spec = fixtures.gen_voting(1, 2)
    strategies = list(enumerate_strategies(spec, ["voter1"], "ir"))
    assert VOTER_IR_COUNT == 24
    assert len(strategies) == VOTER_IR_COUNT
    assert len(set(strategies)) == len(strategies)
    assert StrategySpace(compose(spec).network, ["voter1"], "ir").count() == 24


def test_enumeration_order_is_lexicographic():
    spec = fixtures.gen_voting(1, 2)
    first, second = list(enumerate_strategies(spec, ["voter1"]))[:2]
    space = StrategySpace(compose(spec).network, ["voter1"], "ir")
    d1, d2 = first.to_dict(space)["voter1"], second.to_dict(space)["voter1"]
    assert d1["q0"] == "reg_m_1"
    assert d1["pack_p"] == "vote1_p_1" and d2["pack_p"] == "vote2_p_1"
    assert [k for k in d1] == list(spec.agent("voter1").locals)


def test_trivial_counts():
    m = compose(fixtures.gen_voting(1, 2))
    solo = parse_model({"semantics": "untimed", "agents": [
        {"name": "a", "locals": ["l0", "l1"], "initial": "l0",
         "transitions": [{"from": "l0", "action": "x", "to": "l1"},
                         {"from": "l1", "action": "y", "to": "l0"}]}]})
    assert len(list(enumerate_strategies(solo, ["a"], "ir"))) == 1
    assert len(list(enumerate_strategies(solo, ["a"], "Ir"))) == 1
    assert len(list(enumerate_strategies(m, [], "ir"))) == 1
    assert len(list(enumerate_strategies(m, [], "Ir"))) == 1


def test_strategy_errors():
    spec = fixtures.gen_voting(1, 2)
    with pytest.raises(StrategyError) as info:
        list(enumerate_strategies(spec, ["nobody"]))
    assert info.value.rule == "unknown-agent"
    for kind in ("iR", "IR"):
        with pytest.raises(StrategyError) as info:
            check_strategic(spec, PHI1, kind)
        assert info.value.rule == "unsupported-strategy-class"
    with pytest.raises(StrategyError):
        check_strategic(spec, parse_formula("<<ghost>> E F v1_1"))
    with pytest.raises(EngineError):
        check_strategic(spec, parse_formula("<<voter1>> E X v1_1"))


def test_ir_strategies_respect_protocol():
    spec = fixtures.gen_voting(1, 2)
    m = compose(spec)
    net = m.network
    for sigma in enumerate_strategies(spec, ["voter1"]):
        for l, act in enumerate(sigma.maps[0]):
            assert act in net.protocol[0][l]
    for sigma in list(enumerate_strategies(m, ["voter1"], "Ir"))[:50]:
        for k, s in enumerate(m.states):
            assert sigma.maps[0][k] in net.protocol[0][s[0]]


def _mail_vote1(spec):
    for sigma in enumerate_strategies(spec, ["voter1"]):
        space = StrategySpace(compose(spec).network, ["voter1"], "ir")
        d = sigma.to_dict(space)["voter1"]
        if d["q0"] == "reg_m_1" and d["pack_m"] == "vote1_m_1":
            return sigma, space


def test_prune_voting_mail_strategy():
    spec = fixtures.gen_voting(1, 2)
    m = compose(spec)
    sigma, space = _mail_vote1(spec)
    pruned = prune(m, sigma, space)
    labels = {str(pruned.edges[e].label) for e in pruned.out_edges[pruned.initial]}
    assert "reg_m_1" in labels and "reg_i_1" not in labels and "reg_p_1" not in labels
    # EA's own close event is not constrained by the voter's strategy
    assert all(str(e.label) != "vote2_m_1" for e in pruned.edges)


def test_prune_empty_coalition_is_identity():
    m = compose(fixtures.gen_voting(1, 2))
    sigma = next(enumerate_strategies(m, []))
    assert len(prune(m, sigma).edges) == len(m.edges)


def test_full_coalition_prune_is_deterministic():
    for seed in range(40):
        spec = random_system({"coordination": "sync", "semantics": "untimed"}, seed)
        if len({(a.name, t.src, t.action) for a in spec.agents for t in a.transitions}) != \
                sum(len(a.transitions) for a in spec.agents):
            continue
        m = compose(spec)
        sigma = next(enumerate_strategies(m, spec.names, "Ir"))
        pruned = prune(m, sigma)
        assert all(len(out) <= 1 for out in pruned.out_edges)


def test_prune_keeps_delay_edges():
    from stctl.regions import build_region_graph
    m = compose(fixtures.gen_voting(1, 2))
    rg = build_region_graph(m, 0)
    sigma, space = _mail_vote1(fixtures.gen_voting(1, 2))
    pruned = prune(rg, sigma, space)
    assert [e for e in pruned.edges if e[2] < 0] == [e for e in rg.edges if e[2] < 0]
    assert len(pruned.edges) < len(rg.edges)


@pytest.mark.parametrize("kind", ["ir", "Ir"])
def test_expressivity_verdicts(kind):
    m, m2 = fixtures.gen_expressivity()
    assert check_strategic(m, EXPR, kind).holds
    assert not check_strategic(m2, EXPR, kind).holds


def test_empty_coalition_always_globally_true():
    for spec in (fixtures.gen_voting(1, 2), *fixtures.gen_expressivity(),
                 *(random_system(seed=s) for s in range(20))):
        assert check_strategic(spec, parse_formula("<<>> A G true")).holds


def test_voting_witness_and_verdict_json():
    spec = fixtures.gen_voting(1, 2)
    v = check_strategic(spec, PHI1, witness=True)
    assert v.holds
    d = v.witness.to_dict(v.space)["voter1"]
    assert d["q0"] in ("reg_m_1", "reg_i_1")
    assert d["pack_" + d["q0"][4]] == "vote1_" + d["q0"][4] + "_1"
    doc = json.loads(v.to_json())
    assert doc["holds"] is True and set(doc["witness"]) == {"voter1"}
    assert doc["stats"]["strategies_examined"] >= 1
    assert verify_witness(spec, PHI1, v.witness)


def test_synth_all_voting():
    spec = fixtures.gen_voting(1, 2)
    winners = synth_all(spec, PHI1)
    assert len(winners) == VOTING_1_WINNERS
    space = StrategySpace(compose(spec).network, ["voter1"], "ir")
    for sigma in winners:
        d = sigma.to_dict(space)["voter1"]
        mod = d["q0"][4]
        assert mod in ("m", "i")
        assert d[f"pack_{mod}"] == f"vote1_{mod}_1"
    # the global engine agrees strategy by strategy
    for sigma in enumerate_strategies(spec, ["voter1"]):
        expect = sigma in winners
        assert check_strategic(spec, PHI1, engine="global", only=sigma).holds == expect
        assert check_strategic(spec, PHI1, engine="local", only=sigma).holds == expect
    assert synth_all(spec, PHI1, engine="global") == winners


def test_synth_all_edge_cases():
    spec = fixtures.gen_voting(1, 2)
    assert synth_all(spec, parse_formula("<<voter1>> E F nowhere")) == []
    assert len(synth_all(spec, parse_formula("<<>> E F v1_1"))) <= 1
    with pytest.raises(StrategyError):
        synth_all(spec, parse_formula("v1_1"))


@pytest.mark.parametrize("iv, expect", [
    ("[0,0]", False), ("[0,1)", False), ("[0,1]", True), ("(7,8]", True), ("[9,9]", True),
    ("(9,10)", True), ("[10,11]", True), ("(11,inf)", True), ("[0,8]", True),
])
def test_local_and_global_engines_agree_on_windows(iv, expect):
    spec = fixtures.gen_voting(1, 2)
    f = parse_formula(fixtures.voting_formula(1, iv))
    assert check_strategic(spec, f, engine="local").holds is expect
    assert check_strategic(spec, f, engine="global").holds is expect


def test_local_engine_applicability():
    spec = fixtures.gen_voting(1, 2)
    with pytest.raises(StrategyError):
        check_strategic(spec, parse_formula("<<voter1>> A F v1_1"), engine="local")
    assert check_strategic(spec, PHI1).stats["engine"] == "local"
    assert check_strategic(spec, parse_formula("<<voter1>> A F[0,8] v1_1")).stats["engine"] == "global"


def test_voting_universal_goal_fails():
    # EA may close before the voter ever acts
    spec = fixtures.gen_voting(1, 2)
    assert not check_strategic(spec, parse_formula("<<voter1>> A F[0,11] v1_1")).holds


def test_parallel_matches_sequential():
    spec = fixtures.gen_voting(1, 2)
    f = parse_formula("<<voter1>> E F[0,8] (v1_1 & E F v1_1)")
    seq = check_strategic(spec, f, witness=True, engine="global", jobs=1)
    par = check_strategic(spec, f, witness=True, engine="global", jobs=2)
    assert seq.holds and par.holds and seq.witness == par.witness
    assert synth_all(spec, f, engine="global", jobs=2) == synth_all(spec, f, engine="global")


def test_nested_coalition():
    m, m2 = fixtures.gen_expressivity()
    f = parse_formula("<<2>> A X <<1>> E F p")
    assert check_strategic(m, f).holds == check_strategic(m2, f).holds
    g = parse_formula("<<1>> E F <<1,2>> A G p")
    assert check_strategic(m, g).holds


def _flat(f):
    """A single outermost coalition and no strategic node below it; nested
    nodes could flip polarity under negation."""
    return isinstance(f, Coalition) and not any(isinstance(n, Coalition) for n in list(walk(f))[1:])


def test_ir_implies_Ir_and_perfect_information_collapse():
    rng = random.Random(1)
    checked = 0
    for seed in range(200):
        spec = random_system(seed=seed)
        f = random_formula(rng, spec.names, ["p", "q"], depth=3, timed=spec.semantics == "discrete")
        if not _flat(f) or not f.agents:
            continue
        m = compose(spec)
        if StrategySpace(m.network, f.agents, "Ir", m).count() > 4096:
            continue
        checked += 1
        if check_strategic(spec, f, "ir").holds:
            assert check_strategic(spec, f, "Ir").holds
    assert checked >= 50
    for spec in fixtures.gen_expressivity():
        for text in ("<<1>> E F p", "<<2>> A G !p", fixtures.EXPRESSIVITY_FORMULA, "<<1>> A X !p"):
            f = parse_formula(text)
            assert check_strategic(spec, f, "ir").holds == check_strategic(spec, f, "Ir").holds


def test_zero_duration_free_model_without_edges():
    spec = parse_model({"semantics": "untimed", "agents": [
        {"name": "a", "locals": ["l0"], "initial": "l0", "labels": {"l0": ["p"]},
         "transitions": [{"from": "l0", "action": "go", "to": "l0"}]}]})
    assert check_strategic(spec, parse_formula("<<a>> A G p")).holds
    assert not check_strategic(spec, parse_formula("<<a>> E F !p")).holds
