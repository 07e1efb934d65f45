"""Shared corpus builders for the test-suite."""
import random
from fractions import Fraction

from stctl import fixtures
from stctl.model import delay, eval_constraint, parse_model, reset, validate
from stctl.regions import BEYOND, region_of, representative, time_successor


def random_timed_system(seed, max_const=3):
    """A small continuous system: one or two agents, one or two clocks
    each, simple guards, resets and invariants (no difference atoms)."""
    rng = random.Random(seed)
    coordination = rng.choice(["sync", "async"])
    agents = []
    for i in range(rng.choice([1, 2])):
        clocks = ["x", "y"][:rng.choice([1, 2])]
        locs = [f"l{k}" for k in range(rng.choice([2, 3]))]
        acts = [f"e{i}", "s"] if coordination == "async" else [f"a{i}", f"b{i}"]
        transitions, invariants = [], {}
        for k, l in enumerate(locs):
            if rng.random() < 0.4:
                invariants[l] = f"{rng.choice(clocks)} <= {rng.randint(1, max_const)}"
            for a in acts[:rng.choice([1, 2])]:
                t = {"from": l, "action": a, "to": rng.choice(locs)}
                c = rng.choice(clocks)
                r = rng.random()
                if r < 0.3:
                    t["guard"] = f"{c} >= {rng.randint(0, max_const)}"
                elif r < 0.5:
                    t["guard"] = f"{c} < {rng.randint(1, max_const)}"
                elif r < 0.6:
                    t["guard"] = f"{c} = {rng.randint(0, max_const)}"
                if rng.random() < 0.4:
                    t["reset"] = rng.sample(clocks, rng.randint(1, len(clocks)))
                transitions.append(t)
        labels = {l: ["p"] for l in locs if rng.random() < 0.4}
        agents.append({"name": f"ag{i}", "locals": locs, "initial": locs[0], "clocks": clocks,
                       "invariants": invariants, "transitions": transitions, "labels": labels})
    spec = parse_model({"coordination": coordination, "semantics": "continuous", "agents": agents})
    assert validate(spec) == []
    return spec


def continuous_fixtures():
    """Named continuous systems used by region and degeneracy checks."""
    out = [("voting(1,2)", fixtures.gen_voting(1, 2)), ("voting(2,1)", fixtures.gen_voting(2, 1))]
    m, m2 = fixtures.gen_expressivity("continuous")
    out += [("expressivity M", m), ("expressivity M'", m2)]
    out += [(f"timed#{k}", random_timed_system(k)) for k in range(8)]
    return out


def delay_into_successor(v, r, max_consts):
    """An exact delay taking ``v`` (a representative of ``r``) into the time
    successor region of ``r``, or None for the all-beyond region."""
    live = [i for i, k in enumerate(r.ranks) if k != BEYOND]
    if not live:
        return None
    fracs = [v[i] - int(v[i]) for i in live]
    if any(f == 0 for f in fracs):
        top = max(fracs)
        return (1 - top) / 2
    return 1 - max(fracs)


def sampled_edge_check(rg, trials, rng):
    """Compare region-graph edges with concrete transitions at sampled
    representatives.  Returns the list of failures (empty on success)."""
    m = rg.model
    maxc = rg.max_consts
    edges = set(rg.edges)
    failures = []
    for _ in range(trials):
        k = rng.randrange(rg.n)
        s, r = rg.vertices[k]
        v = representative(r, maxc, rng)
        if region_of(v, maxc) != r:
            failures.append(("representative", k))
            continue
        if not eval_constraint(m.invariant[s], v):
            # invariant-violating vertices have no successors at all
            if any(a == k for a, _, _ in rg.edges):
                failures.append(("dead vertex has edges", k))
            continue
        for e in m.out_edges[s]:
            edge = m.edges[e]
            concrete = eval_constraint(edge.guard, v)
            if concrete:
                v2 = reset(v, edge.resets)
                concrete = eval_constraint(m.invariant[edge.dst], v2)
            if concrete:
                target = rg.index.get((edge.dst, region_of(v2, maxc)))
                ok = target is not None and (k, target, e) in edges
            else:
                ok = not any(a == k and x == e for a, _, x in rg.edges)
            if not ok:
                failures.append(("action", k, e))
        d = delay_into_successor(v, r, maxc)
        if d is not None:
            v3 = delay(v, d)
            succ = time_successor(r, maxc)
            if region_of(v3, maxc) != succ:
                failures.append(("delay region", k))
                continue
            concrete = eval_constraint(m.invariant[s], v3)
            target = rg.index.get((s, succ))
            has = target is not None and (k, target, -1) in edges
            if has != concrete:
                failures.append(("delay", k))
    return failures


def jitter(v, r, rng):
    """Another valuation in the same region: fractional parts are moved
    while keeping their order and their zero/non-zero status."""
    fr = sorted({v[i] - int(v[i]) for i, k in enumerate(r.ranks) if k > 0})
    fresh = sorted({Fraction(rng.randrange(1, 10 ** 6), 10 ** 6) for _ in range(len(fr) * 4 + 4)})
    while len(fresh) < len(fr):
        fresh = sorted(set(fresh) | {Fraction(rng.randrange(1, 10 ** 6), 10 ** 6)})
    pick = dict(zip(fr, sorted(rng.sample(fresh, len(fr)))))
    out = []
    for x, k in zip(v, r.ranks):
        if k == BEYOND:
            out.append(x + Fraction(rng.randrange(0, 10 ** 6), 10 ** 6))
        elif k == 0:
            out.append(x)
        else:
            out.append(int(x) + pick[x - int(x)])
    return tuple(out)
