"""Command-line front-end.

Exit status: 0 when the formula holds (or the command succeeded), 1 when it
fails (or validation found problems), 2 on any error.
"""
from __future__ import annotations

import argparse
import json
import multiprocessing
import os
import random
import signal
import sys
import time
from dataclasses import dataclass, field

from . import fixtures
from .composition import compose
from .engine import EngineError
from .formula import FormulaSyntaxError, desugar, is_timed, max_constant, parse_formula
from .model import ModelError, SystemSpec, load_model, validate
from .regions import RegionError, build_region_graph, representative, region_of
from .strategy import StrategyError, check_strategic, verify_witness

BUILTINS = "voting:V,C | voting-discrete:V,C | expressivity:a | expressivity:a'"


@dataclass
class RunConfig:
    command: str
    model: str | None = None
    formula: str | None = None
    kind: str = "ir"
    witness: bool = False
    all: bool = False
    oracle: bool = False
    dump_model: bool = False
    seed: int = 0
    timeout: float | None = None
    jobs: int = 0
    engine: str = "auto"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.timeout is not None and self.timeout <= 0:
            raise ValueError("timeout must be positive")


def resolve_model(ref: str) -> SystemSpec:
    """A model file path or one of the built-in generators."""
    if ref.startswith(("voting:", "voting-discrete:")):
        name, _, args = ref.partition(":")
        v, c = (int(x) for x in args.split(","))
        return fixtures.gen_voting(v, c, discrete=name == "voting-discrete")
    if ref.startswith("expressivity:"):
        which = ref.partition(":")[2]
        pair = fixtures.gen_expressivity()
        if which not in ("a", "a'"):
            raise ModelError(f"unknown expressivity variant {which!r}")
        return pair[0] if which == "a" else pair[1]
    return load_model(ref)


def resolve_formula(text: str):
    if os.path.isfile(text):
        with open(text) as fh:
            text = fh.read()
    return parse_formula(text.strip(), sugar=True)


class _Timeout(Exception):
    pass


def _alarm(seconds):
    if not seconds:
        return
    def handler(signum, frame):
        raise _Timeout()
    signal.signal(signal.SIGALRM, handler)
    signal.setitimer(signal.ITIMER_REAL, seconds)


def _cancel_alarm():
    signal.setitimer(signal.ITIMER_REAL, 0)


def _emit(obj, out):
    out.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def run(cfg: RunConfig, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        if cfg.command == "bench":
            return _bench(cfg, out, err)
        spec = resolve_model(cfg.model)
        if cfg.command == "validate":
            problems = validate(spec)
            for d in problems:
                err.write(str(d) + "\n")
            out.write("ok\n" if not problems else f"{len(problems)} problem(s)\n")
            return 0 if not problems else 1
        problems = validate(spec)
        if problems:
            for d in problems:
                err.write(str(d) + "\n")
            return 2
        if cfg.dump_model:
            _emit(compose(spec).to_dict(), out)
            return 0
        if cfg.formula is None:
            err.write("error: a formula is required (-f)\n")
            return 2
        f = resolve_formula(cfg.formula)
        if cfg.command == "regions":
            return _regions(spec, f, cfg, out)
        _alarm(cfg.timeout)
        try:
            if cfg.command == "check":
                return _check(spec, f, cfg, out)
            if cfg.command == "synth":
                return _synth(spec, f, cfg, out)
        finally:
            _cancel_alarm()
        err.write(f"error: unknown command {cfg.command!r}\n")
        return 2
    except _Timeout:
        err.write("error: timeout\n")
        return 2
    except FormulaSyntaxError as exc:
        err.write(f"syntax error: {exc}\n")
        return 2
    except (ModelError, StrategyError, EngineError, RegionError, ValueError, OSError) as exc:
        err.write(f"error: {exc}\n")
        return 2


def _check(spec, f, cfg, out) -> int:
    if cfg.oracle:
        from .oracle import oracle_check
        t0 = time.perf_counter()
        holds = oracle_check(spec, f, cfg.kind)
        _emit({"holds": holds, "witness": None,
               "stats": {"engine": "oracle", "millis": round((time.perf_counter() - t0) * 1000, 3)}}, out)
        return 0 if holds else 1
    verdict = check_strategic(spec, f, cfg.kind, witness=cfg.witness, engine=cfg.engine, jobs=cfg.jobs)
    if verdict.witness is not None:
        verdict.stats["witness_verified"] = verify_witness(spec, f, verdict.witness, cfg.engine)
    _emit(verdict.to_dict(), out)
    return 0 if verdict.holds else 1


def _synth(spec, f, cfg, out) -> int:
    verdict = check_strategic(spec, f, cfg.kind, witness=True, all_strategies=cfg.all,
                              engine=cfg.engine, jobs=cfg.jobs)
    strategies = verdict.strategies if cfg.all else ([verdict.witness] if verdict.witness else [])
    _emit({"holds": verdict.holds, "count": len(strategies),
           "strategies": [s.to_dict(verdict.space) for s in strategies],
           "stats": verdict.stats}, out)
    return 0 if strategies else 1


def _regions(spec, f, cfg, out) -> int:
    m = compose(spec)
    if spec.semantics != "continuous":
        raise ModelError("regions needs a continuous-semantics model")
    rg = build_region_graph(m, max_constant(desugar(f)), formula_clock=is_timed(f))
    rng = random.Random(cfg.seed)
    clocks = list(m.clocks) + (["z"] if rg.formula_clock else [])
    out.write(f"clocks: {' '.join(clocks) or '-'}\n")
    out.write(f"max constants: {' '.join(map(str, rg.max_consts)) or '-'}\n")
    out.write(f"vertices: {rg.n}\n")
    delays = sum(1 for _, _, e in rg.edges if e < 0)
    out.write(f"edges: {len(rg.edges)} (delay {delays}, action {len(rg.edges) - delays})\n")
    out.write(f"model-clock regions: {rg.region_count()}\n")
    sample = sorted(rng.sample(range(rg.n), min(10, rg.n)))
    for k in sample:
        s, r = rg.vertices[k]
        v = representative(r, rg.max_consts, rng)
        assert region_of(v, rg.max_consts) == r
        out.write(f"  {k}: {','.join(m.state_name(s))} {r}\n")
    return 0


def _bench_one(v, c, k, discrete, queue):
    spec = fixtures.gen_voting(v, c, discrete)
    f = parse_formula(fixtures.voting_formula(k), sugar=True)
    t0 = time.perf_counter()
    verdict = check_strategic(spec, f, "ir")
    queue.put((verdict.holds, (time.perf_counter() - t0) * 1000))


def _bench(cfg, out, err) -> int:
    ex = cfg.extra
    lo, hi = ex["voters"]
    c, k = ex["candidates"], ex["coalition"]
    out.write("v,c,k,holds,millis\n")
    out.flush()
    timed_out = False
    ctx = multiprocessing.get_context("fork")
    for v in range(lo, hi + 1):
        if k > v or timed_out:
            if timed_out:
                out.write(f"{v},{c},{k},timeout,timeout\n")
            continue
        q = ctx.Queue()
        p = ctx.Process(target=_bench_one, args=(v, c, k, ex.get("discrete", False), q))
        p.start()
        p.join(cfg.timeout)
        if p.is_alive():
            p.terminate()
            p.join()
            timed_out = True
            out.write(f"{v},{c},{k},timeout,timeout\n")
        else:
            try:
                holds, millis = q.get(timeout=5)
            except Exception:
                err.write(f"error: benchmark worker for v={v} failed\n")
                return 2
            out.write(f"{v},{c},{k},{str(holds).lower()},{millis:.1f}\n")
        out.flush()
    return 0


def _voter_range(text: str) -> tuple:
    if ".." in text:
        a, b = text.split("..", 1)
        return int(a), int(b)
    return int(text), int(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stctl", description="STCTL model checking and strategy synthesis")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, formula=True):
        p.add_argument("-m", "--model", required=True, help=f"model JSON file or built-in ({BUILTINS})")
        if formula:
            p.add_argument("-f", "--formula", help="formula text or a file containing it")
        p.add_argument("--kind", default="ir", help="strategy class: ir (default) or Ir")
        p.add_argument("--engine", default="auto", choices=["auto", "global", "local"])
        p.add_argument("--dump-model", action="store_true", help="print the composed model as JSON")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--timeout", type=float, default=None, help="seconds")
        p.add_argument("--jobs", type=int, default=0, help="worker processes (default: $STCTL_JOBS or 1)")

    p = sub.add_parser("check", help="decide a formula at the initial configuration")
    common(p)
    p.add_argument("--witness", action="store_true")
    p.add_argument("--oracle", action="store_true", help="use the brute-force reference evaluator")
    p.add_argument("--all", action="store_true")
    p = sub.add_parser("synth", help="synthesise winning strategies of the outer coalition")
    common(p)
    p.add_argument("--all", action="store_true", help="every winning strategy, not just the first")
    p = sub.add_parser("validate", help="report model diagnostics")
    common(p, formula=False)
    p = sub.add_parser("regions", help="region-graph statistics for a continuous model")
    common(p)
    p = sub.add_parser("bench", help="scaling benchmark, CSV on stdout")
    p.add_argument("family", choices=["voting"])
    p.add_argument("--voters", default="1..3", help="range A..B")
    p.add_argument("--candidates", type=int, default=2)
    p.add_argument("--coalition", type=int, default=1)
    p.add_argument("--discrete", action="store_true", help="use the unit-duration discrete twin")
    p.add_argument("--timeout", type=float, default=120.0, help="seconds per row")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.command == "bench":
            cfg = RunConfig("bench", timeout=args.timeout,
                            extra={"voters": _voter_range(args.voters), "candidates": args.candidates,
                                   "coalition": args.coalition, "discrete": args.discrete})
        else:
            cfg = RunConfig(args.command, model=args.model, formula=getattr(args, "formula", None),
                            kind=args.kind, witness=getattr(args, "witness", False),
                            all=getattr(args, "all", False), oracle=getattr(args, "oracle", False),
                            dump_model=args.dump_model, seed=args.seed, timeout=args.timeout,
                            jobs=args.jobs, engine=args.engine)
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
