"""Command-line entry point: ``ymflow {algebra-verify,run,reduce-check,report}``.

Exit codes: 0 success, 2 invalid input, 3 identity check failed, 4 run aborted
by blowup.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys

from . import config as cfgmod
from . import runner
from . import verify

SCENARIO_DIR = os.path.join(os.path.dirname(__file__), "scenarios")


def list_scenarios() -> list[str]:
    return sorted(f[:-5] for f in os.listdir(SCENARIO_DIR) if f.endswith(".json"))


def scenario_path(name: str) -> str:
    return os.path.join(SCENARIO_DIR, f"{name}.json")


def _threads(n):
    if n is None:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def cmd_algebra_verify(args) -> int:
    try:
        results = verify.algebra_suite(args.families, args.comass_samples, args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return runner.EXIT_CONFIG
    failed = [r for r in results if not r.passed]
    for r in results:
        status = "ok  " if r.passed else "FAIL"
        print(f"{status} {r.family:<12} {r.label:<14} {r.check:<26} {r.value:.3e} (<= {r.threshold:.0e})")
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        runner.write_json(os.path.join(args.out, "algebra_report.json"),
                          dict(passed=not failed, checks=[r.as_dict() for r in results]))
    return runner.EXIT_IDENTITY if failed else runner.EXIT_OK


def _load(args):
    path = args.config
    if args.scenario:
        if args.scenario not in list_scenarios():
            raise cfgmod.ConfigError(f"unknown scenario {args.scenario!r}; available: {', '.join(list_scenarios())}")
        path = scenario_path(args.scenario)
    if path is None:
        raise cfgmod.ConfigError("give --config FILE or --scenario NAME")
    cfg = cfgmod.load_config(path)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.steps is not None:
        cfg.steps = args.steps
        cfg.t_end = None
    return cfg


def cmd_run(args) -> int:
    try:
        cfg = _load(args)
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return runner.EXIT_CONFIG
    log = (lambda m: None) if args.quiet else (lambda m: print(m, file=sys.stderr))
    with _threads(args.threads):
        code, rep = runner.run_config(cfg, args.out, log)
    b = rep["blowup"]
    print(f"{cfg.name}: {rep['steps']} steps, t = {rep['t_final']:.6g}, E = {b['last_finite']['E']:.6g}, "
          f"int K dt = {b['int_K_dt']:.3e}")
    if code == runner.EXIT_BLOWUP:
        print(f"aborted: {b['reason']}", file=sys.stderr)
    return code


def cmd_reduce_check(args) -> int:
    with _threads(args.threads):
        code, rep = runner.reduce_check(args.case, args.seed or 0, args.steps, args.data, args.out)
    print(f"{rep['case']}: pi7 residual {rep['pi7_residual']:.3e}")
    for key in ("end_to_end_residual", "kernel_residual", "higgs_max_principle_worst_increment"):
        if key in rep:
            print(f"  {key} = {rep[key]:.3e}")
    if "equivalence" in rep:
        eq = rep["equivalence"]
        print(f"  equivalence agrees on {eq['agree']}/{eq['samples']} samples, rank {rep['rank']}")
    print("passed" if rep["passed"] else "FAILED")
    return code


def cmd_report(args) -> int:
    path = args.path
    if os.path.isdir(path):
        path = os.path.join(path, "report.json")
    try:
        with open(path) as fh:
            rep = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read report: {exc}", file=sys.stderr)
        return runner.EXIT_CONFIG
    b = rep.get("blowup", {})
    print(f"run {rep.get('name')}: {rep.get('steps')} steps to t = {rep.get('t_final')}")
    print(f"  aborted: {b.get('aborted')}  int K dt: {b.get('int_K_dt')}  max L: {b.get('max_L')}")
    print(f"  energy identity residual: {rep.get('energy_identity', {}).get('relative')}")
    if rep.get("hamilton"):
        print(f"  hamilton worst relative violation: {rep['hamilton']['worst_relative']}")
    for key in ("kahler_max_principle_worst_increment", "F_perp_relative_max",
                "higgs_max_principle_worst_increment"):
        if key in rep:
            print(f"  {key}: {rep[key]}")
    if "monotonicity" in rep:
        m = rep["monotonicity"]
        print(f"  monotonicity increment {m['increment']} (companion {m.get('companion')})")
    print(f"  singular candidates (eps0 = {rep.get('eps0')}): {len(rep.get('singular_candidates', []))}")
    return runner.EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ymflow", description="Calibrated Yang-Mills flow on periodic lattices.")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("algebra-verify", help="run the algebraic identity suite")
    a.add_argument("--families", nargs="*", choices=sorted(verify.FAMILY_SPECS), default=None)
    a.add_argument("--comass-samples", type=int, default=10_000)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out", default=None, help="directory for algebra_report.json")
    a.set_defaults(func=cmd_algebra_verify)

    r = sub.add_parser("run", help="run a flow scenario",
                       epilog="configuration keys:\n" + cfgmod.keys_help()
                       + "\n\nbuilt-in scenarios: " + ", ".join(list_scenarios()),
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    r.add_argument("--config", default=None, help="JSON configuration file")
    r.add_argument("--scenario", default=None, help="built-in scenario name")
    r.add_argument("--out", default=".", help="output directory")
    r.add_argument("--seed", type=int, default=None, help="override initial.seed")
    r.add_argument("--steps", type=int, default=None, help="override duration with a step count")
    r.add_argument("--threads", type=int, default=None, help="BLAS thread limit")
    r.add_argument("--quiet", action="store_true")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("reduce-check", help="check a dimensional reduction")
    c.add_argument("case", choices=["k3", "cy3", "g2mono", "su4"])
    c.add_argument("--data", choices=["random", "commuting"], default="random")
    c.add_argument("--steps", type=int, default=5)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", default=None)
    c.add_argument("--threads", type=int, default=None)
    c.set_defaults(func=cmd_reduce_check)

    s = sub.add_parser("report", help="summarise a run's report.json")
    s.add_argument("path", help="report.json or the run's output directory")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and runner.EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
