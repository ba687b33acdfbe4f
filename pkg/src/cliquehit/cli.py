"""Command-line interface.

Exit codes: 0 success, 1 invalid input, 2 a --check threshold failed.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .harness import (ExperimentConfig, emit_report, load_preset, preset_names, run_experiment,
                      run_preset, summary_csv, evaluate_check)
from .procgen import (hitting_time_clique_cover, hitting_time_min_degree, standard_process,
                      window_params)
from .staticcoupling import modified_couple_r3, riordan_couple
from .sunify import verify_all

EXIT_OK, EXIT_INVALID, EXIT_CHECK = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _common(p, *, n_many=True):
    p.add_argument("--n", type=int, nargs="+" if n_many else None, help="number of vertices")
    p.add_argument("--r", type=int, help="clique size / hypergraph arity")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--out", help="write the report here")
    p.add_argument("--format", choices=["csv", "json"], help="report format (default csv)")


def _experiment(p):
    _common(p)
    p.add_argument("--s", type=int, help="edge size of G (default 2)")
    p.add_argument("--trials", type=int, help="trials per n")
    p.add_argument("--delta", type=float, help="window exponent delta (default 0.1)")
    p.add_argument("--c-i", dest="c_I", type=float, help="multiplier c_I in pi_I = c_I g / n^(r-1)")
    p.add_argument("--c-r", dest="c_R", type=float, help="multiplier c_R in pi_R = c_R g / n")
    p.add_argument("--preset", help="start from a named preset's first experiment")
    p.add_argument("--check", action="store_true", help="evaluate the preset thresholds; exit 2 on failure")
    p.add_argument("--timing", action="store_true", help="include runtime columns in CSV output")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="cliquehit", description="Hitting times for clique factors and hypergraph matchings.")
    ap.add_argument("--version", action="version", version=f"cliquehit {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate one random process and report its hitting times")
    _common(p, n_many=False)
    p.add_argument("--arity", type=int, default=2, help="edge size of the process (default 2)")

    p = sub.add_parser("hitting", help="factor / matching at the hitting time over many trials")
    _experiment(p)
    p.add_argument("--target", choices=["factor", "matching"], default="factor",
                   help="factor: K_r-factor of the graph process at T_G; matching: perfect matching at T_H")

    p = sub.add_parser("couple", help="couple G(n,p) with H(n,pi); one run prints the full outcome")
    _experiment(p)
    p.add_argument("--p", type=float, help="edge probability (default p_+)")
    p.add_argument("--method", choices=["auto", "riordan", "modified"], default="auto")

    for name, text in (("chain", "full coupling chain (verdict rows)"),
                       ("suniform", "the chain for s-uniform G"),
                       ("badevents", "bad-event flags of H(n, pi_+)")):
        _experiment(sub.add_parser(name, help=text))

    p = sub.add_parser("analytic", help="verify the composition bound and w(t) for 3 <= s < r <= R")
    p.add_argument("--r", type=int, default=10, help="largest r (default 10)")
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--check", action="store_true")

    p = sub.add_parser("report", help="run a named preset and print its threshold checks")
    p.add_argument("--preset", help="preset name")
    p.add_argument("--list", action="store_true", help="list presets")
    p.add_argument("--trials", type=int, help="override trials (for quick looks)")
    p.add_argument("--out", help="write the first experiment's report here")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--check", action="store_true")
    return ap


def _config_from_args(args, kind: str) -> tuple[ExperimentConfig, list]:
    base, checks = {}, []
    if getattr(args, "preset", None):
        exp = load_preset(args.preset)["experiments"][0]
        base, checks = dict(exp["config"]), exp.get("checks", [])
    base.setdefault("kind", kind)
    for key, attr in (("n", "n"), ("r", "r"), ("s", "s"), ("trials", "trials"), ("master_seed", "seed"),
                      ("delta", "delta"), ("c_I", "c_I"), ("c_R", "c_R"), ("format", "format"),
                      ("out", "out"), ("p", "p")):
        v = getattr(args, attr, None)
        if v is not None:
            base[key] = v
    if "n" not in base:
        raise ValueError("--n is required (or use --preset)")
    return ExperimentConfig.from_dict(base), checks


def _run_and_emit(args, kind) -> int:
    cfg, checks = _config_from_args(args, kind)
    rep = run_experiment(cfg)
    if cfg.out:
        emit_report(rep, cfg.format, cfg.out, timing=args.timing)
    elif cfg.format == "json":
        print(emit_report(rep, "json", timing=args.timing))
    sys.stdout.write(summary_csv(rep))
    if args.check:
        if not checks:
            raise ValueError("--check needs a --preset that defines thresholds")
        results = [evaluate_check(rep, c) for c in checks]
        for res in results:
            print(("PASS " if res.passed else "FAIL ") + res.message)
        return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.n is None:
        raise ValueError("--n is required")
    trace = standard_process(args.n, args.arity, args.seed or 0)
    info = {"n": args.n, "arity": args.arity, "T_min_degree": hitting_time_min_degree(trace)}
    if args.r is not None:
        info["r"] = args.r
        info["T_clique_cover"] = hitting_time_clique_cover(trace, args.r)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(trace.to_json())
    print(json.dumps(info))
    return EXIT_OK


def cmd_couple(args) -> int:
    trials = args.trials or 1
    r = args.r or 4
    method = args.method
    if method == "auto":
        method = "modified" if r == 3 and (args.s or 2) == 2 else "riordan"
    if trials > 1 or args.preset:
        return _run_and_emit(args, "modified_r3" if method == "modified" else "riordan")
    n = (args.n or [None])[0]
    if n is None:
        raise ValueError("--n is required")
    s = args.s or 2
    delta = args.delta or 0.1
    p = args.p if args.p is not None else window_params(n, r, s, delta).p_plus
    if method == "modified":
        out = modified_couple_r3(n, p, args.seed or 0, delta)
    else:
        out = riordan_couple(n, r, p, args.seed or 0, delta, s, allow_clean_cycles=(r == 3))
    text = out.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    print(json.dumps({"n": n, "r": r, "p": p, "pi": out.pi, "H_size": len(out.H), "G_size": len(out.G),
                      "failed": out.failed, "failure_reason": out.failure_reason,
                      "approximate_steps": out.approximate_steps}))
    return EXIT_OK


def cmd_analytic(args) -> int:
    res = verify_all(args.r)
    rows = [p.as_dict() for p in res["partition"]]
    wrows = [w.as_dict() for w in res["w"]]
    if args.format == "json":
        text = json.dumps({"partition": rows, "w": wrows, "seconds": res["seconds"], "passed": res["passed"]}, indent=1)
    else:
        lines = ["r,s,t,maxLHS,RHS,pass"] + [f"{d['r']},{d['s']},{d['t']},{d['maxLHS']},{d['RHS']},{d['pass']}" for d in rows]
        text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"# {len(rows)} composition rows, {len(wrows)} w(t) checks, passed={res['passed']}, "
          f"{res['seconds']:.3f} s", file=sys.stderr)
    if args.check and not (res["passed"] and res["seconds"] < 5.0):
        return EXIT_CHECK
    return EXIT_OK


def cmd_report(args) -> int:
    if args.list:
        for name in preset_names():
            print(f"{name}: {load_preset(name)['description']}")
        return EXIT_OK
    if not args.preset:
        raise ValueError("--preset or --list is required")
    reports, results = run_preset(args.preset, trials=args.trials)
    for rep in reports:
        sys.stdout.write(summary_csv(rep))
    if args.out:
        emit_report(reports[0], args.format, args.out)
    for res in results:
        print(("PASS " if res.passed else "FAIL ") + res.message)
    if args.check and not all(r.passed for r in results):
        return EXIT_CHECK
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "couple":
            return cmd_couple(args)
        if args.command == "analytic":
            return cmd_analytic(args)
        if args.command == "report":
            return cmd_report(args)
        if args.command == "hitting":
            return _run_and_emit(args, "factor_hit" if args.target == "factor" else "matching_hit")
        return _run_and_emit(args, args.command)
    except (ValueError, OSError) as exc:
        print(f"cliquehit: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
