"""Command-line front end.

    pfix axioms   PROBLEM.json   sampled metric-axiom audit of D/P (or D - P)
    pfix classify PROBLEM.json   Banach and Kannan certificates
    pfix solve    PROBLEM.json   certified Picard iteration
    pfix certify  PROBLEM.json   floor -> axioms -> Kannan -> solve -> uniqueness
    pfix gallery  [NAME]         list or export built-in instances

Exit status: 0 pass / converged, 2 verdict failure, 1 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import gallery as gallery_mod
from .commands import EXIT_FAIL, EXIT_OK, EXIT_USAGE, RunConfig, UsageError, dumps, run
from .errors import PerturbedFixpointError
from .problem import load_problem
from .solver import DEFAULT_MAX_ITER, DEFAULT_TOL


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--budget", type=_positive_int, default=10_000,
                        help="sampled pairs / triples per check (default 10000)")
    common.add_argument("--json", action="store_true", help="machine-readable JSON report")

    solving = argparse.ArgumentParser(add_help=False)
    solving.add_argument("--tol", type=_positive_float, default=DEFAULT_TOL)
    solving.add_argument("--max-iter", type=_positive_int, default=DEFAULT_MAX_ITER)
    solving.add_argument("--x0", type=_floats, default=None,
                         help="starting point v1,v2,... (default: box centre)")
    solving.add_argument("--trace", dest="trace_path", default=None,
                         help="write the full iteration trace (JSON lines) here")

    ap = _Parser(prog="pfix", description="Fixed points in perturbed metric spaces.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("axioms", parents=[common], help="audit the exact metric").add_argument("problem")
    sub.add_parser("classify", parents=[common], help="Banach/Kannan certificates").add_argument("problem")
    sub.add_parser("solve", parents=[common, solving], help="certified Picard iteration").add_argument("problem")
    sub.add_parser("certify", parents=[common, solving], help="full certification pipeline").add_argument("problem")
    g = sub.add_parser("gallery", help="list or export built-in instances")
    g.add_argument("name", nargs="?")
    g.add_argument("--out", help="file (with NAME) or directory (without) to write problem JSON to")
    g.add_argument("--json", action="store_true")
    return ap


def _gallery(args, out):
    if args.name is None and args.out is None:
        items = [{"name": i.name, "description": i.description} for i in gallery_mod.gallery()]
        if args.json:
            print(json.dumps(items, indent=2, sort_keys=True), file=out)
        else:
            for item in items:
                print(f"{item['name']:<20} {item['description']}", file=out)
        return EXIT_OK
    if args.name is None:
        target = Path(args.out)
        target.mkdir(parents=True, exist_ok=True)
        for inst in gallery_mod.gallery():
            (target / f"{inst.name}.json").write_text(
                json.dumps(inst.to_problem_json(), indent=2, sort_keys=True) + "\n"
            )
        return EXIT_OK
    try:
        inst = gallery_mod.get(args.name)
    except KeyError as err:
        raise UsageError(str(err.args[0])) from None
    text = json.dumps(inst.to_problem_json(), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        out.write(text)
    return EXIT_OK


def _human(report, out):
    print(f"verdict: {report.get('verdict')}", file=out)
    if "error" in report:
        print(f"error: {report['error']}", file=out)
    axioms = report.get("axioms")
    if isinstance(axioms, dict) and "checked" in axioms:
        print(f"axioms: {axioms['verdict']}  checked={axioms['checked']}", file=out)
        for v in axioms["violations"][:3]:
            print(f"  {v['axiom']}: witness={v['witness']} lhs={v['lhs']!r} rhs={v['rhs']!r}", file=out)
    certs = report.get("certificates") or (
        {report["certificate"]["kind"]: report["certificate"]}
        if isinstance(report.get("certificate"), dict) and "kind" in report["certificate"] else {}
    )
    for kind, cert in certs.items():
        if "alpha_hat" in cert:
            print(f"{kind}: alpha_hat={cert['alpha_hat']!r} alpha_bound={cert['alpha_bound']!r}"
                  f" beta={cert['beta']!r} valid={cert['valid']}", file=out)
        else:
            print(f"{kind}: {cert.get('error')}", file=out)
    sol = report.get("solve")
    if isinstance(sol, dict) and "stop_reason" in sol:
        print(f"solve: {sol['stop_reason']} after {sol['iterations']} steps,"
              f" fixed_point={sol['fixed_point']} residual={sol['residual']!r}", file=out)
    uniq = report.get("uniqueness")
    if isinstance(uniq, dict) and "representatives" in uniq:
        print(f"uniqueness: {len(uniq['representatives'])} representative(s)", file=out)
    for f in report.get("failures", []):
        print(f"failed [{f['stage']}]: {f['reason']}", file=out)


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gallery":
            return _gallery(args, out)
        cfg = RunConfig(
            command=args.command,
            problem_path=args.problem,
            seed=args.seed,
            budget=args.budget,
            tol=getattr(args, "tol", DEFAULT_TOL),
            max_iter=getattr(args, "max_iter", DEFAULT_MAX_ITER),
            x0=getattr(args, "x0", None),
            trace_path=getattr(args, "trace_path", None),
            json=args.json,
        )
        problem = load_problem(cfg.problem_path, seed=cfg.seed, budget=cfg.budget)
        code, report = run(problem, cfg)
    except UsageError as err:
        print(f"pfix: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except PerturbedFixpointError as err:
        print(f"pfix: error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as err:
        print(f"pfix: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    if cfg.json:
        print(dumps(report), file=out)
    else:
        _human(report, out)
    return code


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
