"""Report builders behind the command-line subcommands.

Each ``*_report`` function returns ``(exit_code, report)`` where ``report`` is a
plain dict with deterministic content: identical config and inputs give an
identical report.  Exit codes: 0 pass / converged, 2 verdict failure, 1 usage.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .contraction import estimate_coefficient
from .errors import PerturbedFixpointError, UniquenessViolation
from .solver import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    json_safe,
    multistart_points,
    solve,
    verify_uniqueness,
)
from .space import TAU_NUM, check_floor, check_metric_axioms

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


@dataclass
class RunConfig:
    command: str
    problem_path: str | None = None
    seed: int = 42
    budget: int = 10_000
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    x0: list | None = None
    trace_path: str | None = None
    json: bool = False


class UsageError(Exception):
    pass


def dumps(report) -> str:
    return json.dumps(json_safe(report), sort_keys=True, indent=2)


def _problem_info(space):
    return {
        "c": space.c,
        "c_estimated": space.c_estimated,
        "dimension": space.dimension,
        "domain": space.domain.describe(),
        "eq_tol": space.eq_tol,
        "mode": space.mode,
    }


def _base(cfg, problem):
    return {"config": asdict(cfg), "problem": _problem_info(problem.space)}


def _start(space, cfg):
    dom = space.domain
    if cfg.x0 is None:
        return dom.center()
    try:
        x0 = dom.as_batch(cfg.x0 if len(cfg.x0) != 1 else cfg.x0[0])
    except ValueError as err:
        raise UsageError(f"--x0: {err}") from None
    if not dom.contains(x0).all():
        raise UsageError(f"LeftDomain: starting point {cfg.x0} is outside the domain")
    return dom.element(x0, 0)


def axioms_report(problem, cfg):
    report = _base(cfg, problem)
    try:
        axioms = check_metric_axioms(problem.space, cfg.budget, cfg.seed)
    except PerturbedFixpointError as err:
        report.update(verdict="fail", error=f"{type(err).__name__}: {err}")
        return EXIT_FAIL, report
    report["axioms"] = axioms.to_dict()
    report["verdict"] = axioms.verdict
    return (EXIT_OK if axioms.passed else EXIT_FAIL), report


def _certificate(problem, kind, cfg):
    try:
        return estimate_coefficient(problem.space, problem.T, kind, cfg.budget, cfg.seed), None
    except PerturbedFixpointError as err:
        return None, f"{type(err).__name__}: {err}"


def classify_report(problem, cfg):
    report = _base(cfg, problem)
    classes = {}
    any_valid = False
    for kind in ("banach", "kannan"):
        cert, err = _certificate(problem, kind, cfg)
        classes[kind] = cert.to_dict() if cert else {"error": err, "valid": False}
        any_valid = any_valid or bool(cert and cert.valid)
    report["certificates"] = classes
    report["verdict"] = "pass" if any_valid else "fail"
    return (EXIT_OK if any_valid else EXIT_FAIL), report


def _write_trace(trace, space, path):
    Path(path).write_text(trace.to_jsonl(space.domain.to_json))


def solve_report(problem, cfg):
    space = problem.space
    x0 = _start(space, cfg)
    report = _base(cfg, problem)
    cert = None
    for kind in ("kannan", "banach"):
        cand, err = _certificate(problem, kind, cfg)
        if cand is not None and cand.valid:
            cert = cand
            break
    if cert is None:
        report.update(verdict="fail", error="InvalidCertificate: no valid Kannan or Banach certificate")
        return EXIT_FAIL, report
    report["certificate"] = cert.to_dict()
    try:
        trace = solve(space, problem.T, cert, x0, cfg.tol, cfg.max_iter)
    except PerturbedFixpointError as err:
        report.update(verdict="fail", error=f"{type(err).__name__}: {err}")
        return EXIT_FAIL, report
    if cfg.trace_path:
        _write_trace(trace, space, cfg.trace_path)
    report["solve"] = trace.summary(space.domain.to_json)
    report["verdict"] = "pass" if trace.converged else "fail"
    return (EXIT_OK if trace.converged else EXIT_FAIL), report


def certify_report(problem, cfg):
    """Floor check, axioms, Kannan certificate, solve, and a 5-start uniqueness probe."""
    space = problem.space
    x0 = _start(space, cfg)
    report = _base(cfg, problem)
    failures = []

    def fail(stage, msg):
        failures.append({"stage": stage, "reason": msg})

    if space.mode != "quotient":
        report["floor"] = {"skipped": "subtractive space"}
        fail("mode", "fixed-point certification needs a quotient space")
    else:
        floor = check_floor(space, cfg.budget, cfg.seed)
        report["floor"] = floor.to_dict()
        if not floor.passed:
            fail("floor", f"{floor.violation_counts.get('floor', 0)} sampled pairs with P < c")
        if space.c_estimated:
            fail("floor", "c was estimated from samples; certificates need a trusted c")

    try:
        axioms = check_metric_axioms(space, cfg.budget, cfg.seed)
        report["axioms"] = axioms.to_dict()
        if not axioms.passed:
            fail("axioms", "exact metric violates " + ", ".join(sorted(axioms.violation_counts)))
    except PerturbedFixpointError as err:
        report["axioms"] = {"error": f"{type(err).__name__}: {err}"}
        fail("axioms", report["axioms"]["error"])

    cert, err = _certificate(problem, "kannan", cfg)
    report["certificate"] = cert.to_dict() if cert else {"error": err, "valid": False}
    if cert is None or not cert.valid:
        fail("certificate", err or f"alpha_bound {cert.alpha_bound!r} is not below 1/2")

    if failures:
        report["solve"] = {"skipped": "earlier stage failed"}
        report["uniqueness"] = {"skipped": "earlier stage failed"}
    else:
        _certify_solve(problem, cert, x0, cfg, report, fail)

    report["failures"] = failures
    report["verdict"] = "fail" if failures else "pass"
    return (EXIT_FAIL if failures else EXIT_OK), report


def _certify_solve(problem, cert, x0, cfg, report, fail):
    space, T = problem.space, problem.T
    dom = space.domain
    trace = solve(space, T, cert, x0, cfg.tol, cfg.max_iter)
    if cfg.trace_path:
        _write_trace(trace, space, cfg.trace_path)
    report["solve"] = trace.summary(dom.to_json)
    if not trace.converged:
        fail("solve", f"stopped: {trace.stop_reason}")
        report["uniqueness"] = {"skipped": "solve did not converge"}
        return
    if trace.residual > cfg.tol + TAU_NUM:
        fail("solve", f"residual {trace.residual!r} exceeds tol")

    # each final lies within its tolerance of the limit, so finals solved to
    # eq_tol / 2 are within eq_tol of each other when the limit is unique
    probe_tol = min(cfg.tol, space.eq_tol / 2) if space.eq_tol > 0 else cfg.tol
    starts, finals = [], []
    for s in multistart_points(dom, cfg.seed):
        t = solve(space, T, cert, s, probe_tol, cfg.max_iter)
        starts.append({"x0": dom.to_json(s), "stop_reason": t.stop_reason,
                       "fixed_point": None if t.fixed_point is None else dom.to_json(t.fixed_point)})
        if t.converged:
            finals.append(t.fixed_point)
        else:
            fail("uniqueness", f"start {dom.to_json(s)} stopped: {t.stop_reason}")
    try:
        reps = verify_uniqueness(space, T, cert, finals, probe_tol)
        report["uniqueness"] = {
            "probe_tol": probe_tol,
            "representatives": [dom.to_json(r) for r in reps],
            "starts": starts,
        }
    except UniquenessViolation as err:
        report["uniqueness"] = {
            "error": "UniquenessViolation",
            "representatives": [dom.to_json(r) for r in err.representatives],
            "starts": starts,
        }
        fail("uniqueness", str(err))
    except PerturbedFixpointError as err:
        report["uniqueness"] = {"error": f"{type(err).__name__}: {err}", "starts": starts}
        fail("uniqueness", str(err))


def run(problem, cfg):
    handlers = {
        "axioms": axioms_report,
        "classify": classify_report,
        "solve": solve_report,
        "certify": certify_report,
    }
    return handlers[cfg.command](problem, cfg)
