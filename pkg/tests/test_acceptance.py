"""Acceptance criteria, one test per criterion.

Each test records a ``[PASS]`` / ``[FAIL]`` line that is printed in the
terminal summary; failures still fail the test.
"""

import io
import json

import numpy as np
import pytest

from conftest import record_acceptance
from perturbed_fixpoint import gallery
from perturbed_fixpoint.cli import main
from perturbed_fixpoint.commands import RunConfig, certify_report
from perturbed_fixpoint.contraction import estimate_coefficient
from perturbed_fixpoint.dsl import evaluate, parse, unparse
from perturbed_fixpoint.errors import ParseError
from perturbed_fixpoint.oracle import brute_force_fixed_points, brute_force_sup_ratio
from perturbed_fixpoint.solver import multistart_points, solve
from perturbed_fixpoint.space import check_metric_axioms, exact_distance, recheck_violation

SEED, BUDGET = 42, 10_000


def _criterion(number, label, check):
    try:
        detail = check()
    except AssertionError as err:
        record_acceptance(f"[FAIL] criterion {number}: {label} ({err})")
        raise
    record_acceptance(f"[PASS] criterion {number}: {label}" + (f" ({detail})" if detail else ""))


def _cert(prob, kind="kannan"):
    return estimate_coefficient(prob.space, prob.T, kind, BUDGET, SEED)


def test_criterion_01_geometric_step_bound(quarter):
    def check():
        cert = _cert(quarter)
        trace = solve(quarter.space, quarter.T, cert, 1.0, tol=1e-40, max_iter=1000)
        assert trace.converged, trace.stop_reason
        assert len(trace.steps) >= 50, f"only {len(trace.steps)} steps"
        b, D0 = cert.beta, trace.D0
        worst = max(s.D - (b**s.n * D0 + 1e-9) for s in trace.steps)
        assert worst <= 0, f"step bound exceeded by {worst}"
        return f"{len(trace.steps)} steps, beta={b:.6f}"

    _criterion(1, "geometric step bound on quarter_map", check)


def test_criterion_02_tail_bound(instances):
    def check():
        checked = 0
        for name in gallery.KANNAN_INSTANCES:
            prob = instances[name]
            cert = _cert(prob)
            for x0 in multistart_points(prob.space.domain, SEED):
                trace = solve(prob.space, prob.T, cert, x0)
                assert trace.converged, f"{name} from {x0}: {trace.stop_reason}"
                final = trace.fixed_point
                for s in trace.steps:
                    gap = exact_distance(prob.space, s.x, final)
                    bound = cert.beta**s.n * trace.D0 / ((1 - cert.beta) * prob.space.c)
                    assert gap <= bound + 1e-9, f"{name} n={s.n}: {gap} > {bound}"
                    checked += 1
        return f"{checked} trace steps over {len(gallery.KANNAN_INSTANCES)} instances"

    _criterion(2, "tail bound on replayed traces", check)


def test_criterion_03_convergence(quarter):
    def check():
        trace = solve(quarter.space, quarter.T, _cert(quarter), 1.0)
        assert trace.converged and len(trace.steps) <= 20, f"{len(trace.steps)} iterations"
        assert trace.residual <= 1e-9, f"residual {trace.residual}"
        for s in trace.steps:
            assert abs(s.x[0] - 4.0**-s.n) <= 1e-12, f"x_{s.n} = {s.x[0]}"
        return f"{len(trace.steps)} iterations, residual={trace.residual:.3g}"

    _criterion(3, "quarter_map converges with closed-form iterates", check)


def test_criterion_04_coefficient_ground_truth(quarter):
    def check():
        alpha_hat = _cert(quarter).alpha_hat
        oracle = brute_force_sup_ratio(quarter.space, quarter.T, "kannan", 1e-3)
        lo, hi = 1 / 3 - 2e-3, 1 / 3 + 1e-6
        assert lo <= alpha_hat <= hi, f"alpha_hat={alpha_hat}"
        assert lo <= oracle <= hi, f"oracle={oracle}"
        assert abs(alpha_hat - oracle) <= 2e-3, f"alpha_hat={alpha_hat} oracle={oracle}"
        return f"alpha_hat={alpha_hat!r}, oracle={oracle!r}"

    _criterion(4, "Kannan coefficient matches the grid oracle", check)


def test_criterion_05_class_separation(instances):
    def check():
        half = instances["half_map"]
        b, k = _cert(half, "banach"), _cert(half, "kannan")
        assert b.valid and abs(b.alpha_hat - 0.5) <= 1e-3, f"banach alpha_hat={b.alpha_hat}"
        assert not k.valid and k.alpha_hat >= 1 - 1e-3, f"kannan alpha_hat={k.alpha_hat}"
        return f"banach={b.alpha_hat!r} valid, kannan={k.alpha_hat!r} invalid"

    _criterion(5, "half_map is Banach but not Kannan", check)


def test_criterion_06_discontinuous_map(instances):
    def check():
        prob = instances["discont_kannan"]
        cert = _cert(prob)
        assert cert.valid, f"alpha_bound={cert.alpha_bound}"
        step = 1e-4
        grid = brute_force_fixed_points(prob.space, prob.T, step)
        assert len(grid) == 1, f"oracle found {len(grid)} fixed points"
        for x0 in multistart_points(prob.space.domain, SEED):
            trace = solve(prob.space, prob.T, cert, x0)
            assert trace.converged, trace.stop_reason
            gap = exact_distance(prob.space, trace.fixed_point, grid[0])
            assert gap <= step, f"from {x0}: gap {gap}"
        return f"alpha_hat={cert.alpha_hat!r}, fixed point {grid[0].tolist()}"

    _criterion(6, "discont_kannan certified and solved across the jump", check)


def test_criterion_07_uniqueness(instances):
    def check():
        for name in gallery.KANNAN_INSTANCES:
            prob = instances[name]
            assert prob.space.eq_tol == 1e-9
            code, rep = certify_report(prob, RunConfig("certify", seed=SEED, budget=BUDGET))
            assert code == 0, f"{name}: {rep['failures']}"
            reps = rep["uniqueness"]["representatives"]
            assert len(rep["uniqueness"]["starts"]) == 5 and len(reps) == 1, f"{name}: {reps}"
        return ", ".join(gallery.KANNAN_INSTANCES)

    _criterion(7, "5-start probe merges to one fixed point", check)


def test_criterion_08_axiom_checker(instances, quarter):
    def check():
        bad = instances["triangle_violator"].space
        rep = check_metric_axioms(bad, 10_000, SEED)
        tri = [v for v in rep.violations if v["axiom"] == "triangle"]
        assert rep.verdict == "fail" and tri, "triangle_violator accepted"
        assert recheck_violation(bad, tri[0]), "witness does not reproduce"
        good = check_metric_axioms(quarter.space, 100_000, SEED)
        assert good.verdict == "pass", f"quarter_map violations {good.violation_counts}"
        return f"witness {tri[0]['witness']}"

    _criterion(8, "axiom checker rejects triangle_violator, accepts quarter_map", check)


def test_criterion_09_determinism(tmp_path):
    def check():
        outputs = []
        for name in gallery.KANNAN_INSTANCES:
            path = tmp_path / f"{name}.json"
            path.write_text(json.dumps(gallery.get(name).to_problem_json()))
            runs = []
            for _ in range(2):
                buf = io.StringIO()
                main(["certify", str(path), "--json"], out=buf)
                runs.append(buf.getvalue().encode())
            assert runs[0] == runs[1], f"{name} output differs"
            outputs.append(len(runs[0]))
        return f"{len(outputs)} instances"

    _criterion(9, "identical certify runs give byte-identical JSON", check)


def _gallery_expressions():
    out = []
    for inst in gallery.gallery():
        dim = len(inst.doc["domain"]["box"]["lo"])
        ts = inst.doc["T"] if isinstance(inst.doc["T"], list) else [inst.doc["T"]]
        out += [(inst.doc["D"], "D", dim), (inst.doc["P"], "P", dim)] + [(t, "T", dim) for t in ts]
    return out


def _mutations(sources, count, seed):
    rng = np.random.default_rng(seed)
    junk = list("()[],+-*/$#@xy0. ") + ["abs(", "if_lt(", "1e999", "z", "pow(x"]
    for _ in range(count):
        src = sources[rng.integers(len(sources))][0]
        i = int(rng.integers(len(src) + 1))
        op = rng.integers(3)
        if op == 0:
            src = src[:i]
        elif op == 1:
            src = src[:i] + junk[rng.integers(len(junk))] + src[i:]
        else:
            src = src[:i] + src[i + 1:]
        yield src


def test_criterion_10_parser():
    def check():
        exprs = _gallery_expressions()
        rng = np.random.default_rng(SEED)
        worst = 0.0
        for source, context, dim in exprs:
            e = parse(source, context, dim)
            e2 = parse(unparse(e), context, dim)
            x = rng.uniform(-1, 1, size=(100, dim))
            y = rng.uniform(-1, 1, size=(100, dim))
            args = (x,) if context == "T" else (x, y)
            worst = max(worst, float(np.max(np.abs(evaluate(e, *args) - evaluate(e2, *args)))))
        assert worst <= 1e-9, f"round-trip drift {worst}"
        rejected = 0
        for src in _mutations(exprs, 2000, SEED):
            try:
                parse(src, "D", 1)
            except ParseError as err:
                assert isinstance(err.offset, int) and 0 <= err.offset <= len(src.encode()), src
                rejected += 1
            except Exception as err:  # noqa: BLE001
                raise AssertionError(f"{src!r} crashed with {type(err).__name__}: {err}")
        assert rejected > 0
        return f"{len(exprs)} expressions, max drift {worst:.1e}, {rejected}/2000 mutants rejected"

    _criterion(10, "parser round-trip and positioned errors", check)
