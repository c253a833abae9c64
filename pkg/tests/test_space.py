import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_finite, make_problem
from perturbed_fixpoint.errors import (
    EmptyDomain,
    FloorViolation,
    NegativeExact,
    NonFinite,
    NotQuotientMode,
    ProblemError,
)
from perturbed_fixpoint.oracle import brute_force_triangle
from perturbed_fixpoint.space import (
    TAU_NUM,
    Box,
    FiniteDomain,
    PerturbedSpace,
    check_floor,
    check_metric_axioms,
    exact_distance,
    recheck_violation,
    sample_tuples,
)


def space_of(D, P, lo=(-1.0,), hi=(1.0,), c=None, mode="quotient"):
    return make_problem(D, P, "x", lo, hi, c=c, mode=mode).space


# -- exact_distance ---------------------------------------------------------------

def test_quotient_distance():
    s = space_of("2 * abs(x - y)", "2", lo=(0.0,), hi=(4.0,), c=2.0)
    assert exact_distance(s, 1.0, 3.0) == 2.0


@pytest.mark.parametrize("mode", ["quotient", "subtractive"])
def test_diagonal_is_zero(mode):
    s = space_of("abs(x - y) + 1", "1", c=1.0, mode=mode) if mode == "subtractive" else space_of(
        "abs(x - y)", "1 + abs(x)", c=1.0
    )
    assert exact_distance(s, 0.3, 0.3) == 0.0


def test_subtractive_distance():
    s = space_of("abs(x - y) + 1", "1", lo=(0.0,), hi=(2.0,), mode="subtractive")
    assert exact_distance(s, 0.0, 2.0) == 2.0


def test_floor_violation_raised():
    s = space_of("abs(x - y)", "abs(x - y) + 0.5", c=1.0)
    with pytest.raises(FloorViolation):
        exact_distance(s, 0.0, 0.1)


def test_nonfinite_raised():
    s = space_of("exp(1000 * x)", "1", c=1.0)
    with pytest.raises(NonFinite):
        exact_distance(s, 1.0, 0.0)


def test_negative_subtractive_raised_and_tiny_clamped():
    s = space_of("abs(x - y)", "1", mode="subtractive")
    with pytest.raises(NegativeExact):
        exact_distance(s, 0.0, 0.5)
    tiny = space_of("abs(x - y) + 1 - 0.0000000005", "1", mode="subtractive")
    assert exact_distance(tiny, 0.2, 0.2) == 0.0


def test_quotient_needs_positive_floor():
    base = space_of("abs(x - y)", "1", c=1.0)
    for bad in (0.0, -1.0, None):
        with pytest.raises(FloorViolation):
            PerturbedSpace(base.domain, base.D, base.P, "quotient", bad)


def test_empty_domains():
    with pytest.raises(EmptyDomain):
        Box((1.0,), (0.0,))
    with pytest.raises(EmptyDomain):
        FiniteDomain(())


# -- check_floor ------------------------------------------------------------------

def test_constant_floor_passes():
    s = space_of("2 * abs(x - y)", "2", c=2.0)
    for budget in (1, 17, 1000):
        rep = check_floor(s, budget, seed=3)
        assert rep.verdict == "pass" and rep.violations == []


def test_floor_failure_has_witness():
    s = space_of("abs(x - y)", "abs(x - y) + 0.5", lo=(0.0,), hi=(1.0,), c=1.0)
    rep = check_floor(s, 200, seed=0)
    assert rep.verdict == "fail"
    v = rep.violations[0]
    assert v["axiom"] == "floor" and v["rhs"] < 1.0
    assert all(recheck_violation(s, w) for w in rep.violations)


def test_floor_exhaustive_on_small_finite_domain():
    s = make_finite(10, "abs(x - y)", "1", "x", c=1.0).space
    rep = check_floor(s, 1000, seed=0)
    assert rep.exhaustive and rep.checked["floor"] == 100


def test_floor_rejects_subtractive():
    s = space_of("abs(x - y) + 1", "1", mode="subtractive")
    with pytest.raises(NotQuotientMode):
        check_floor(s, 10, seed=0)


# -- check_metric_axioms ---------------------------------------------------------

def test_scaled_absolute_value_is_a_metric():
    s = space_of("2 * abs(x - y)", "2", c=2.0)
    assert check_metric_axioms(s, 5000, seed=42).verdict == "pass"


def test_squared_distance_fails_triangle():
    s = space_of("pow(x - y, 2)", "1", lo=(0.0,), hi=(2.0,), c=1.0)
    rep = check_metric_axioms(s, 2000, seed=42)
    assert rep.verdict == "fail"
    tri = [v for v in rep.violations if v["axiom"] == "triangle"]
    assert tri and all(v["lhs"] > v["rhs"] for v in tri)
    assert all(recheck_violation(s, v) for v in rep.violations)
    # the oracle agrees, and the canonical triple (0, 1, 2) gives lhs 4 > rhs 2
    count, witness = brute_force_triangle(s, 0.25)
    assert count > 0
    assert exact_distance(s, 0.0, 2.0) == 4.0
    assert exact_distance(s, 0.0, 1.0) + exact_distance(s, 1.0, 2.0) == 2.0


def test_bounded_transform_is_a_metric():
    # d = |x-y| / (1 + |x-y|): the brute-force grid scan certifies it is a metric
    s = space_of("abs(x - y)", "1 + abs(x - y)", lo=(0.0,), hi=(4.0,), c=1.0)
    count, _ = brute_force_triangle(s, 0.25)
    assert count == 0
    assert check_metric_axioms(s, 5000, seed=42).verdict == "pass"


def test_asymmetry_detected():
    s = space_of("abs(x - y) + max(x - y, 0)", "1", c=1.0)
    rep = check_metric_axioms(s, 500, seed=1)
    assert "symmetry" in rep.violation_counts


def test_identity_failure_detected():
    s = space_of("abs(x - y) + 0.1", "1", c=1.0)
    rep = check_metric_axioms(s, 100, seed=1)
    assert "identity" in rep.violation_counts


def test_exhaustive_finite_counts():
    s = make_finite(5, "abs(x - y)", "1", "x", c=1.0).space
    rep = check_metric_axioms(s, 200, seed=0)
    assert rep.exhaustive
    assert rep.checked["triangle"] == 125 and rep.checked["symmetry"] == 25


def test_discrete_metric_on_finite_embedding():
    s = make_finite(4, "min(norm1(x - y) * 100, 1)", "1", "x", c=1.0,
                    embedding=[[0, 0], [0, 1], [1, 0], [1, 1]]).space
    assert check_metric_axioms(s, 1000, seed=0).verdict == "pass"


def test_nonfinite_propagates():
    s = space_of("abs(x - y) * exp(1000 * x)", "1", c=1.0)
    with pytest.raises(NonFinite):
        check_metric_axioms(s, 100, seed=0)


def test_determinism_byte_for_byte():
    s = space_of("pow(x - y, 2)", "1", lo=(0.0,), hi=(2.0,), c=1.0)
    a = json.dumps(check_metric_axioms(s, 3000, seed=9).to_dict(), sort_keys=True)
    b = json.dumps(check_metric_axioms(s, 3000, seed=9).to_dict(), sort_keys=True)
    assert a == b
    c = json.dumps(check_metric_axioms(s, 3000, seed=10).to_dict(), sort_keys=True)
    assert a != c


def test_sampler_prefix_is_stable():
    box = Box((-1.0, 0.0), (1.0, 3.0))
    (a1, b1), _ = sample_tuples(box, 2, 50, seed=4)
    (a2, b2), _ = sample_tuples(box, 2, 300, seed=4)
    assert np.array_equal(a1, a2[:50]) and np.array_equal(b1, b2[:50])
    assert box.contains(a2).all() and box.contains(b2).all()


def test_estimated_floor_is_flagged():
    s = make_problem("abs(x - y)", "1 + abs(x - y)", "x / 4").space
    assert s.c_estimated
    assert 0.999 < s.c <= 1.0


def test_estimated_floor_needs_positive_p():
    with pytest.raises(FloorViolation):
        make_problem("abs(x - y)", "abs(x - y)", "x / 4")


def test_zero_floor_in_file_rejected():
    with pytest.raises(ProblemError):
        make_problem("abs(x - y)", "1", "x", c=0)


# -- properties -------------------------------------------------------------------

_PERTURBED = space_of("abs(x - y) * (1 + abs(x) + abs(y))", "1 + abs(x) + abs(y)",
                      lo=(-3.0,), hi=(3.0,), c=1.0)
_points = st.floats(-3, 3, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(_points, _points)
def test_quotient_positivity(x, y):
    assert np.isfinite(exact_distance(_PERTURBED, x, y))


@settings(max_examples=200, deadline=None)
@given(_points, _points)
def test_identity_link(x, y):
    d = exact_distance(_PERTURBED, x, y)
    dv, pv = _PERTURBED.raw(np.array([[x]]), np.array([[y]]))
    assert (d <= TAU_NUM) == (dv[0] <= TAU_NUM * pv[0])


@pytest.mark.parametrize("lam", [0.5, 3.0])
@settings(max_examples=100, deadline=None)
@given(x=_points, y=_points)
def test_scale_invariance(lam, x, y):
    scaled = _PERTURBED.scaled(lam)
    d, ds = exact_distance(_PERTURBED, x, y), exact_distance(scaled, x, y)
    assert abs(d - ds) <= TAU_NUM * max(1.0, abs(d))


def test_axiom_report_invariants_hold_for_failures():
    s = space_of("pow(x - y, 2) + abs(x - y) * max(x - y, 0)", "1", lo=(0.0,), hi=(2.0,), c=1.0)
    rep = check_metric_axioms(s, 2000, seed=5)
    assert (rep.verdict == "fail") == bool(rep.violations)
    assert all(recheck_violation(s, v) for v in rep.violations)
