"""Picard iteration with certified a-priori / a-posteriori error bounds.

Under a Kannan certificate with coefficient ``alpha`` the step gaps obey
``D_{n+1} <= beta * D_n`` with ``beta = alpha / (1 - alpha)``; dividing by the
floor ``c <= P`` and summing the geometric tail gives

    d(x_n, x*)     <= beta**n * D_0 / ((1 - beta) * c)      (a priori)
    d(x_{n+1}, x*) <= beta * D_n / ((1 - beta) * c)         (a posteriori)

A Banach certificate gives the same chain with ``beta`` replaced by ``alpha``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .contraction import ContractionCertificate, SelfMap
from .errors import (
    AlphaOutOfRange,
    BetaOutOfRange,
    BoundBlowup,
    InvalidCertificate,
    LeftDomain,
    MaxIterExceeded,
    NonPositiveFloor,
    NotAFixedPoint,
    NotQuotientMode,
    UniquenessViolation,
    UntrustedFloor,
)
from .space import TAU_NUM, Box, FiniteDomain, PerturbedSpace

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 1_000_000
BLOWUP_SLACK = 10 * TAU_NUM
BLOWUP_STREAK = 3


def beta(alpha: float) -> float:
    """Step-gap contraction rate ``alpha / (1 - alpha)`` of a Kannan map."""
    if not 0 <= alpha < 0.5:
        raise AlphaOutOfRange(f"Kannan coefficient must lie in [0, 1/2), got {alpha!r}")
    return alpha / (1 - alpha)


def _check_rate(rate, c):
    if not 0 <= rate < 1:
        raise BetaOutOfRange(f"rate must lie in [0, 1), got {rate!r}")
    if not c > 0:
        raise NonPositiveFloor(f"floor c must be positive, got {c!r}")


def apriori_bound(n: int, beta: float, D0: float, c: float) -> float:
    _check_rate(beta, c)
    if n < 0:
        raise ValueError("n must be non-negative")
    return beta**n * D0 / ((1 - beta) * c)


def aposteriori_bound(D_n: float, beta: float, c: float) -> float:
    _check_rate(beta, c)
    return beta * D_n / ((1 - beta) * c)


def _plain(v):
    return v.tolist() if isinstance(v, np.ndarray) else v


@dataclass
class Step:
    n: int
    x: object
    D: float
    d: float
    apriori: float
    aposteriori: float


@dataclass
class IterationTrace:
    x0: object
    kind: str
    rate: float
    c: float
    tol: float
    steps: list = field(default_factory=list)
    stop_reason: str | None = None
    fixed_point: object = None
    residual: float | None = None
    message: str = ""

    @property
    def converged(self):
        return self.stop_reason == "converged"

    @property
    def D0(self):
        return self.steps[0].D if self.steps else 0.0

    @property
    def iterates(self):
        return [s.x for s in self.steps]

    def raise_for_status(self):
        """Raise the exception matching a non-converged stop; no-op on success."""
        if self.stop_reason == "max_iter":
            raise MaxIterExceeded(self.message, self)
        if self.stop_reason == "bound_blowup":
            raise BoundBlowup(self.message, self)
        if self.stop_reason == "left_domain":
            err = LeftDomain(self.message)
            err.trace = self
            raise err
        return self

    def summary(self, to_json=_plain):
        return {
            "bound_kind": "derived" if self.kind == "banach" else "kannan",
            "c": self.c,
            "certificate_kind": self.kind,
            "D0": self.D0,
            "final_apriori": self.steps[-1].apriori if self.steps else None,
            "final_aposteriori": self.steps[-1].aposteriori if self.steps else None,
            "fixed_point": None if self.fixed_point is None else to_json(self.fixed_point),
            "iterations": len(self.steps),
            "message": self.message,
            "rate": self.rate,
            "residual": self.residual,
            "stop_reason": self.stop_reason,
            "tol": self.tol,
            "x0": to_json(self.x0),
        }

    def to_jsonl(self, to_json=_plain):
        """One JSON object per step, then ``{"summary": ...}`` on the last line."""
        lines = [
            json.dumps(
                {
                    "D_n": s.D,
                    "aposteriori": s.aposteriori,
                    "apriori": s.apriori,
                    "d_n": s.d,
                    "n": s.n,
                    "x_n": to_json(s.x),
                },
                sort_keys=True,
            )
            for s in self.steps
        ]
        lines.append(json.dumps({"summary": json_safe(self.summary(to_json))}, sort_keys=True))
        return "\n".join(lines) + "\n"


def json_safe(obj):
    """Replace non-finite floats with strings so output stays strict JSON."""
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: json_safe(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [json_safe(v) for v in obj]
    return obj


def _require_bounds(space, cert):
    if not cert.valid:
        raise InvalidCertificate(
            f"{cert.kind} certificate is not valid (alpha_bound={cert.alpha_bound!r})"
        )
    if space.mode != "quotient":
        raise NotQuotientMode("error bounds need a quotient space with a floor c")
    if space.c_estimated:
        raise UntrustedFloor("the floor c was estimated from samples; supply c to get bounds")


def solve(space: PerturbedSpace, T: SelfMap, cert: ContractionCertificate, x0,
          tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> IterationTrace:
    """Iterate ``x_{n+1} = T x_n`` from ``x0`` until the a-posteriori bound is <= tol.

    Always returns the trace; a stop other than ``converged`` is recorded in
    ``stop_reason`` (call ``raise_for_status`` to turn it into an exception).
    Raises directly when ``x0`` lies outside the domain or the certificate
    cannot back an error bound.
    """
    _require_bounds(space, cert)
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    dom = space.domain
    rate, c = cert.rate, space.c
    _check_rate(rate, c)
    cur = dom.as_batch(x0)
    if not dom.contains(cur).all():
        raise LeftDomain(f"starting point {dom.to_json(dom.element(cur, 0))} is outside the domain")

    trace = IterationTrace(dom.element(cur, 0), cert.kind, rate, c, tol)
    D0 = None
    prev_D = None
    streak = 0
    for n in range(max_iter):
        try:
            nxt = T.apply(cur)
        except LeftDomain as err:
            trace.stop_reason = "left_domain"
            trace.message = str(err)
            return trace
        D_n = float(space.D_values(cur, nxt)[0])
        d_n = float(space.distances(cur, nxt)[0])
        if D0 is None:
            D0 = D_n
        step = Step(
            n,
            dom.element(cur, 0),
            D_n,
            d_n,
            rate**n * D0 / ((1 - rate) * c),
            rate * D_n / ((1 - rate) * c),
        )
        trace.steps.append(step)

        if prev_D is not None and D_n > rate * prev_D + BLOWUP_SLACK:
            streak += 1
            if streak >= BLOWUP_STREAK:
                trace.stop_reason = "bound_blowup"
                trace.message = (
                    f"observed gap exceeded rate*previous gap for {BLOWUP_STREAK} consecutive"
                    f" steps (n={n}); the certificate's coefficient looks wrong"
                )
                return trace
        else:
            streak = 0
        prev_D = D_n

        if step.aposteriori <= tol:
            fixed = nxt
            trace.stop_reason = "converged"
            trace.fixed_point = dom.element(fixed, 0)
            trace.residual = float(space.distances(fixed, T.apply(fixed))[0])
            return trace
        cur = nxt

    trace.stop_reason = "max_iter"
    trace.message = f"no certified convergence within {max_iter} iterations"
    return trace


def merge_candidates(space: PerturbedSpace, candidates):
    """Greedy merge of candidates within ``eq_tol`` in the exact metric.

    Candidates are processed in lexicographic order so the result does not
    depend on input order.
    """
    dom = space.domain
    batch = dom.as_batch(candidates)
    keys = dom.coords(batch)
    order = np.lexsort(keys.T[::-1])
    reps = []
    for i in order:
        e = dom.element(batch, i)
        eb = dom.as_batch(e)
        if not any(space.distances(eb, dom.as_batch(r))[0] <= space.eq_tol for r in reps):
            reps.append(e)
    return reps


def verify_uniqueness(space: PerturbedSpace, T: SelfMap, cert: ContractionCertificate,
                      candidates, tol: float = DEFAULT_TOL):
    """Merge candidate fixed points; a valid certificate admits at most one.

    Raises ``UniquenessViolation`` (carrying the representatives) when a valid
    certificate leaves two or more distinct fixed points.
    """
    dom = space.domain
    if len(candidates) == 0:
        return []
    batch = dom.as_batch(candidates)
    res = space.distances(batch, T.apply(batch))
    bad = np.flatnonzero(res > tol + TAU_NUM)
    if bad.size:
        i = int(bad[0])
        raise NotAFixedPoint(
            f"candidate {dom.to_json(dom.element(batch, i))} has residual {res[i]!r} > {tol!r}"
        )
    reps = merge_candidates(space, [dom.element(batch, i) for i in range(len(batch))])
    if cert.valid and len(reps) > 1:
        raise UniquenessViolation(
            f"{len(reps)} distinct fixed points under a valid {cert.kind} certificate",
            reps,
        )
    return reps


def multistart_points(domain, seed: int, count: int = 5):
    """Box centre plus ``count - 1`` corners (seeded choice), padded along the diagonal.

    Finite domains get ``count`` seeded distinct indices.
    """
    rng = np.random.default_rng(seed)
    if isinstance(domain, FiniteDomain):
        k = min(count, domain.size)
        return [int(i) for i in np.sort(rng.choice(domain.size, size=k, replace=False))]
    assert isinstance(domain, Box)
    lo, hi = domain.lo_arr, domain.hi_arr
    starts = [domain.center()]
    n = domain.dimension
    want = count - 1
    if 2**n <= want:
        corner_ids = list(range(2**n))
    else:
        corner_ids = sorted(int(i) for i in rng.choice(2**n, size=want, replace=False))
    for cid in corner_ids:
        bits = np.array([(cid >> k) & 1 for k in range(n)], dtype=bool)
        starts.append(np.where(bits, hi, lo))
    t = 0.25
    while len(starts) < count:
        starts.append(lo + t * (hi - lo))
        t = 1 - t if t < 0.5 else t / 2
    return starts[:count]
