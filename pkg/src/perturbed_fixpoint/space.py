"""Perturbed metric spaces, the exact metric they induce, and sampled axiom checks.

A space is a ground set (a bounding box in R^n or an enumerated finite set) with
two non-negative functions D and P.  In ``quotient`` mode the exact metric is
``d = D / P`` with ``P >= c > 0``; in ``subtractive`` mode it is ``d = D - P``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import qmc

from . import dsl
from .errors import (
    EmptyDomain,
    FloorViolation,
    NegativeExact,
    NonFinite,
    NotQuotientMode,
)

TAU_NUM = 1e-9
TAU_TRI = 1e-9
FLOOR_ESTIMATE_SHRINK = 1e-6
MAX_WITNESSES = 10

AXIOMS = ("non_negativity", "identity", "symmetry", "triangle", "floor")


# -- domains --------------------------------------------------------------------

@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``lo <= x <= hi``; elements are float vectors."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or len(self.lo) == 0:
            raise EmptyDomain("box bounds must be non-empty and of equal length")
        if any(not np.isfinite(v) for v in (*self.lo, *self.hi)):
            raise EmptyDomain("box bounds must be finite")
        if any(a > b for a, b in zip(self.lo, self.hi)):
            raise EmptyDomain(f"box lo {list(self.lo)} exceeds hi {list(self.hi)}")

    @property
    def dimension(self):
        return len(self.lo)

    @property
    def lo_arr(self):
        return np.asarray(self.lo, dtype=float)

    @property
    def hi_arr(self):
        return np.asarray(self.hi, dtype=float)

    def as_batch(self, elements):
        arr = np.asarray(elements, dtype=float)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1) if arr.shape[0] == self.dimension else arr.reshape(-1, 1)
        if arr.shape[1] != self.dimension:
            raise ValueError(f"expected points of dimension {self.dimension}, got {arr.shape[1]}")
        return arr

    def coords(self, batch):
        return batch

    def contains(self, batch):
        return np.all(
            (batch >= self.lo_arr - TAU_NUM) & (batch <= self.hi_arr + TAU_NUM), axis=1
        ) & np.all(np.isfinite(batch), axis=1)

    def element(self, batch, i):
        return np.array(batch[i], dtype=float)

    def to_json(self, element):
        return [float(v) for v in np.atleast_1d(element)]

    def center(self):
        return (self.lo_arr + self.hi_arr) / 2

    def from_unit(self, u):
        return self.lo_arr + u * (self.hi_arr - self.lo_arr)

    def reflect(self, batch):
        return self.lo_arr + self.hi_arr - batch

    def describe(self):
        return {"box": {"lo": [float(v) for v in self.lo], "hi": [float(v) for v in self.hi]}}


@dataclass(frozen=True)
class FiniteDomain:
    """Enumerated ground set; elements are indices, evaluated via ``embedding``."""

    embedding: tuple

    def __post_init__(self):
        if len(self.embedding) == 0:
            raise EmptyDomain("finite domain has no elements")
        widths = {len(row) for row in self.embedding}
        if len(widths) != 1 or 0 in widths:
            raise EmptyDomain("embedding rows must be non-empty and of equal length")

    @classmethod
    def of_size(cls, size, embedding=None):
        if embedding is None:
            embedding = [[float(i)] for i in range(size)]
        if len(embedding) != size:
            raise EmptyDomain(f"embedding has {len(embedding)} rows, size is {size}")
        return cls(tuple(tuple(float(v) for v in row) for row in embedding))

    @property
    def size(self):
        return len(self.embedding)

    @property
    def dimension(self):
        return len(self.embedding[0])

    @property
    def table(self):
        return np.asarray(self.embedding, dtype=float)

    def as_batch(self, elements):
        arr = np.atleast_1d(np.asarray(elements))
        if arr.dtype.kind == "f":
            if not np.all(arr == np.round(arr)):
                raise ValueError("finite-domain elements are integer indices")
        return arr.astype(np.int64).reshape(-1)

    def coords(self, batch):
        return self.table[batch]

    def contains(self, batch):
        return (batch >= 0) & (batch < self.size)

    def element(self, batch, i):
        return int(batch[i])

    def to_json(self, element):
        return int(element)

    def center(self):
        return 0

    def lookup(self, coords, tol=TAU_NUM):
        """Index of the embedding row matching each coordinate row, or -1."""
        table = self.table
        out = np.full(coords.shape[0], -1, dtype=np.int64)
        for start in range(0, coords.shape[0], 4096):
            chunk = coords[start : start + 4096]
            gap = np.abs(chunk[:, None, :] - table[None, :, :]).max(axis=2)
            best = gap.argmin(axis=1)
            ok = gap[np.arange(len(chunk)), best] <= tol
            out[start : start + 4096] = np.where(ok, best, -1)
        return out

    def describe(self):
        return {"finite": {"size": self.size, "embedding": [list(r) for r in self.embedding]}}


Domain = Box | FiniteDomain


# -- bivariate functions ------------------------------------------------------------

@dataclass(frozen=True)
class Bivariate:
    """A function X x X -> R given as DSL source or as a batched Python callable.

    The callable form receives coordinate arrays of shape ``(m, n)`` and returns
    shape ``(m,)``.
    """

    source: str | None = None
    expr: object = None
    fn: Callable | None = field(default=None, compare=False)

    @classmethod
    def parse(cls, source, role="D", dimension=1):
        return cls(source=source, expr=dsl.parse(source, role, dimension))

    @classmethod
    def from_callable(cls, fn, name=None):
        return cls(source=name, fn=fn)

    def __call__(self, a, b):
        if self.fn is not None:
            return np.asarray(self.fn(a, b), dtype=float).reshape(-1)
        return dsl.evaluate(self.expr, a, b)


# -- the space ----------------------------------------------------------------------

@dataclass(frozen=True)
class PerturbedSpace:
    domain: Domain
    D: Bivariate
    P: Bivariate
    mode: str = "quotient"
    c: float | None = None
    c_estimated: bool = False
    eq_tol: float = 1e-9

    def __post_init__(self):
        if self.mode not in ("quotient", "subtractive"):
            raise ValueError(f"mode must be 'quotient' or 'subtractive', got {self.mode!r}")
        if self.mode == "quotient" and (self.c is None or not self.c > 0):
            raise FloorViolation(f"quotient mode needs a floor c > 0, got {self.c!r}")
        if self.eq_tol < 0:
            raise ValueError("eq_tol must be non-negative")

    @property
    def dimension(self):
        return self.domain.dimension

    def raw(self, a, b):
        """D and P on two element batches, checked finite."""
        ca, cb = self.domain.coords(a), self.domain.coords(b)
        dv = self.D(ca, cb)
        pv = self.P(ca, cb)
        dv, pv = np.broadcast_arrays(dv, pv)
        bad = ~(np.isfinite(dv) & np.isfinite(pv))
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise NonFinite(
                f"D or P is not finite at ({self._show(a, i)}, {self._show(b, i)}):"
                f" D={dv[i]!r}, P={pv[i]!r}"
            )
        return dv, pv

    def _show(self, batch, i):
        return self.domain.to_json(self.domain.element(batch, i % len(batch)))

    def unchecked_distances(self, a, b):
        """Exact metric without floor checks or clamping; used by the axiom audit."""
        dv, pv = self.raw(a, b)
        if self.mode == "subtractive":
            return dv - pv
        with np.errstate(all="ignore"):
            out = dv / pv
        if not np.all(np.isfinite(out)):
            i = int(np.flatnonzero(~np.isfinite(out))[0])
            raise NonFinite(f"D/P is not finite at ({self._show(a, i)}, {self._show(b, i)})")
        return out

    def distances(self, a, b):
        """Exact metric on two element batches of equal length."""
        dv, pv = self.raw(a, b)
        if self.mode == "quotient":
            low = pv < self.c - TAU_NUM
            if low.any():
                i = int(np.flatnonzero(low)[0])
                raise FloorViolation(
                    f"P={pv[i]!r} below floor c={self.c!r} at"
                    f" ({self._show(a, i)}, {self._show(b, i)})"
                )
            out = dv / pv
        else:
            out = dv - pv
            neg = out < -TAU_NUM
            if neg.any():
                i = int(np.flatnonzero(neg)[0])
                raise NegativeExact(
                    f"D - P = {out[i]!r} < 0 at ({self._show(a, i)}, {self._show(b, i)})"
                )
        return np.where((out < 0) & (out >= -TAU_NUM), 0.0, out)

    def distance(self, x, y):
        a, b = self.domain.as_batch(x), self.domain.as_batch(y)
        return float(self.distances(a, b)[0])

    def D_values(self, a, b):
        return self.raw(a, b)[0]

    def scaled(self, lam):
        """Same space with (D, P) replaced by (lam*D, lam*P)."""
        D, P = self.D, self.P
        return PerturbedSpace(
            self.domain,
            Bivariate.from_callable(lambda u, v: lam * D(u, v)),
            Bivariate.from_callable(lambda u, v: lam * P(u, v)),
            self.mode,
            None if self.c is None else lam * self.c,
            self.c_estimated,
            self.eq_tol,
        )


def exact_distance(space: PerturbedSpace, x, y) -> float:
    return space.distance(x, y)


# -- sampling -------------------------------------------------------------------

def sample_tuples(domain, arity, budget, seed):
    """``budget`` seeded tuples of ``arity`` elements; exhaustive on small finite sets.

    Box samples come from a scrambled Sobol sequence over the product box, so a
    larger budget with the same seed extends (never reshuffles) a smaller one.
    Returns ``(batches, exhaustive)``.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if isinstance(domain, FiniteDomain):
        n = domain.size
        if n**arity <= budget:
            grid = np.indices((n,) * arity).reshape(arity, -1)
            return [grid[k].astype(np.int64) for k in range(arity)], True
        rng = np.random.default_rng(seed)
        idx = rng.integers(0, n, size=(budget, arity))
        return [idx[:, k] for k in range(arity)], False
    dim = domain.dimension
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        u = qmc.Sobol(d=arity * dim, scramble=True, seed=seed).random(budget)
    return [domain.from_unit(u[:, k * dim : (k + 1) * dim]) for k in range(arity)], False


def estimate_floor(domain, P, budget=10_000, seed=42):
    """Conservative floor for P from sampled pairs: ``min P * (1 - 1e-6)``."""
    (a, b), _ = sample_tuples(domain, 2, budget, seed)
    diag = domain.as_batch([domain.center()])
    pv = np.concatenate([P(domain.coords(a), domain.coords(b)), P(domain.coords(diag), domain.coords(diag))])
    if not np.all(np.isfinite(pv)):
        raise NonFinite("P is not finite on the sampled pairs")
    low = float(pv.min())
    if low <= 0:
        raise FloorViolation(f"sampled P reaches {low!r}; no positive floor exists")
    return low * (1 - FLOOR_ESTIMATE_SHRINK)


# -- axiom reports ----------------------------------------------------------------

@dataclass
class AxiomReport:
    """Outcome of a sampled audit.  A violation means ``lhs > rhs + slack``."""

    checked: dict
    violations: list
    violation_counts: dict
    seed: int
    budget: int
    exhaustive: bool = False

    @property
    def verdict(self):
        return "fail" if self.violations else "pass"

    @property
    def passed(self):
        return not self.violations

    def to_dict(self):
        return {
            "budget": self.budget,
            "checked": dict(sorted(self.checked.items())),
            "exhaustive": self.exhaustive,
            "seed": self.seed,
            "verdict": self.verdict,
            "violation_counts": dict(sorted(self.violation_counts.items())),
            "violations": self.violations,
        }


class _Collector:
    def __init__(self, domain):
        self.domain = domain
        self.checked = {}
        self.counts = {}
        self.violations = []

    def add(self, axiom, mask, lhs, rhs, witnesses):
        mask = np.asarray(mask, dtype=bool)
        self.checked[axiom] = self.checked.get(axiom, 0) + int(mask.size)
        hits = np.flatnonzero(mask)
        if hits.size == 0:
            return
        self.counts[axiom] = self.counts.get(axiom, 0) + int(hits.size)
        lhs, rhs = np.broadcast_to(lhs, mask.shape), np.broadcast_to(rhs, mask.shape)
        # keep the most severe violations; ties broken by sample order
        severity = lhs[hits] - rhs[hits]
        keep = hits[np.argsort(-severity, kind="stable")[:MAX_WITNESSES]]
        for i in keep:
            self.violations.append(
                {
                    "axiom": axiom,
                    "lhs": float(lhs[i]),
                    "rhs": float(rhs[i]),
                    "witness": [self.domain.to_json(self.domain.element(w, i)) for w in witnesses],
                }
            )

    def report(self, seed, budget, exhaustive):
        self.violations.sort(key=lambda v: (v["axiom"], _witness_key(v["witness"]), v["lhs"]))
        return AxiomReport(self.checked, self.violations, self.counts, seed, budget, exhaustive)


def _witness_key(witness):
    return tuple(tuple(np.atleast_1d(w).tolist()) for w in witness)


def _floor_terms(space, a, b, col):
    pv = space.raw(a, b)[1]
    col.add("floor", pv < space.c - TAU_NUM, np.full(pv.shape, space.c), pv, (a, b))


def check_floor(space: PerturbedSpace, budget: int, seed: int) -> AxiomReport:
    """Audit ``P(x, y) >= c`` on ``budget`` sampled ordered pairs."""
    if space.mode != "quotient":
        raise NotQuotientMode("the floor condition applies to quotient spaces only")
    (a, b), exhaustive = sample_tuples(space.domain, 2, budget, seed)
    col = _Collector(space.domain)
    _floor_terms(space, a, b, col)
    return col.report(seed, budget, exhaustive)


def check_metric_axioms(space: PerturbedSpace, budget: int, seed: int) -> AxiomReport:
    """Audit the metric axioms of the exact metric on sampled pairs and triples.

    Pairs are used for non-negativity, identity (``d(x, x) <= tau``) and symmetry,
    triples for the triangle inequality.  Quotient spaces also audit the floor on
    the same pairs.
    """
    domain = space.domain
    col = _Collector(domain)
    (a, b), ex_pairs = sample_tuples(domain, 2, budget, seed)
    (p, q, r), ex_trip = sample_tuples(domain, 3, budget, seed + 1)

    dab = space.unchecked_distances(a, b)
    dba = space.unchecked_distances(b, a)
    col.add("non_negativity", dab < -TAU_NUM, np.zeros_like(dab), dab, (a, b))
    points = _distinct_points(domain, a)
    daa = space.unchecked_distances(points, points)
    col.add("identity", daa > TAU_NUM, daa, np.zeros_like(daa), (points,))
    asym = np.abs(dab - dba)
    col.add("symmetry", asym > TAU_NUM, asym, np.zeros_like(asym), (a, b))

    dpr = np.maximum(space.unchecked_distances(p, r), 0.0)
    via = np.maximum(space.unchecked_distances(p, q), 0.0) + np.maximum(
        space.unchecked_distances(q, r), 0.0
    )
    col.add("triangle", dpr > via + TAU_TRI, dpr, via, (p, q, r))

    if space.mode == "quotient":
        _floor_terms(space, a, b, col)
    return col.report(seed, budget, ex_pairs and ex_trip)


def _distinct_points(domain, batch):
    if isinstance(domain, FiniteDomain):
        return np.unique(batch)
    return batch


def recheck_violation(space: PerturbedSpace, violation: dict) -> bool:
    """Recompute a recorded violation from its witness; True if it still fails."""
    dom = space.domain
    w = [dom.as_batch([e]) for e in violation["witness"]]
    axiom = violation["axiom"]
    if axiom == "floor":
        return bool(space.raw(w[0], w[1])[1][0] < space.c - TAU_NUM)
    if axiom == "identity":
        return bool(space.unchecked_distances(w[0], w[0])[0] > TAU_NUM)
    if axiom == "non_negativity":
        return bool(space.unchecked_distances(w[0], w[1])[0] < -TAU_NUM)
    if axiom == "symmetry":
        gap = space.unchecked_distances(w[0], w[1])[0] - space.unchecked_distances(w[1], w[0])[0]
        return bool(abs(gap) > TAU_NUM)
    lhs = max(space.unchecked_distances(w[0], w[2])[0], 0.0)
    rhs = max(space.unchecked_distances(w[0], w[1])[0], 0.0) + max(
        space.unchecked_distances(w[1], w[2])[0], 0.0
    )
    return bool(lhs > rhs + TAU_TRI)

