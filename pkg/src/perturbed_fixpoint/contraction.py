"""Banach and Kannan contraction conditions, evaluated pointwise and by sampling.

Kannan:  D(Tx, Ty) <= alpha * (D(x, Tx) + D(y, Ty)),  0 <= alpha < 1/2
Banach:  D(Tx, Ty) <= alpha * D(x, y),                 0 <= alpha < 1

Certificates are sampled evidence: the supremum of the ratio over a seeded pair
sample, inflated by a safety margin.  They are not proofs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import dsl
from .errors import ExprShapeError, LeftDomain, NoInformativePairs, ProblemError
from .space import TAU_NUM, Box, FiniteDomain, PerturbedSpace, sample_tuples

SIGMA = 0.01
KINDS = ("banach", "kannan")
KANNAN_LIMIT = 0.5
BANACH_LIMIT = 1.0


@dataclass(frozen=True)
class SelfMap:
    """The operator T: X -> X.

    ``source`` is one DSL string (vector-valued, or scalar in dimension 1) or a
    tuple of per-coordinate scalar strings.  ``fn`` is an optional batched Python
    callable on coordinate arrays used instead of the expressions.
    """

    domain: object
    source: object = None
    exprs: tuple = ()
    fn: Callable | None = None

    @classmethod
    def parse(cls, source, domain):
        dim = domain.dimension
        if isinstance(source, str):
            expr = dsl.parse(source, "T", dim)
            if dim > 1 and not expr.is_vector:
                raise ExprShapeError(
                    f"a single T expression must be vector-valued in dimension {dim};"
                    " give one expression per coordinate instead",
                    0,
                )
            return cls(domain, source, (expr,))
        source = tuple(source)
        if len(source) != dim:
            raise ProblemError(f"T has {len(source)} coordinate expressions, dimension is {dim}")
        exprs = tuple(dsl.parse(s, "T", dim) for s in source)
        for s, e in zip(source, exprs):
            if e.is_vector:
                raise ExprShapeError(f"coordinate expression {s!r} must be scalar-valued", 0)
        return cls(domain, source, exprs)

    @classmethod
    def from_callable(cls, domain, fn, name=None):
        return cls(domain, name, (), fn)

    def image_coords(self, coords):
        if self.fn is not None:
            return np.asarray(self.fn(coords), dtype=float).reshape(coords.shape[0], -1)
        if len(self.exprs) == 1:
            out = dsl.evaluate(self.exprs[0], coords)
            return out.reshape(coords.shape[0], -1)
        return np.stack([dsl.evaluate(e, coords) for e in self.exprs], axis=1)

    def apply(self, batch):
        """Images of an element batch; raises ``LeftDomain`` if any leaves X."""
        dom = self.domain
        img = self.image_coords(dom.coords(batch))
        if isinstance(dom, FiniteDomain):
            out = dom.lookup(img)
            bad = out < 0
        else:
            out = img
            bad = ~dom.contains(img)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            x = dom.to_json(dom.element(batch, i))
            raise LeftDomain(f"T maps {x} outside the domain (to {img[i].tolist()})", witness=x)
        return out

    def __call__(self, x):
        batch = self.domain.as_batch(x)
        return self.domain.element(self.apply(batch), 0)


# -- pointwise ratios -----------------------------------------------------------------

def ratios(space: PerturbedSpace, T: SelfMap, a, b, kind: str) -> np.ndarray:
    """Contraction ratio on each pair; NaN marks a skipped (0/0) pair."""
    ta, tb = T.apply(a), T.apply(b)
    num = space.D_values(ta, tb)
    if kind == "kannan":
        den = space.D_values(a, ta) + space.D_values(b, tb)
    elif kind == "banach":
        den = space.D_values(a, b)
    else:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    small = den <= TAU_NUM
    with np.errstate(all="ignore"):
        out = num / np.where(small, 1.0, den)
    if kind == "kannan":
        out = np.where(small, np.where(num <= TAU_NUM, np.nan, np.inf), out)
    else:
        # the Banach condition at D(x, y) ~ 0 says nothing about the map
        out = np.where(small, np.nan, out)
    return out


def _pair_ratio(space, T, x, y, kind):
    dom = space.domain
    r = ratios(space, T, dom.as_batch(x), dom.as_batch(y), kind)[0]
    return None if math.isnan(r) else float(r)


def kannan_ratio(space, T, x, y):
    """``D(Tx,Ty) / (D(x,Tx) + D(y,Ty))``; ``None`` at 0/0, ``inf`` at c/0."""
    return _pair_ratio(space, T, x, y, "kannan")


def banach_ratio(space, T, x, y):
    """``D(Tx,Ty) / D(x,y)``; ``None`` when ``D(x,y)`` is within tau of 0."""
    return _pair_ratio(space, T, x, y, "banach")


# -- certificates ---------------------------------------------------------------------

@dataclass
class ContractionCertificate:
    kind: str
    alpha_hat: float
    alpha_bound: float
    beta: float | None
    samples: int
    seed: int
    budget: int
    witness_pair: tuple | None
    valid: bool
    sigma: float = SIGMA

    @property
    def rate(self):
        """Per-step contraction factor of the gap sequence under this certificate."""
        return self.beta if self.kind == "kannan" else self.alpha_bound

    def to_dict(self):
        return {
            "alpha_bound": self.alpha_bound,
            "alpha_hat": self.alpha_hat,
            "beta": self.beta,
            "budget": self.budget,
            "kind": self.kind,
            "note": "sampled evidence, not a proof",
            "samples": self.samples,
            "seed": self.seed,
            "sigma": self.sigma,
            "valid": self.valid,
            "witness_pair": None if self.witness_pair is None else list(self.witness_pair),
        }


def make_certificate(kind, alpha_hat, *, samples=0, seed=0, budget=0, witness_pair=None,
                     sigma=SIGMA):
    alpha_bound = alpha_hat * (1 + sigma)
    limit = KANNAN_LIMIT if kind == "kannan" else BANACH_LIMIT
    valid = bool(alpha_bound < limit)
    beta = alpha_bound / (1 - alpha_bound) if kind == "kannan" and valid else None
    return ContractionCertificate(
        kind, float(alpha_hat), float(alpha_bound), beta, samples, seed, budget,
        witness_pair, valid, sigma,
    )


def sample_pairs(domain, budget, seed):
    """Seeded pair sample for coefficient estimation.

    Boxes: three quarters Sobol pairs, one quarter reflections ``(x, lo + hi - x)``
    of the leading Sobol points.  Both parts grow monotonically with the budget.
    """
    if isinstance(domain, Box):
        n_refl = budget // 4
        (a, b), _ = sample_tuples(domain, 2, budget - n_refl, seed)
        if n_refl:
            ra = a[:n_refl]
            a = np.concatenate([a, ra])
            b = np.concatenate([b, domain.reflect(ra)])
        return a, b, False
    (a, b), exhaustive = sample_tuples(domain, 2, budget, seed)
    return a, b, exhaustive


def _lex_first(domain, a, b, idx):
    ca, cb = domain.coords(a[idx]), domain.coords(b[idx])
    keys = np.concatenate([ca, cb], axis=1)
    order = np.lexsort(keys.T[::-1])
    return idx[order[0]]


def supremum(space, T, kind, a, b):
    """(sup ratio, informative count, witness index) over the pairs ``a``, ``b``."""
    r = ratios(space, T, a, b, kind)
    informative = ~np.isnan(r)
    count = int(informative.sum())
    if count == 0:
        return math.nan, 0, None
    top = float(np.max(r[informative]))
    idx = np.flatnonzero(informative & (r == top))
    return top, count, _lex_first(space.domain, a, b, idx)


def estimate_coefficient(space: PerturbedSpace, T: SelfMap, kind: str, budget: int,
                         seed: int) -> ContractionCertificate:
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    a, b, _ = sample_pairs(space.domain, budget, seed)
    top, count, w = supremum(space, T, kind, a, b)
    if count == 0:
        raise NoInformativePairs(f"every sampled pair was 0/0 for the {kind} ratio")
    dom = space.domain
    witness = (dom.to_json(dom.element(a, w)), dom.to_json(dom.element(b, w)))
    return make_certificate(kind, top, samples=count, seed=seed, budget=budget,
                            witness_pair=witness)


def condition_holds(space, T, kind, alpha, a, b):
    """Pairwise check of the contraction inequality at coefficient ``alpha``."""
    ta, tb = T.apply(a), T.apply(b)
    lhs = space.D_values(ta, tb)
    if kind == "kannan":
        rhs = alpha * (space.D_values(a, ta) + space.D_values(b, tb))
    else:
        rhs = alpha * space.D_values(a, b)
    return lhs <= rhs + TAU_NUM
