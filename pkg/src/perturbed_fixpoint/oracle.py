"""Exhaustive grid oracles used as ground truth for the sampled estimators.

Nothing here samples: every function enumerates a full grid (boxes) or the
whole ground set (finite domains), so results are reproducible and serve as
the reference the estimators must approach.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import GridTooLarge
from .space import TAU_NUM, TAU_TRI, Box, FiniteDomain

MAX_CELLS = 10**7
MAX_PAIRS = 10**8
_CHUNK = 2**21


def grid_points(domain, grid_step=None):
    """All grid points ``lo + i * step`` inside a box, or every finite element."""
    if isinstance(domain, FiniteDomain):
        return np.arange(domain.size, dtype=np.int64)
    assert isinstance(domain, Box)
    if grid_step is None or not grid_step > 0:
        raise ValueError("grid_step must be positive for box domains")
    counts = [
        int(math.floor((h - l) / grid_step + 1e-9)) + 1 for l, h in zip(domain.lo, domain.hi)
    ]
    if math.prod(counts) > MAX_CELLS:
        raise GridTooLarge(f"{math.prod(counts)} grid cells exceed the limit of {MAX_CELLS}")
    axes = [l + grid_step * np.arange(k) for l, k in zip(domain.lo, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def brute_force_fixed_points(space, T, grid_step=None, slack=TAU_NUM):
    """Grid points minimising ``d(x, Tx)``, kept if within ``slack`` of the minimum."""
    dom = space.domain
    g = grid_points(dom, grid_step)
    tg = T.apply(g)
    res = space.distances(g, tg)
    keep = np.flatnonzero(res <= res.min() + slack)
    return [dom.element(g, i) for i in keep]


def _row_chunks(n_rows, n_cols):
    step = max(1, _CHUNK // max(n_cols, 1))
    for start in range(0, n_rows, step):
        yield start, min(n_rows, start + step)


def brute_force_sup_ratio(space, T, kind, grid_step=None):
    """Exhaustive supremum of the Banach or Kannan ratio over all ordered grid pairs.

    Pairs where the ratio is 0/0 (within tau) are skipped.  Returns ``nan`` if
    every pair is skipped.
    """
    if kind not in ("banach", "kannan"):
        raise ValueError(f"unknown kind {kind!r}")
    dom = space.domain
    g = grid_points(dom, grid_step)
    m = len(g)
    if m * m > MAX_PAIRS:
        raise GridTooLarge(f"{m * m} grid pairs exceed the limit of {MAX_PAIRS}")
    tg = T.apply(g)
    self_gap = space.D_values(g, tg)
    best = -math.inf
    for start, stop in _row_chunks(m, m):
        rows = np.repeat(np.arange(start, stop), m)
        cols = np.tile(np.arange(m), stop - start)
        num = space.D_values(tg[rows], tg[cols])
        if kind == "kannan":
            den = self_gap[rows] + self_gap[cols]
        else:
            den = space.D_values(g[rows], g[cols])
        zero_den = den <= TAU_NUM
        if kind == "kannan" and np.any(zero_den & (num > TAU_NUM)):
            return math.inf
        live = ~zero_den
        if live.any():
            best = max(best, float(np.max(num[live] / den[live])))
    return math.nan if best == -math.inf else best


def brute_force_triangle(space, grid_step=None):
    """Count of grid triples violating the triangle inequality, and the worst one.

    Returns ``(count, witness)`` where witness is ``(x, y, z)`` maximising
    ``d(x, z) - d(x, y) - d(y, z)`` or ``None``.
    """
    dom = space.domain
    g = grid_points(dom, grid_step)
    m = len(g)
    if m**3 > MAX_PAIRS:
        raise GridTooLarge(f"{m**3} grid triples exceed the limit of {MAX_PAIRS}")
    rows = np.repeat(np.arange(m), m)
    cols = np.tile(np.arange(m), m)
    dist = space.unchecked_distances(g[rows], g[cols]).reshape(m, m)
    dist = np.maximum(dist, 0.0)
    # excess[x, y, z] = d(x, z) - d(x, y) - d(y, z)
    count = 0
    worst, witness = -math.inf, None
    for x in range(m):
        excess = dist[x][None, :] - dist[x][:, None] - dist
        bad = excess > TAU_TRI
        count += int(bad.sum())
        if bad.any():
            y, z = np.unravel_index(int(np.argmax(excess)), excess.shape)
            if excess[y, z] > worst:
                worst = float(excess[y, z])
                witness = tuple(dom.to_json(dom.element(g, i)) for i in (x, y, z))
    return count, witness
