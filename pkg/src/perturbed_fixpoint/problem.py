"""JSON problem files: loading into a space and map, and exporting back.

Schema::

    {
      "domain": {"box": {"lo": [...], "hi": [...]}}
                | {"finite": {"size": n, "embedding": [[...], ...]}},
      "D": "<expr in x, y>",
      "P": "<expr in x, y>",
      "mode": "quotient" | "subtractive",
      "c": <number, optional>,
      "T": "<expr in x>" | ["<expr>", ...],
      "eq_tol": <number, optional>
    }
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .contraction import SelfMap
from .errors import ProblemError
from .space import Bivariate, Box, FiniteDomain, PerturbedSpace, estimate_floor

KNOWN_FIELDS = {"domain", "D", "P", "mode", "c", "T", "eq_tol", "name", "description"}


@dataclass
class Problem:
    space: PerturbedSpace
    T: SelfMap
    name: str | None = None
    source: dict | None = None


def _number(doc, key, default=None):
    value = doc.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ProblemError(f"field {key!r} must be a finite number, got {value!r}")
    return float(value)


def _domain(entry):
    if not isinstance(entry, dict) or len(entry) != 1:
        raise ProblemError('domain must be {"box": {...}} or {"finite": {...}}')
    (kind, body), = entry.items()
    if kind == "box":
        try:
            lo = tuple(float(v) for v in body["lo"])
            hi = tuple(float(v) for v in body["hi"])
        except (KeyError, TypeError, ValueError) as err:
            raise ProblemError(f"box domain needs numeric 'lo' and 'hi' lists ({err})") from None
        return Box(lo, hi)
    if kind == "finite":
        size = body.get("size") if isinstance(body, dict) else None
        if isinstance(size, bool) or not isinstance(size, int) or size < 1:
            raise ProblemError("finite domain needs a positive integer 'size'")
        embedding = body.get("embedding")
        try:
            return FiniteDomain.of_size(size, embedding)
        except (TypeError, ValueError) as err:
            raise ProblemError(f"bad finite-domain embedding ({err})") from None
    raise ProblemError(f"unknown domain kind {kind!r}")


def parse_problem(doc: dict, *, seed: int = 42, budget: int = 10_000) -> Problem:
    """Build a :class:`Problem` from a decoded problem document.

    A missing ``c`` in quotient mode is estimated from ``budget`` sampled pairs
    and flagged, so no certificate that needs a trusted floor is issued.
    """
    if not isinstance(doc, dict):
        raise ProblemError("problem file must hold a JSON object")
    unknown = set(doc) - KNOWN_FIELDS
    if unknown:
        raise ProblemError(f"unknown field(s): {', '.join(sorted(unknown))}")
    for key in ("domain", "D", "P", "T"):
        if key not in doc:
            raise ProblemError(f"missing required field {key!r}")
    domain = _domain(doc["domain"])
    dim = domain.dimension
    for key in ("D", "P"):
        if not isinstance(doc[key], str):
            raise ProblemError(f"field {key!r} must be an expression string")
    D = Bivariate.parse(doc["D"], "D", dim)
    P = Bivariate.parse(doc["P"], "P", dim)
    t_src = doc["T"]
    if not (isinstance(t_src, str) or (isinstance(t_src, list) and all(isinstance(s, str) for s in t_src))):
        raise ProblemError("field 'T' must be a string or a list of strings")
    T = SelfMap.parse(t_src, domain)

    mode = doc.get("mode", "quotient")
    if mode not in ("quotient", "subtractive"):
        raise ProblemError(f"mode must be 'quotient' or 'subtractive', got {mode!r}")
    c = _number(doc, "c")
    estimated = False
    if mode == "quotient":
        if c is None:
            c = estimate_floor(domain, P, budget=budget, seed=seed)
            estimated = True
        elif c <= 0:
            raise ProblemError(f"floor c must be positive, got {c!r}")
    eq_tol = _number(doc, "eq_tol", 1e-9)
    if eq_tol < 0:
        raise ProblemError("eq_tol must be non-negative")
    space = PerturbedSpace(domain, D, P, mode, c, estimated, eq_tol)
    return Problem(space, T, doc.get("name"), doc)


def load_problem(path, *, seed: int = 42, budget: int = 10_000) -> Problem:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ProblemError(f"cannot read problem file {path}: {err.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ProblemError(f"{path} is not valid JSON: {err}") from None
    return parse_problem(doc, seed=seed, budget=budget)


def export_problem(space: PerturbedSpace, T: SelfMap, name=None) -> dict:
    """Problem document for a DSL-defined space and map."""
    opaque = space.D.fn is not None or space.P.fn is not None or T.fn is not None
    if opaque or space.D.source is None or space.P.source is None or T.source is None:
        raise ProblemError("only DSL-defined spaces and maps can be exported")
    doc = {
        "D": space.D.source,
        "P": space.P.source,
        "T": T.source if isinstance(T.source, str) else list(T.source),
        "domain": space.domain.describe(),
        "eq_tol": space.eq_tol,
        "mode": space.mode,
    }
    if space.mode == "quotient" and not space.c_estimated:
        doc["c"] = space.c
    if name:
        doc["name"] = name
    return doc
