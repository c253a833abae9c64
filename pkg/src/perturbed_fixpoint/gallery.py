"""Built-in problem instances.

Every reference value stored in ``expected`` was produced by the grid oracles
in :mod:`perturbed_fixpoint.oracle` (see ``scripts/derive_gallery_references.py``)
and is recomputed by the test suite; none is asserted by hand.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .problem import Problem, export_problem, parse_problem

REFERENCE_GRID_STEP = 1e-3


@dataclass
class GalleryInstance:
    name: str
    description: str
    doc: dict
    expected: dict = field(default_factory=dict)

    def load(self) -> Problem:
        return parse_problem(self.doc)

    @property
    def space(self):
        return self.load().space

    @property
    def T(self):
        return self.load().T

    def to_problem_json(self) -> dict:
        prob = self.load()
        return export_problem(prob.space, prob.T, name=self.name)


def _doc(lo, hi, D, P, T, c=None, mode="quotient"):
    doc = {"domain": {"box": {"lo": list(lo), "hi": list(hi)}}, "D": D, "P": P, "T": T, "mode": mode}
    if c is not None:
        doc["c"] = c
    return doc


def _derived(value, how):
    return {"value": value, "provenance": f"derived: {how}"}


_SUP = f"brute_force_sup_ratio, grid_step={REFERENCE_GRID_STEP:g}"
_FIX = "brute_force_fixed_points, grid_step=1e-4"

_INSTANCES = [
    GalleryInstance(
        "quarter_map",
        "T(x) = x/4 on [-1, 1] with D = 2|x - y|, P = 2: a Kannan map with coefficient 1/3.",
        _doc([-1.0], [1.0], "2 * abs(x - y)", "2", "x / 4", c=2.0),
        {
            "kind": "kannan",
            "kannan_alpha": _derived(0.3333333333333334, _SUP),
            "banach_alpha": _derived(0.25, _SUP),
            "fixed_point": _derived([0.0], _FIX),
        },
    ),
    GalleryInstance(
        "half_map",
        "T(x) = x/2 on the quarter_map space: a Banach contraction that is not Kannan.",
        _doc([-1.0], [1.0], "2 * abs(x - y)", "2", "x / 2", c=2.0),
        {
            "kind": "banach",
            "kannan_alpha": _derived(1.0, _SUP),
            "banach_alpha": _derived(0.5, _SUP),
            "fixed_point": _derived([0.0], _FIX),
        },
    ),
    GalleryInstance(
        "classical_kannan",
        "Classical Kannan setting (P = c = 1, D = |x - y|) with T(x) = (x + 1)/5 on [-1, 1].",
        _doc([-1.0], [1.0], "abs(x - y)", "1", "(x + 1) / 5", c=1.0),
        {
            "kind": "kannan",
            "kannan_alpha": _derived(0.2500000000000173, _SUP),
            "banach_alpha": _derived(0.2000000000000111, _SUP),
            "fixed_point": _derived([0.25], _FIX),
        },
    ),
    GalleryInstance(
        "discont_kannan",
        "T(x) = x/4 for x < 1/2 and x/5 otherwise on [0, 1]: Kannan despite the jump at 1/2.",
        _doc([0.0], [1.0], "abs(x - y) * 2", "2", "if_lt(x, 0.5, x / 4, x / 5)", c=2.0),
        {
            "kind": "kannan",
            "kannan_alpha": _derived(0.33333333333333337, _SUP),
            "banach_alpha": _derived(24.74999999999997, _SUP),
            "fixed_point": _derived([0.0], _FIX),
        },
    ),
    GalleryInstance(
        "quarter_map_2d",
        "Coordinatewise x/4 on [-1, 1]^2 with D = 2||x - y||_2, P = 2.",
        _doc([-1.0, -1.0], [1.0, 1.0], "2 * norm2(x - y)", "2", ["x[0] / 4", "x[1] / 4"], c=2.0),
        {
            "kind": "kannan",
            "kannan_alpha": _derived(0.3333333333333334, "brute_force_sup_ratio, grid_step=0.1"),
            "banach_alpha": _derived(0.25, "brute_force_sup_ratio, grid_step=0.1"),
            "fixed_point": _derived([0.0, 0.0], "brute_force_fixed_points, grid_step=0.01"),
        },
    ),
    GalleryInstance(
        "subtractive_demo",
        "Subtractive space D = |x - y| + 1, P = 1 on [-2, 2]; exact metric |x - y|.",
        _doc([-2.0], [2.0], "abs(x - y) + 1", "1", "x / 2", mode="subtractive"),
        {"kind": None},
    ),
    GalleryInstance(
        "triangle_violator",
        "D = |x - y|^2, P = 1 on [0, 2]: D/P is not a metric (triangle inequality fails).",
        _doc([0.0], [2.0], "pow(x - y, 2)", "1", "x / 2", c=1.0),
        {
            "kind": None,
            "triangle_violations": _derived(
                {"count": 168, "witness": [[0.0], [1.0], [2.0]]},
                "brute_force_triangle, grid_step=0.25",
            ),
        },
    ),
]

KANNAN_INSTANCES = tuple(i.name for i in _INSTANCES if i.expected.get("kind") == "kannan")


def gallery() -> list[GalleryInstance]:
    return list(_INSTANCES)


def get(name: str) -> GalleryInstance:
    for inst in _INSTANCES:
        if inst.name == name:
            return inst
    raise KeyError(f"no gallery instance named {name!r}")
