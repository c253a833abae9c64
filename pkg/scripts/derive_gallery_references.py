"""Recompute every gallery reference value with the grid oracles.

Run this after changing an instance and copy the printed values into
``gallery.py``.  The test suite performs the same computation and fails on drift.

    python scripts/derive_gallery_references.py
"""

import argparse
import json
import time

from perturbed_fixpoint import gallery, oracle


def derive(inst, sup_step, fix_step):
    prob = inst.load()
    space, T = prob.space, prob.T
    out = {}
    if space.dimension > 1:
        sup_step, fix_step = 0.1, 0.01
    if inst.expected.get("kind") is not None:
        for kind in ("kannan", "banach"):
            out[f"{kind}_alpha"] = oracle.brute_force_sup_ratio(space, T, kind, sup_step)
        fps = oracle.brute_force_fixed_points(space, T, fix_step)
        out["fixed_point"] = [space.domain.to_json(p) for p in fps]
    if inst.name == "triangle_violator":
        count, witness = oracle.brute_force_triangle(space, 0.25)
        out["triangle_violations"] = {"count": count, "witness": witness}
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sup-step", type=float, default=gallery.REFERENCE_GRID_STEP)
    ap.add_argument("--fix-step", type=float, default=1e-4)
    ap.add_argument("names", nargs="*")
    args = ap.parse_args()
    for inst in gallery.gallery():
        if args.names and inst.name not in args.names:
            continue
        t0 = time.perf_counter()
        values = derive(inst, args.sup_step, args.fix_step)
        print(f"{inst.name} ({time.perf_counter() - t0:.1f}s)")
        print("  " + json.dumps(values, sort_keys=True))


if __name__ == "__main__":
    main()
