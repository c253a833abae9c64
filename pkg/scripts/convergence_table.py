"""Print observed gaps against the a-priori and a-posteriori bounds.

    python scripts/convergence_table.py quarter_map --x0 1 --tol 1e-12
"""

import argparse

from perturbed_fixpoint import gallery
from perturbed_fixpoint.contraction import estimate_coefficient
from perturbed_fixpoint.space import exact_distance
from perturbed_fixpoint.solver import solve


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("name", choices=[i.name for i in gallery.gallery()])
    ap.add_argument("--kind", choices=["kannan", "banach"], default="kannan")
    ap.add_argument("--x0", type=float, nargs="+", default=None)
    ap.add_argument("--tol", type=float, default=1e-12)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--budget", type=int, default=10_000)
    args = ap.parse_args()

    prob = gallery.get(args.name).load()
    cert = estimate_coefficient(prob.space, prob.T, args.kind, args.budget, args.seed)
    if not cert.valid:
        raise SystemExit(f"{args.kind} certificate invalid: alpha_hat={cert.alpha_hat!r}")
    x0 = args.x0 if args.x0 is not None else prob.space.domain.center()
    trace = solve(prob.space, prob.T, cert, x0, tol=args.tol)
    print(f"{args.name}: {args.kind} alpha_hat={cert.alpha_hat:.6g} rate={cert.rate:.6g}"
          f" stop={trace.stop_reason}")
    print(f"{'n':>4} {'D_n':>12} {'d(x_n,x*)':>12} {'a-priori':>12} {'a-post.':>12}")
    for s in trace.steps:
        err = exact_distance(prob.space, s.x, trace.fixed_point)
        print(f"{s.n:>4} {s.D:>12.4e} {err:>12.4e} {s.apriori:>12.4e} {s.aposteriori:>12.4e}")


if __name__ == "__main__":
    main()
