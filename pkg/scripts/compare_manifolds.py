"""Design delta_ub constellations on the three power-constraint manifolds and compare their SER.

Default scenario: K=2 users, T=5, M=2, N=3, 16 codewords per user.
Writes design files, descent traces and SER CSVs to --out-dir.
"""

import time

from _common import base_parser, print_table, save_curve, save_design, setup
from ncmac import ManifoldKind, OptimizerConfig, SimConfig, make_cost, optimize, run_ser


def main():
    p = base_parser(__doc__.splitlines()[0])
    p.add_argument("--T", type=int, default=5)
    p.add_argument("--M", type=int, default=2)
    p.add_argument("--N", type=int, default=3)
    p.add_argument("--L", type=int, default=16)
    p.add_argument("--cost", default="delta_ub", choices=["delta_ub", "beta_ub", "pep_ub"])
    args = p.parse_args()
    snr = setup(args)

    cost = make_cost(args.cost, args.N)
    cfg = OptimizerConfig(step0=args.step0, max_iter=args.max_iter, restarts=args.restarts, seed=args.seed)
    sim = SimConfig(snr_db=snr, blocks=args.blocks, seed=args.seed, N=args.N)
    curves = {}
    for kind in ManifoldKind:
        t0 = time.perf_counter()
        best, _ = optimize(cost, kind, args.T, args.M, [args.L, args.L], cfg)
        print(f"{kind.value}: cost {best.costs[0]:.4f} -> {best.final_cost:.4f} in {time.perf_counter() - t0:.0f}s")
        name = f"{args.cost}_{kind.value}"
        save_design(args, name, best, kind.value, args.cost, args.N)
        curves[kind.value] = run_ser(best.final, sim)
        save_curve(args, name, curves[kind.value])
        if kind is ManifoldKind.TRACE:
            curves["random_start"] = run_ser(best.initial, sim)
            save_curve(args, "random_start", curves["random_start"])
    print_table(curves)


if __name__ == "__main__":
    main()
