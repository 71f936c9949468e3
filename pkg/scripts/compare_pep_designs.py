"""Compare the PEP union-bound design, the min-max PEP design and a random Grassmann constellation.

Default scenario: K=2 users, T=3, M=1, N=3, 16 codewords per user, where
full diversity holds. Writes design files and SER CSVs to --out-dir.
"""

import numpy as np

from _common import base_parser, print_table, save_curve, save_design, setup
from ncmac import OptimizerConfig, SimConfig, make_cost, optimize, random_constellation, run_ser


def main():
    p = base_parser(__doc__.splitlines()[0], blocks=50_000, max_iter=300, step0=0.1)
    p.add_argument("--T", type=int, default=3)
    p.add_argument("--M", type=int, default=1)
    p.add_argument("--N", type=int, default=3)
    p.add_argument("--L", type=int, default=16)
    args = p.parse_args()
    snr = setup(args)

    cfg = OptimizerConfig(step0=args.step0, max_iter=args.max_iter, restarts=args.restarts, seed=args.seed)
    sim = SimConfig(snr_db=snr, blocks=args.blocks, seed=args.seed, N=args.N)
    sizes = [args.L, args.L]
    curves = {}
    for cost_name in ("pep_ub", "minmax_pep"):
        best, _ = optimize(make_cost(cost_name, args.N), "grassmann", args.T, args.M, sizes, cfg)
        print(f"{cost_name}: cost {best.costs[0]:.4g} -> {best.final_cost:.4g} ({best.reason})")
        save_design(args, cost_name, best, "grassmann", cost_name, args.N)
        curves[cost_name] = run_ser(best.final, sim)
        save_curve(args, cost_name, curves[cost_name])
    rand = random_constellation("grassmann", args.T, args.M, sizes, np.random.default_rng(args.seed))
    curves["random"] = run_ser(rand, sim)
    save_curve(args, "random", curves["random"])
    print_table(curves)


if __name__ == "__main__":
    main()
