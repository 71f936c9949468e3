"""Design trace-manifold constellations with the delta and beta proxies and compare their SER."""

from _common import base_parser, print_table, save_curve, save_design, setup
from ncmac import OptimizerConfig, SimConfig, make_cost, optimize, run_ser


def main():
    p = base_parser(__doc__)
    p.add_argument("--T", type=int, default=5)
    p.add_argument("--M", type=int, default=2)
    p.add_argument("--N", type=int, default=3)
    p.add_argument("--L", type=int, default=16)
    p.add_argument("--epsilon", type=float, default=1e-3, help="beta smoothing exponent")
    args = p.parse_args()
    snr = setup(args)

    cfg = OptimizerConfig(step0=args.step0, max_iter=args.max_iter, restarts=args.restarts, seed=args.seed)
    sim = SimConfig(snr_db=snr, blocks=args.blocks, seed=args.seed, N=args.N)
    curves = {}
    for cost_name in ("delta_ub", "beta_ub"):
        cost = make_cost(cost_name, args.N, epsilon=args.epsilon)
        best, _ = optimize(cost, "trace", args.T, args.M, [args.L, args.L], cfg)
        print(f"{cost_name}: cost {best.costs[0]:.4f} -> {best.final_cost:.4f}")
        save_design(args, f"{cost_name}_trace", best, "trace", cost_name, args.N)
        curves[cost_name] = run_ser(best.final, sim)
        save_curve(args, f"{cost_name}_trace", curves[cost_name])
    print_table(curves)


if __name__ == "__main__":
    main()
