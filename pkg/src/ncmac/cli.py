"""Command-line entry point: ``ncmac {design,simulate,gradcheck,info}``.

Exit codes: 0 success, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as ncio
from .costs import CostKind, make_cost
from .errors import CoincidentCodewordError, DegenerateRetractionError, InvalidDimensionsError, PreconditionError
from .fulldiv import minmax_pep_objective, pep_ub_cost
from .gradcheck import compare, fd_gradient
from .manifolds import ManifoldKind, constraint_residual, random_constellation
from .optimizer import OptimizerConfig, optimize
from .proxy import pairwise_values, proxy_ub_cost
from .sim import THREADS_ENV, SimConfig, run_ser

EXIT_USAGE = 2
EXIT_NUMERIC = 3

log = logging.getLogger("ncmac")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    mode: str
    T: int = 5
    M: int = 2
    N: int = 3
    K: int = 2
    L: tuple = (16, 16)
    manifold: ManifoldKind = ManifoldKind.GRASSMANN
    cost: CostKind = CostKind.DELTA_UB
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    sim: SimConfig | None = None
    inp: Path | None = None
    out: Path | None = None
    seed: int = 0
    epsilon: float = 1e-3
    emit_plot_data: bool = False

    @property
    def full_diversity(self) -> bool:
        return self.T >= (self.K + 1) * self.M


def parse_int_list(text: str, name: str):
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"--{name}: expected an integer or comma-separated integers, got {text!r}") from None


def parse_snr(text: str):
    """``start:step:stop`` (inclusive) or a comma-separated list, in dB."""
    try:
        if ":" in text:
            start, step, stop = (float(t) for t in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(np.floor((stop - start) / step + 1e-9)) + 1
            return tuple(float(start + i * step) for i in range(n))
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise UsageError(f"--snr: cannot parse {text!r} (use 0:2:20 or 12,16)") from None


def build_config(args) -> RunConfig:
    K = args.K
    if K < 1:
        raise UsageError("--K must be >= 1")
    if args.bits is not None:
        bits = parse_int_list(args.bits, "bits")
        if any(b < 0 for b in bits):
            raise UsageError("--bits must be non-negative")
        sizes = [2**b for b in bits]
    else:
        sizes = parse_int_list(args.L, "L")
    if len(sizes) == 1:
        sizes = sizes * K
    if len(sizes) != K:
        raise UsageError(f"--L/--bits: need 1 or K={K} values, got {len(sizes)}")
    if any(L < 1 for L in sizes):
        raise UsageError("--L: codebook sizes must be >= 1")
    if not args.T > args.M >= 1:
        raise UsageError(f"--T/--M: need T > M >= 1, got T={args.T}, M={args.M}")
    if args.N < 1:
        raise UsageError("--N must be >= 1")
    try:
        opt = OptimizerConfig(
            step0=args.step0,
            max_iter=args.max_iter,
            seed=args.seed,
            restarts=args.restarts,
            trace_xc=args.trace_xc,
        )
    except ValueError as exc:
        raise UsageError(f"optimizer: {exc}") from None
    try:
        sim = SimConfig(snr_db=parse_snr(args.snr), N=args.N, blocks=args.blocks, seed=args.seed)
    except ValueError as exc:
        raise UsageError(f"--blocks/--N: {exc}") from None
    return RunConfig(
        mode=args.command,
        T=args.T,
        M=args.M,
        N=args.N,
        K=K,
        L=tuple(sizes),
        manifold=ManifoldKind(args.manifold),
        cost=CostKind(args.cost),
        optimizer=opt,
        sim=sim,
        inp=Path(args.inp) if args.inp else None,
        out=Path(args.out) if args.out else None,
        seed=args.seed,
        epsilon=args.epsilon,
        emit_plot_data=args.emit_plot_data,
    )


def _pep_strict(cfg: RunConfig) -> bool:
    if cfg.cost in (CostKind.PEP_UB, CostKind.MINMAX_PEP) and not cfg.full_diversity:
        warnings.warn(
            f"{cfg.cost.value} assumes T >= (K+1)M; T={cfg.T}, K={cfg.K}, M={cfg.M} is not full diversity",
            stacklevel=2,
        )
        return False
    return True


def cmd_design(cfg: RunConfig, stdout) -> int:
    cost = make_cost(cfg.cost, cfg.N, cfg.epsilon, strict=_pep_strict(cfg))
    best, _ = optimize(cost, cfg.manifold, cfg.T, cfg.M, cfg.L, cfg.optimizer)
    residual = constraint_residual(cfg.manifold, best.final)
    cf = ncio.ConstellationFile(
        best.final,
        manifold=cfg.manifold.value,
        cost=cfg.cost.value,
        seed=cfg.seed,
        final_cost=float(best.final_cost),
        extra={"N": cfg.N, "restart": best.seed, "iterations": len(best) - 1, "termination": best.reason},
    )
    out = cfg.out or Path("constellation.json")
    ncio.save(cf, out)
    out.with_suffix(".trace.csv").write_text(ncio.trace_csv(best))
    print(f"final_cost {best.final_cost!r}", file=stdout)
    print(f"constraint_residual {residual:.3e}", file=stdout)
    print(f"iterations {len(best) - 1} ({best.reason})", file=stdout)
    print(f"wrote {out}", file=stdout)
    return 0


def cmd_simulate(cfg: RunConfig, stdout) -> int:
    if cfg.inp is None:
        raise UsageError("simulate needs --in")
    cf = ncio.load(cfg.inp)
    curve = run_ser(cf.constellation, cfg.sim)
    text = ncio.ser_csv(curve)
    if cfg.out:
        cfg.out.write_text(text)
        if cfg.emit_plot_data:
            for name, body in ncio.plot_curves(curve).items():
                cfg.out.with_name(f"{cfg.out.stem}_{name}.csv").write_text(body)
    else:
        stdout.write(text)
    return 0


def cmd_gradcheck(cfg: RunConfig, stdout) -> int:
    if cfg.inp is not None:
        c = ncio.load(cfg.inp).constellation
    else:
        c = random_constellation(cfg.manifold, cfg.T, cfg.M, cfg.L, np.random.default_rng(cfg.seed))
    cost = make_cost(cfg.cost, cfg.N, cfg.epsilon, strict=_pep_strict(cfg))
    _, analytic = cost.value_and_gradient(c)
    numeric = fd_gradient(cost.value, c)
    report = compare(analytic, numeric, cfg.manifold, c, h=1e-6, xc_projector=cfg.optimizer.trace_xc)
    print("metric,value", file=stdout)
    for name, value in report.rows():
        print(f"{name},{value}", file=stdout)
    print("user,codeword,max_abs_err,max_rel_err", file=stdout)
    for k, i, e, r in report.per_codeword:
        print(f"{k + 1},{i},{e:.6e},{r:.6e}", file=stdout)
    return 0


def info_report(cf: ncio.ConstellationFile, N: int) -> str:
    c = cf.constellation
    lines = [
        f"T={c.T} M={c.M} K={c.K} L={list(c.sizes)} N={N}",
        f"manifold={cf.manifold or '?'} cost={cf.cost or '?'} seed={cf.seed} final_cost={cf.final_cost}",
    ]
    for kind in ManifoldKind:
        lines.append(f"residual[{kind.value}] {constraint_residual(kind, c):.3e}")
    if c.T >= (c.K + 1) * c.M and any(L >= 2 for L in c.sizes):
        try:
            lines.append(f"pep_ub {pep_ub_cost(c, N):.12g}")
            value, pair = minmax_pep_objective(c, N)
            lines.append(f"minmax_pep {value:.12g} at user {pair.user + 1} {pair.i}->{pair.j}")
        except CoincidentCodewordError as exc:
            lines.append(f"pep_ub unavailable: {exc}")
    else:
        lines.append("pep_ub n/a (T < (K+1)M)")
    if c.num_joint >= 2:
        beta, _ = pairwise_values(c, "beta")
        delta, _ = pairwise_values(c, "delta")
        jh, _ = pairwise_values(c, "j_half")
        lines.append(f"beta_ub {proxy_ub_cost(c, N, 'beta'):.12g}")
        lines.append(f"delta_ub {proxy_ub_cost(c, N, 'delta'):.12g}")
        lines.append(f"beta_min {beta.min():.12g}")
        lines.append(f"delta_min {delta.min():.12g}")
        lines.append(f"j_half_min {jh.min():.12g}")
        ok = np.sqrt(c.T) * delta.min() >= beta.min() - 1e-12 and beta.min() >= delta.min() - 1e-12
        lines.append(f"check sqrt(T)*delta_min >= beta_min >= delta_min: {'ok' if ok else 'VIOLATED'}")
    return "\n".join(lines) + "\n"


def cmd_info(cfg: RunConfig, stdout, N_given: bool) -> int:
    if cfg.inp is None:
        raise UsageError("info needs --in")
    cf = ncio.load(cfg.inp)
    N = cfg.N if N_given else int(cf.extra.get("N", cfg.N))
    stdout.write(info_report(cf, N))
    return 0


EPILOG = f"""\
simulate writes CSV columns: {ncio.SER_COLUMNS_DOC}.
Set {THREADS_ENV} to the number of worker threads for simulation (results do not depend on it).
Exit codes: 0 success, 2 usage error, 3 numerical failure.
"""


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--T", type=int, default=5, help="coherence time (symbol periods)")
    common.add_argument("--M", type=int, default=2, help="transmit antennas per user")
    common.add_argument("--N", type=int, default=None, help="receive antennas (default 3)")
    common.add_argument("--K", type=int, default=2, help="number of users")
    common.add_argument("--L", default="16", help="codewords per user: one value or a comma list")
    common.add_argument("--bits", default=None, help="bits per codeword (L = 2^bits); overrides --L")
    common.add_argument("--manifold", choices=[k.value for k in ManifoldKind], default="grassmann")
    common.add_argument("--cost", choices=[k.value for k in CostKind], default="delta_ub")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--snr", default="0:2:20", help="SNR grid in dB: start:step:stop or a comma list")
    common.add_argument("--blocks", type=int, default=10_000, help="coherence blocks per SNR point")
    common.add_argument("--in", dest="inp", default=None, help="input constellation file")
    common.add_argument("--out", default=None, help="output path")
    common.add_argument("--step0", type=float, default=0.1, help="initial line-search step")
    common.add_argument("--max-iter", type=int, default=2000)
    common.add_argument("--restarts", type=int, default=1)
    common.add_argument("--epsilon", type=float, default=1e-3, help="beta smoothing exponent")
    common.add_argument("--trace-xc", action="store_true", help="alternative trace-manifold projector")
    common.add_argument("--emit-plot-data", action="store_true", help="also write one CSV per SER curve")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(
        prog="ncmac",
        description="Noncoherent MIMO MAC constellation design and SER simulation.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("design", "optimize a joint constellation and save it"),
        ("simulate", "Monte Carlo SER of a saved constellation (CSV)"),
        ("gradcheck", "compare analytic and finite-difference gradients"),
        ("info", "report design metrics of a saved constellation"),
    ]:
        sub.add_parser(
            name, parents=[common], help=help_, epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter
        )
    return p


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    N_given = args.N is not None
    if not N_given:
        args.N = 3
    try:
        cfg = build_config(args)
        if cfg.mode == "design":
            return cmd_design(cfg, stdout)
        if cfg.mode == "simulate":
            return cmd_simulate(cfg, stdout)
        if cfg.mode == "gradcheck":
            return cmd_gradcheck(cfg, stdout)
        return cmd_info(cfg, stdout, N_given)
    except (UsageError, InvalidDimensionsError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ncio.LoadError as exc:
        print(f"load error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CoincidentCodewordError, DegenerateRetractionError, PreconditionError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
