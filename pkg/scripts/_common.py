"""Shared helpers for the experiment scripts."""

import argparse
import logging
from pathlib import Path

from ncmac import io as ncio
from ncmac.cli import parse_snr


def base_parser(description, snr="0:2:20", blocks=20_000, max_iter=80, step0=0.5):
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--snr", default=snr, help="SNR grid in dB, start:step:stop or a comma list")
    p.add_argument("--blocks", type=int, default=blocks, help="coherence blocks per SNR point")
    p.add_argument("--max-iter", type=int, default=max_iter)
    p.add_argument("--step0", type=float, default=step0)
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out-dir", type=Path, default=Path("results"))
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def setup(args):
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    args.out_dir.mkdir(parents=True, exist_ok=True)
    return parse_snr(args.snr)


def save_design(args, name, trace, manifold, cost, N):
    extra = {"N": N, "restart": trace.seed, "iterations": len(trace) - 1, "termination": trace.reason}
    cf = ncio.ConstellationFile(trace.final, manifold, cost, args.seed, trace.final_cost, extra)
    ncio.save(cf, args.out_dir / f"{name}.json")
    (args.out_dir / f"{name}.trace.csv").write_text(ncio.trace_csv(trace))


def save_curve(args, name, curve):
    (args.out_dir / f"{name}.ser.csv").write_text(ncio.ser_csv(curve))


def print_table(curves):
    names = list(curves)
    snrs = next(iter(curves.values())).snr_db
    print("snr_db," + ",".join(names))
    for s, snr in enumerate(snrs):
        print(f"{snr:g}," + ",".join(f"{curves[n].avg_ser[s]:.4g}" for n in names))
