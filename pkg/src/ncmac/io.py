"""Constellation files, descent traces and SER tables on disk.

Constellation files are JSON. Doubles are written with Python's shortest
round-trip ``repr``, so ``load(save(c))`` reproduces every entry exactly.
Codeword entries are listed row-major as ``[real, imag]`` pairs.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .manifolds import Constellation

FORMAT = "ncmac-constellation"
VERSION = 1

SER_COLUMNS_DOC = (
    "snr_db, blocks, errors_u1..errors_uK, ser_u1..ser_uK, avg_ser "
    "(one row per SNR point, in the order given by --snr)"
)


class LoadError(ValueError):
    pass


@dataclass
class ConstellationFile:
    constellation: Constellation
    manifold: str = ""
    cost: str = ""
    seed: int | None = None
    final_cost: float | None = None
    extra: dict = field(default_factory=dict)

    def header(self) -> dict:
        c = self.constellation
        h = {
            "format": FORMAT,
            "version": VERSION,
            "T": c.T,
            "M": c.M,
            "K": c.K,
            "L": list(c.sizes),
            "manifold": self.manifold,
            "cost": self.cost,
            "seed": self.seed,
            "final_cost": self.final_cost,
        }
        h.update(self.extra)
        return h


def dumps(cf: ConstellationFile) -> str:
    body = []
    for book in cf.constellation.codebooks:
        body.append([[[float(z.real), float(z.imag)] for z in X.ravel()] for X in book])
    doc = {"header": cf.header(), "codebooks": body}
    return json.dumps(doc, indent=1) + "\n"


def save(cf: ConstellationFile, path) -> None:
    Path(path).write_text(dumps(cf))


def loads(text: str) -> ConstellationFile:
    try:
        doc = json.loads(text)
        h = doc["header"]
        if h.get("format") != FORMAT:
            raise LoadError(f"not a constellation file (format={h.get('format')!r})")
        if h.get("version") != VERSION:
            raise LoadError(f"unsupported version {h.get('version')!r}")
        T, M, K, sizes = int(h["T"]), int(h["M"]), int(h["K"]), [int(L) for L in h["L"]]
        body = doc["codebooks"]
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise LoadError(f"malformed constellation file: {exc}") from None
    if len(body) != K or len(sizes) != K:
        raise LoadError(f"header says K={K} but body has {len(body)} codebooks")
    books = []
    for k, (L, raw) in enumerate(zip(sizes, body)):
        arr = np.asarray(raw, dtype=float)
        if arr.shape != (L, T * M, 2):
            raise LoadError(f"user {k + 1}: expected {(L, T * M, 2)} entries, got {arr.shape}")
        books.append((arr[..., 0] + 1j * arr[..., 1]).reshape(L, T, M))
    known = {"format", "version", "T", "M", "K", "L", "manifold", "cost", "seed", "final_cost"}
    extra = {k: v for k, v in h.items() if k not in known}
    return ConstellationFile(
        Constellation(tuple(books)),
        manifold=h.get("manifold") or "",
        cost=h.get("cost") or "",
        seed=h.get("seed"),
        final_cost=h.get("final_cost"),
        extra=extra,
    )


def load(path) -> ConstellationFile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise LoadError(str(exc)) from None
    return loads(text)


def trace_csv(trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "cost", "h", "gradnorm"])
    for it, f, h, g in trace.rows():
        w.writerow([it, repr(float(f)), repr(float(h)), repr(float(g))])
    return buf.getvalue()


def ser_csv(curve) -> str:
    K = curve.K
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(
        ["snr_db", "blocks"]
        + [f"errors_u{k + 1}" for k in range(K)]
        + [f"ser_u{k + 1}" for k in range(K)]
        + ["avg_ser"]
    )
    for s in range(len(curve.snr_db)):
        w.writerow(
            [repr(float(curve.snr_db[s])), int(curve.blocks[s])]
            + [int(e) for e in curve.errors[s]]
            + [repr(float(x)) for x in curve.ser[s]]
            + [repr(float(curve.avg_ser[s]))]
        )
    return buf.getvalue()


def plot_curves(curve) -> dict:
    """One two-column CSV (snr_db, ser) per curve, keyed by curve name."""
    out = {}
    names = [(f"user{k + 1}", curve.ser[:, k]) for k in range(curve.K)] + [("avg", curve.avg_ser)]
    for name, ys in names:
        lines = ["snr_db,ser"] + [f"{float(x)!r},{float(y)!r}" for x, y in zip(curve.snr_db, ys)]
        out[name] = "\n".join(lines) + "\n"
    return out
