"""Rayleigh block-fading K-user MAC with the noncoherent ML joint detector.

Per block, user k sends ``X_{k,i_k}`` through ``H_k`` (M x N, CN(0,1)) and

    Y = sum_k sqrt(beta_k) X_{k,i_k} H_k + sqrt(M / (T rho)) W.

Given hypothesis ``i`` the columns of Y are CN(0, R_i) with
``R_i = sum_k beta_k X X^H + (M / (T rho)) I``, and the detector picks the
joint codeword minimizing ``tr(Y^H R_i^-1 Y) + N logdet(R_i)``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .manifolds import Constellation, crandn

__all__ = [
    "SimConfig",
    "DetectorTables",
    "SerCurve",
    "build_tables",
    "ml_metrics",
    "simulate_block",
    "simulate_blocks",
    "run_ser",
]

CHUNK = 1000
THREADS_ENV = "NCMAC_THREADS"


@dataclass(frozen=True)
class SimConfig:
    snr_db: tuple = tuple(range(0, 21, 2))
    N: int = 3
    blocks: int = 10_000
    seed: int = 0
    user_snr: tuple | None = None  # beta_k, first entry must be 1
    early_stop_errors: int | None = None

    def __post_init__(self):
        if self.blocks < 1:
            raise ValueError("blocks must be >= 1")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.user_snr is not None:
            if any(b <= 0 for b in self.user_snr):
                raise ValueError("per-user SNR factors must be positive")
        object.__setattr__(self, "snr_db", tuple(float(s) for s in np.atleast_1d(self.snr_db)))

    def betas(self, K: int) -> np.ndarray:
        if self.user_snr is None:
            return np.ones(K)
        if len(self.user_snr) != K:
            raise ValueError(f"need {K} per-user SNR factors, got {len(self.user_snr)}")
        return np.asarray(self.user_snr, dtype=float)


@dataclass(frozen=True)
class DetectorTables:
    """Per SNR point and joint codeword: Cholesky factor, inverse and N logdet of R_i."""

    chol: np.ndarray  # (S, J, T, T)
    inv: np.ndarray  # (S, J, T, T)
    n_logdet: np.ndarray  # (S, J)
    noise_std: np.ndarray  # (S,)
    betas: np.ndarray
    indices: np.ndarray  # (J, K) multi-indices
    N: int


@dataclass
class SerCurve:
    snr_db: np.ndarray
    blocks: np.ndarray  # (S,)
    errors: np.ndarray  # (S, K)
    ser: np.ndarray = field(init=False)
    avg_ser: np.ndarray = field(init=False)

    def __post_init__(self):
        self.ser = self.errors / self.blocks[:, None]
        self.avg_ser = self.ser.mean(axis=1)

    @property
    def K(self):
        return self.errors.shape[1]

    def at(self, snr_db: float) -> int:
        return int(np.argmin(np.abs(self.snr_db - snr_db)))


def build_tables(c: Constellation, snr_db, N: int, betas=None) -> DetectorTables:
    snr_db = np.atleast_1d(np.asarray(snr_db, dtype=float))
    betas = np.ones(c.K) if betas is None else np.asarray(betas, dtype=float)
    idx = c.multi_indices()
    T, M = c.T, c.M
    signal = np.zeros((idx.shape[0], T, T), dtype=complex)
    for k, book in enumerate(c.codebooks):
        X = book[idx[:, k]]
        signal += betas[k] * (X @ np.conj(np.swapaxes(X, -1, -2)))
    rho = 10.0 ** (snr_db / 10.0)
    sigma2 = M / (T * rho)
    R = signal[None] + sigma2[:, None, None, None] * np.eye(T)
    R = 0.5 * (R + np.conj(np.swapaxes(R, -1, -2)))
    chol = np.linalg.cholesky(R)
    L_inv = np.linalg.inv(chol)
    inv = np.conj(np.swapaxes(L_inv, -1, -2)) @ L_inv
    logdet = 2.0 * np.sum(np.log(np.real(np.diagonal(chol, axis1=-2, axis2=-1))), axis=-1)
    return DetectorTables(chol, inv, N * logdet, np.sqrt(sigma2), betas, idx, N)


def ml_metrics(tables: DetectorTables, snr_index: int, Y) -> np.ndarray:
    """ML metric of every hypothesis for a batch of observations.

    ``Y`` is (B, T, N); returns (B, J). Uses ``tr(Y^H R^-1 Y) = <R^-1, Y Y^H>``.
    """
    Y = np.asarray(Y)
    if Y.ndim == 2:
        Y = Y[None]
    S = Y @ np.conj(np.swapaxes(Y, -1, -2))  # (B, T, T), Hermitian
    B = S.shape[0]
    Rinv = tables.inv[snr_index]
    quad = np.real(np.conj(S.reshape(B, -1)) @ Rinv.reshape(Rinv.shape[0], -1).T)
    return quad + tables.n_logdet[snr_index][None, :]


def _draw(c: Constellation, tables: DetectorTables, snr_index: int, rng, n: int):
    K, T, M, N = c.K, c.T, c.M, tables.N
    tx = np.stack([rng.integers(0, L, size=n) for L in c.sizes], axis=1)
    Y = np.zeros((n, T, N), dtype=complex)
    for k, book in enumerate(c.codebooks):
        H = crandn(rng, (n, M, N))
        Y += np.sqrt(tables.betas[k]) * (book[tx[:, k]] @ H)
    Y += tables.noise_std[snr_index] * crandn(rng, (n, T, N))
    return tx, Y


def simulate_blocks(c: Constellation, tables: DetectorTables, snr_index: int, rng, n: int):
    """Transmit ``n`` independent blocks; returns (transmitted, detected) multi-indices."""
    tx, Y = _draw(c, tables, snr_index, rng, n)
    det = np.argmin(ml_metrics(tables, snr_index, Y), axis=1)  # first minimum on ties
    return tx, tables.indices[det]


def simulate_block(c: Constellation, tables: DetectorTables, snr_index: int, rng):
    tx, det = simulate_blocks(c, tables, snr_index, rng, 1)
    return tuple(map(int, tx[0])), tuple(map(int, det[0]))


def _chunk_rng(seed: int, snr_index: int, chunk: int):
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(snr_index), int(chunk)]))


def _threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def run_ser(c: Constellation, cfg: SimConfig) -> SerCurve:
    """Monte Carlo SER per user at every SNR point.

    Blocks are simulated in fixed chunks whose random streams depend only on
    (seed, SNR index, chunk index), so results are identical for any thread
    count. Early stopping, if enabled, is checked at chunk boundaries.
    """
    tables = build_tables(c, cfg.snr_db, cfg.N, cfg.betas(c.K))
    n_snr = len(cfg.snr_db)
    blocks = np.zeros(n_snr, dtype=np.int64)
    errors = np.zeros((n_snr, c.K), dtype=np.int64)
    n_chunks = -(-cfg.blocks // CHUNK)
    sizes = [min(CHUNK, cfg.blocks - q * CHUNK) for q in range(n_chunks)]

    def work(s, q):
        tx, det = simulate_blocks(c, tables, s, _chunk_rng(cfg.seed, s, q), sizes[q])
        return np.count_nonzero(tx != det, axis=0)

    workers = _threads()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for s in range(n_snr):
            if c.num_joint == 1:
                blocks[s] = cfg.blocks
                continue
            step = workers if cfg.early_stop_errors else n_chunks
            for start in range(0, n_chunks, step):
                qs = range(start, min(start + step, n_chunks))
                for q, err in zip(qs, pool.map(lambda q: work(s, q), qs)):
                    errors[s] += err
                    blocks[s] += sizes[q]
                if cfg.early_stop_errors and np.all(errors[s] >= cfg.early_stop_errors):
                    break
    return SerCurve(np.asarray(cfg.snr_db, dtype=float), blocks, errors)
