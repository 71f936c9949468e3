"""Full-diversity design criterion: union bound of the dominant asymptotic PEP factor.

Only hypothesis pairs with exactly one user in error enter the bound. For such
a pair, with ``F_e`` the erroneous user's block of ``F_i``,

    term = det(F_e^H P_perp(F_j) F_e)^(-N)

where ``P_perp(F) = I - F (F^H F)^-1 F^H``. The noise-power prefactor is
common to every one-error term and is dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CoincidentCodewordError, PreconditionError
from .manifolds import Constellation

__all__ = [
    "ErrorPair",
    "PepEvaluation",
    "enumerate_error_pairs",
    "error_pair_indices",
    "pep_term",
    "pep_terms",
    "pep_ub_cost",
    "pep_ub_gradient",
    "pep_ub_evaluate",
    "minmax_pep_objective",
    "minmax_pep_gradient",
    "single_user_ub",
]

DET_FLOOR = 1e-300


@dataclass(frozen=True)
class ErrorPair:
    """Transmitted multi-index ``i`` detected as ``j``; only ``user`` differs."""

    user: int
    i: tuple
    j: tuple

    def error_block(self, c: Constellation) -> np.ndarray:
        return c.codebooks[self.user][self.i[self.user]]

    def columns(self, c: Constellation) -> slice:
        """Column range of the erroneous user's block inside F_i and F_j."""
        return slice(self.user * c.M, (self.user + 1) * c.M)


@dataclass(frozen=True)
class PepEvaluation:
    value: float
    terms: np.ndarray
    gradient: tuple | None = None


def error_pair_indices(c: Constellation):
    """Vectorized enumeration of one-error ordered pairs.

    Returns ``(users, I, J)`` with ``I``/``J`` of shape ``(P, K)``. Order is
    user-major, then the transmitted multi-index lexicographically, then the
    detected index of the erroneous user.
    """
    base = c.multi_indices()
    users, Is, Js = [], [], []
    for k, Lk in enumerate(c.sizes):
        if Lk < 2:
            continue
        alt = np.arange(Lk)
        # (J, Lk) grid of detected indices, minus the diagonal
        jk = np.broadcast_to(alt, (base.shape[0], Lk))
        keep = jk != base[:, k : k + 1]
        I = np.repeat(base, Lk - 1, axis=0)
        J = I.copy()
        J[:, k] = jk[keep]
        users.append(np.full(I.shape[0], k))
        Is.append(I)
        Js.append(J)
    if not Is:
        K = c.K
        return np.zeros(0, int), np.zeros((0, K), int), np.zeros((0, K), int)
    return np.concatenate(users), np.concatenate(Is), np.concatenate(Js)


def enumerate_error_pairs(c: Constellation) -> list:
    users, I, J = error_pair_indices(c)
    return [ErrorPair(int(k), tuple(map(int, i)), tuple(map(int, j))) for k, i, j in zip(users, I, J)]


def _check_diversity(c: Constellation):
    if c.T < (c.K + 1) * c.M:
        raise PreconditionError(
            f"PEP union bound needs T >= (K+1)M for full diversity; got T={c.T}, K={c.K}, M={c.M}"
        )


def _hermitian(A):
    return 0.5 * (A + np.conj(np.swapaxes(A, -1, -2)))


def _H(A):
    return np.conj(np.swapaxes(A, -1, -2))


def _batch_cholesky(A, what, pair_ids):
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        bad = []
        for p in range(A.shape[0]):
            try:
                np.linalg.cholesky(A[p])
            except np.linalg.LinAlgError:
                bad.append(p)
                break
        p = bad[0] if bad else 0
        raise CoincidentCodewordError(
            f"{what} is not positive definite for pair {pair_ids(p)}", pair=pair_ids(p)
        ) from None


def _pep_core(c: Constellation, N: int, users, I, J, with_gradient: bool):
    """Terms (and per-pair gradient pieces) for the given one-error pairs."""
    M = c.M
    P = I.shape[0]
    pair_ids = lambda p: ErrorPair(int(users[p]), tuple(map(int, I[p])), tuple(map(int, J[p])))
    Fj = c.joint_codewords(J)
    # Erroneous user's codeword in F_i.
    Fe = np.empty((P, c.T, M), dtype=complex)
    for k, book in enumerate(c.codebooks):
        sel = users == k
        Fe[sel] = book[I[sel, k]]

    Mj = _hermitian(_H(Fj) @ Fj)
    Lm = _batch_cholesky(Mj, "F_j^H F_j", pair_ids)
    Lm_inv = np.linalg.inv(Lm)
    Mj_inv = _H(Lm_inv) @ Lm_inv
    Z = Fj @ Mj_inv  # F_j M_j^-1
    PFe = Fe - Z @ (_H(Fj) @ Fe)  # P_perp(F_j) F_e
    G = _hermitian(_H(Fe) @ PFe)
    Lg = _batch_cholesky(G, "G_ij", pair_ids)
    logdet = 2.0 * np.sum(np.log(np.real(np.diagonal(Lg, axis1=-2, axis2=-1))), axis=-1)
    if np.any(logdet <= np.log(DET_FLOOR)):
        p = int(np.argmin(logdet))
        raise CoincidentCodewordError(f"det(G_ij) below floor for pair {pair_ids(p)}", pair=pair_ids(p))
    terms = np.exp(-N * logdet)
    if not with_gradient:
        return terms, None, None, Fe
    Lg_inv = np.linalg.inv(Lg)
    G_inv = _H(Lg_inv) @ Lg_inv
    scale = (2.0 * N * terms)[:, None, None]
    core = PFe @ G_inv
    grad_e = -scale * core
    grad_Fj = scale * (core @ (_H(Fe) @ Z))
    return terms, grad_e, grad_Fj, Fe


def _accumulate(c: Constellation, users, I, J, grad_e, grad_Fj):
    M = c.M
    out = [np.zeros(b.shape, dtype=complex) for b in c.codebooks]
    for k in range(c.K):
        sel = users == k
        if np.any(sel):
            np.add.at(out[k], I[sel, k], grad_e[sel])
        # every block of F_j, including the erroneous user's block
        np.add.at(out[k], J[:, k], grad_Fj[:, :, k * M : (k + 1) * M])
    return tuple(out)


def pep_term(pair: ErrorPair, c: Constellation, N: int, *, strict: bool = True) -> float:
    """``det(G_ij)^(-N)`` for one ordered one-error pair."""
    if strict:
        _check_diversity(c)
    users = np.array([pair.user])
    terms, *_ = _pep_core(c, N, users, np.array([pair.i]), np.array([pair.j]), False)
    return float(terms[0])


def pep_terms(c: Constellation, N: int, *, strict: bool = True) -> np.ndarray:
    """All one-error terms in enumeration order."""
    if strict:
        _check_diversity(c)
    users, I, J = error_pair_indices(c)
    if I.shape[0] == 0:
        return np.zeros(0)
    return _pep_core(c, N, users, I, J, False)[0]


def pep_ub_evaluate(c: Constellation, N: int, *, gradient: bool = True, strict: bool = True) -> PepEvaluation:
    if strict:
        _check_diversity(c)
    users, I, J = error_pair_indices(c)
    if I.shape[0] == 0:
        zero = tuple(np.zeros(b.shape, dtype=complex) for b in c.codebooks)
        return PepEvaluation(0.0, np.zeros(0), zero if gradient else None)
    terms, grad_e, grad_Fj, _ = _pep_core(c, N, users, I, J, gradient)
    grads = _accumulate(c, users, I, J, grad_e, grad_Fj) if gradient else None
    return PepEvaluation(float(np.sum(terms)), terms, grads)


def pep_ub_cost(c: Constellation, N: int, *, strict: bool = True) -> float:
    return pep_ub_evaluate(c, N, gradient=False, strict=strict).value


def pep_ub_gradient(c: Constellation, N: int, *, strict: bool = True) -> tuple:
    return pep_ub_evaluate(c, N, gradient=True, strict=strict).gradient


def minmax_pep_objective(c: Constellation, N: int, *, strict: bool = True):
    """Largest one-error term and the pair attaining it (first in enumeration order on ties)."""
    if strict:
        _check_diversity(c)
    users, I, J = error_pair_indices(c)
    if I.shape[0] == 0:
        raise PreconditionError("no error pairs: every user has a single codeword")
    terms = _pep_core(c, N, users, I, J, False)[0]
    p = int(np.argmax(terms))
    return float(terms[p]), ErrorPair(int(users[p]), tuple(map(int, I[p])), tuple(map(int, J[p])))


def minmax_pep_gradient(c: Constellation, N: int, *, strict: bool = True):
    """Value, gradient of the currently dominant term, and that pair."""
    value, pair = minmax_pep_objective(c, N, strict=strict)
    users = np.array([pair.user])
    I, J = np.array([pair.i]), np.array([pair.j])
    _, grad_e, grad_Fj, _ = _pep_core(c, N, users, I, J, True)
    return value, _accumulate(c, users, I, J, grad_e, grad_Fj), pair


def single_user_ub(codewords, N: int) -> float:
    """Single-user Stiefel union bound ``sum_{i<j} det(I - X_i^H X_j X_j^H X_i)^(-N)``.

    Each term is symmetric in (i, j), so the K=1 multiuser bound, which runs
    over ordered pairs, equals twice this value.
    """
    X = np.asarray(codewords)
    L, _, M = X.shape
    total = 0.0
    for i in range(L):
        for j in range(i + 1, L):
            C = X[i].conj().T @ X[j]
            total += np.real(np.linalg.det(np.eye(M) - C @ C.conj().T)) ** (-N)
    return float(total)
