"""Non-full-diversity criteria built on the eigenvalues of Gamma(F_i, F_j).

    Gamma(F_i, F_j) = (I + F_i F_i^H)(I + F_j F_j^H)^-1 = A B^-1

Its eigenvalues are real and positive: with ``B = L L^H`` it is similar to the
Hermitian matrix ``L^-1 A L^-H``. We diagonalize that whitened matrix,
``L^-1 A L^-H = Q diag(lam) Q^H``, which hands back right eigenvectors
``V = L Q`` and left eigenvectors ``U = L^-H Q`` normalized so ``U^H V = I``.

Pairwise quantities:

* ``beta  = sum_l |log lam_l|`` (optionally ``|log lam_l|^(1+eps)``)
* ``delta = sqrt(sum_l log^2 lam_l)``

and the constellation costs are log-sum-exp aggregates over ordered pairs,
``log sum_{i != j} exp(-N * value(F_i, F_j))``.

For any spectral sum ``g = sum_l phi(lam_l)`` the eigenvalue derivative gives

    dg = sum_l phi'(lam_l) u_l^H (dA - lam_l dB) u_l

so with ``dA = Z X^H + X Z^H`` the gradient with respect to a codeword X that
sits in F_i is ``2 (U diag(phi') U^H) X``; in F_j it is
``-2 (U diag(phi' lam) U^H) X``; in both, the sum. This is the rank-one
collapse of the entrywise ``u^H [dGamma/dX]_mn v`` formula.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import CoincidentCodewordError, InvalidInputError
from .manifolds import Constellation

__all__ = [
    "ProxyKind",
    "GammaSystem",
    "ProxyEvaluation",
    "gamma_system",
    "beta_pair",
    "delta_pair",
    "j_half_pair",
    "eigenvalue_derivative",
    "dgamma_block",
    "proxy_ub_cost",
    "proxy_ub_evaluate",
    "proxy_ub_gradient",
    "pairwise_values",
    "pairwise_spectra",
]

DEGENERACY_GAP = 1e-10


class ProxyKind(str, enum.Enum):
    BETA = "beta"
    DELTA = "delta"


def _H(A):
    return np.conj(np.swapaxes(A, -1, -2))


def _gram_plus_identity(F):
    T = F.shape[-2]
    A = np.eye(T) + F @ _H(F)
    return 0.5 * (A + _H(A))


@dataclass(frozen=True)
class GammaSystem:
    gamma: np.ndarray
    eigenvalues: np.ndarray  # descending
    right: np.ndarray  # columns v_l
    left: np.ndarray  # columns u_l, with u_l^H v_l = 1
    resolvent: np.ndarray  # W = (I + F_j F_j^H)^-1
    degenerate: bool

    @property
    def T(self):
        return self.gamma.shape[0]


def _is_degenerate(lam):
    lam = np.sort(lam)
    if lam.size < 2:
        return False
    return bool(np.min(np.diff(lam)) < DEGENERACY_GAP * np.max(np.abs(lam)))


def gamma_system(Fi, Fj) -> GammaSystem:
    """Eigensystem of ``Gamma(F_i, F_j)``.

    ``degenerate`` flags a repeated eigenvalue. Spectral sums stay smooth
    there, and the gradient assembly only uses basis-independent
    combinations of eigenvectors, so it is a diagnostic rather than an error.
    """
    Fi, Fj = np.asarray(Fi, dtype=complex), np.asarray(Fj, dtype=complex)
    if Fi.shape != Fj.shape or Fi.ndim != 2:
        raise InvalidInputError(f"joint codewords must share a T x KM shape, got {Fi.shape} and {Fj.shape}")
    A = _gram_plus_identity(Fi)
    B = _gram_plus_identity(Fj)
    L = np.linalg.cholesky(B)
    L_inv = np.linalg.inv(L)
    W = _H(L_inv) @ L_inv
    lam, Q = np.linalg.eigh(L_inv @ A @ _H(L_inv))
    order = np.argsort(lam)[::-1]
    lam, Q = lam[order], Q[:, order]
    return GammaSystem(
        gamma=A @ W,
        eigenvalues=lam,
        right=L @ Q,
        left=_H(L_inv) @ Q,
        resolvent=W,
        degenerate=_is_degenerate(lam),
    )


def _check_spectrum(lam):
    if np.any(lam <= 0):
        raise ArithmeticError("Gamma has a non-positive eigenvalue")


def beta_pair(gs: GammaSystem, epsilon: float = 0.0) -> float:
    _check_spectrum(gs.eigenvalues)
    return float(np.sum(np.abs(np.log(gs.eigenvalues)) ** (1.0 + epsilon)))


def delta_pair(gs: GammaSystem) -> float:
    _check_spectrum(gs.eigenvalues)
    return float(np.sqrt(np.sum(np.log(gs.eigenvalues) ** 2)))


def j_half_pair(Fi, Fj) -> float:
    """``1/2 logdet(2I + B^-1 A + A^-1 B) - T log 2``; zero iff A == B."""
    A = _gram_plus_identity(np.asarray(Fi, dtype=complex))
    B = _gram_plus_identity(np.asarray(Fj, dtype=complex))
    T = A.shape[0]
    S = 2 * np.eye(T) + np.linalg.solve(B, A) + np.linalg.solve(A, B)
    sign, logdet = np.linalg.slogdet(S)
    return float(0.5 * logdet - T * np.log(2.0))


def eigenvalue_derivative(gamma, dgamma):
    """First-order change of every eigenvalue of a diagonalizable matrix.

    Uses ``dlam_l = u_l^H dGamma v_l / (u_l^H v_l)`` with left eigenvectors
    taken as the rows of ``V^-1``. Returns ``(eigenvalues, derivatives)``.
    """
    lam, V = np.linalg.eig(gamma)
    Uh = np.linalg.inv(V)  # rows are u_l^H, already normalized so u_l^H v_l = 1
    d = np.einsum("lt,ts,sl->l", Uh, dgamma, V)
    return lam, d


def dgamma_block(case: str, X, gs: GammaSystem, m: int, n: int, *, imag: bool = False):
    """Entry (m, n) of dGamma/dX as a T x T matrix, literal form.

    ``case`` is ``"i"`` (X is the error block of F_i), ``"j"`` (error block of
    F_j) or ``"common"`` (X in both). ``imag=True`` differentiates along
    ``i E_mn`` instead of ``E_mn``.
    """
    X = np.asarray(X)
    E = np.zeros(X.shape, dtype=complex)
    E[m, n] = 1j if imag else 1.0
    core = (E @ _H(X) + X @ _H(E)) @ gs.resolvent
    if case == "i":
        return core
    if case == "j":
        return -gs.gamma @ core
    if case == "common":
        return (np.eye(gs.T) - gs.gamma) @ core
    raise ValueError(f"unknown case {case!r}")


@dataclass(frozen=True)
class ProxyEvaluation:
    value: float
    pair_values: np.ndarray  # unordered pairs i < j (joint indices)
    pairs: tuple  # (iu, ju) joint-index arrays
    gradient: tuple | None = None
    epsilon: float = 0.0
    degenerate_pairs: int = 0


def _phi_prime(kind, lam, value, epsilon):
    """d value / d lam_l for each eigenvalue; shape (P, T)."""
    log_lam = np.log(lam)
    if kind is ProxyKind.DELTA:
        return log_lam / (value[:, None] * lam)
    a = np.abs(log_lam)
    if epsilon == 0.0:
        return np.sign(log_lam) / lam
    return (1.0 + epsilon) * a**epsilon * np.sign(log_lam) / lam


def _pair_values(kind, lam, epsilon):
    log_lam = np.log(lam)
    if kind is ProxyKind.DELTA:
        return np.sqrt(np.sum(log_lam**2, axis=-1))
    return np.sum(np.abs(log_lam) ** (1.0 + epsilon), axis=-1)


def _whitened(c: Constellation, chunk: int = 8192):
    """Chunks of unordered joint pairs with their whitened ``L_j^-1 A_i L_j^-H``."""
    F = c.joint_codewords()
    A = _gram_plus_identity(F)
    L_inv = np.linalg.inv(np.linalg.cholesky(A))
    J = F.shape[0]
    iu, ju = np.triu_indices(J, 1)
    for s in range(0, iu.size, chunk):
        a, b = iu[s : s + chunk], ju[s : s + chunk]
        Li = L_inv[b]
        Hm = Li @ A[a] @ _H(Li)
        yield a, b, A, Li, Hm


def pairwise_spectra(c: Constellation):
    """Eigenvalues of Gamma for every unordered pair of joint codewords.

    Returns ``(lam, (iu, ju))`` with ``lam`` of shape (P, T), ascending.
    """
    out, iu_all, ju_all = [], [], []
    for a, b, _, _, Hm in _whitened(c):
        out.append(np.linalg.eigvalsh(Hm))
        iu_all.append(a)
        ju_all.append(b)
    if not out:
        return np.zeros((0, c.T)), (np.zeros(0, int), np.zeros(0, int))
    return np.concatenate(out), (np.concatenate(iu_all), np.concatenate(ju_all))


def pairwise_values(c: Constellation, kind, epsilon: float = 0.0):
    """``beta``, ``delta`` or ``j_half`` for every unordered pair of joint codewords.

    ``j_half`` uses that ``2I + B^-1 A + A^-1 B`` has eigenvalues
    ``(1 + lam)^2 / lam``.
    """
    lam, pairs = pairwise_spectra(c)
    _check_spectrum(lam)
    if kind == "j_half":
        return np.sum(np.log1p(lam) - 0.5 * np.log(lam) - np.log(2.0), axis=-1), pairs
    return _pair_values(ProxyKind(kind), lam, epsilon), pairs


def proxy_ub_evaluate(c: Constellation, N: int, kind, epsilon: float = 0.0, *, gradient: bool = True):
    """Log-sum-exp proxy over ordered pairs, optionally with its ambient gradient.

    Both orders of a pair share the same value (reciprocal eigenvalues), so
    the ordered sum is twice the unordered one; the gradient is assembled
    from unordered pairs.
    """
    kind = ProxyKind(kind)
    if c.num_joint < 2:
        raise InvalidInputError("proxy union bound needs at least two joint codewords")
    eps = float(epsilon) if kind is ProxyKind.BETA else 0.0
    values, iu_all, ju_all = [], [], []
    coef_sum = None
    degenerate = 0
    chunks = []
    for a, b, A, Li, Hm in _whitened(c):
        if gradient:
            lam, Q = np.linalg.eigh(Hm)
        else:
            lam, Q = np.linalg.eigvalsh(Hm), None
        _check_spectrum(lam)
        v = _pair_values(kind, lam, eps)
        values.append(v)
        iu_all.append(a)
        ju_all.append(b)
        if gradient:
            chunks.append((a, b, Li, lam, Q, v))
            srt = np.sort(lam, axis=-1)
            gaps = np.min(np.diff(srt, axis=-1), axis=-1) if lam.shape[-1] > 1 else np.ones(lam.shape[0])
            degenerate += int(np.count_nonzero(gaps < DEGENERACY_GAP * srt[:, -1]))
    values = np.concatenate(values)
    iu, ju = np.concatenate(iu_all), np.concatenate(ju_all)
    value = float(np.log(2.0) + logsumexp(-N * values))
    grads = None
    if gradient:
        if kind is ProxyKind.DELTA and np.any(values <= 1e-14):
            p = int(np.argmin(values))
            raise CoincidentCodewordError(
                f"joint codewords {iu[p]} and {ju[p]} coincide (delta = 0)", pair=(int(iu[p]), int(ju[p]))
            )
        # unordered weights: -N exp(-N v) / sum_unordered exp(-N v)
        w_all = -N * np.exp(-N * values - logsumexp(-N * values))
        T = c.T
        coef_sum = np.zeros((c.num_joint, T, T), dtype=complex)
        s = 0
        for a, b, Li, lam, Q, v in chunks:
            w = w_all[s : s + a.size]
            s += a.size
            U = _H(Li) @ Q  # left eigenvectors u_l
            dphi = _phi_prime(kind, lam, v, eps)
            GA = (U * (w[:, None] * dphi)[:, None, :]) @ _H(U)
            GB = -(U * (w[:, None] * dphi * lam)[:, None, :]) @ _H(U)
            np.add.at(coef_sum, a, GA)
            np.add.at(coef_sum, b, GB)
        grads = _codeword_gradients(c, coef_sum)
    return ProxyEvaluation(value, values, (iu, ju), grads, eps, degenerate)


def _codeword_gradients(c: Constellation, coef_sum):
    """Collapse per-joint-codeword coefficient matrices onto user codewords.

    The factor 2 comes from ``dA = Z X^H + X Z^H``.
    """
    T = c.T
    C = coef_sum.reshape(*c.sizes, T, T)
    out = []
    for k, book in enumerate(c.codebooks):
        axes = tuple(ax for ax in range(c.K) if ax != k)
        Ck = C.sum(axis=axes) if axes else C
        out.append(2.0 * (Ck @ book))
    return tuple(out)


def proxy_ub_cost(c: Constellation, N: int, kind, epsilon: float = 0.0) -> float:
    return proxy_ub_evaluate(c, N, kind, epsilon, gradient=False).value


def proxy_ub_gradient(c: Constellation, N: int, kind, epsilon: float = 0.0) -> tuple:
    return proxy_ub_evaluate(c, N, kind, epsilon, gradient=True).gradient
