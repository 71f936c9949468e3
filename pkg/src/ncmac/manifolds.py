"""Power-constraint manifolds for multiuser noncoherent codebooks.

A constellation is stored as one ``(L_k, T, M)`` complex array per user.
Three constraints are supported:

* Grassmann: every codeword is a Stiefel matrix, ``X^H X = I_M``.
* Oblique: every codeword has ``||X||_F^2 = M``.
* Trace: every user codebook has average power ``M``.

Gradient sets ("ambient" or "tangent") use the same layout as the
constellation: a tuple with one ``(L_k, T, M)`` array per user.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRetractionError, InvalidDimensionsError, InvalidInputError

__all__ = [
    "ManifoldKind",
    "Constellation",
    "crandn",
    "random_codeword",
    "random_constellation",
    "project_tangent",
    "retract",
    "constraint_residual",
    "grassmann_distance",
    "inner",
]


class ManifoldKind(str, enum.Enum):
    GRASSMANN = "grassmann"
    OBLIQUE = "oblique"
    TRACE = "trace"


def _freeze(a):
    a = np.array(a, dtype=complex, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Constellation:
    """K user codebooks; joint codewords are built on demand.

    ``codebooks[k]`` has shape ``(L_k, T, M)``. The arrays are read-only, so a
    constellation can be shared freely; "updates" build a new object.
    """

    codebooks: tuple

    def __post_init__(self):
        books = tuple(_freeze(b) for b in self.codebooks)
        if not books:
            raise InvalidDimensionsError("a constellation needs at least one user")
        shapes = {b.shape[1:] for b in books}
        if any(b.ndim != 3 for b in books) or len(shapes) != 1:
            raise InvalidDimensionsError(
                f"all codebooks must be (L_k, T, M) with a common (T, M); got {[b.shape for b in books]}"
            )
        T, M = books[0].shape[1:]
        if not T > M >= 1:
            raise InvalidDimensionsError(f"need T > M >= 1, got T={T}, M={M}")
        if any(b.shape[0] < 1 for b in books):
            raise InvalidDimensionsError("every user needs at least one codeword")
        object.__setattr__(self, "codebooks", books)

    @property
    def K(self) -> int:
        return len(self.codebooks)

    @property
    def T(self) -> int:
        return self.codebooks[0].shape[1]

    @property
    def M(self) -> int:
        return self.codebooks[0].shape[2]

    @property
    def sizes(self) -> tuple:
        return tuple(b.shape[0] for b in self.codebooks)

    @property
    def num_joint(self) -> int:
        return int(np.prod(self.sizes))

    def multi_indices(self) -> np.ndarray:
        """All joint multi-indices, lexicographic with user 1 most significant."""
        grids = np.meshgrid(*[np.arange(L) for L in self.sizes], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def joint(self, index) -> np.ndarray:
        """Joint codeword ``F = [X_{1,i_1} ... X_{K,i_K}]`` (T x KM)."""
        index = tuple(index)
        if len(index) != self.K:
            raise InvalidInputError(f"multi-index needs {self.K} entries, got {len(index)}")
        return np.concatenate([b[i] for b, i in zip(self.codebooks, index)], axis=1)

    def joint_codewords(self, indices=None) -> np.ndarray:
        """Stack of joint codewords, shape ``(J, T, KM)``."""
        if indices is None:
            indices = self.multi_indices()
        indices = np.asarray(indices)
        return np.concatenate([b[indices[:, k]] for k, b in enumerate(self.codebooks)], axis=2)

    def with_codebooks(self, codebooks) -> "Constellation":
        return Constellation(tuple(codebooks))

    def with_codeword(self, k: int, i: int, X) -> "Constellation":
        books = [np.array(b) for b in self.codebooks]
        books[k][i] = X
        return Constellation(tuple(books))

    def transform(self, fn) -> "Constellation":
        """Apply ``fn`` to every codebook array and rebuild."""
        return Constellation(tuple(fn(b) for b in self.codebooks))


def inner(A, B):
    """Frobenius inner product ``<A, B> = tr(A^H B)`` over the trailing two axes."""
    return np.sum(np.conj(A) * B, axis=(-2, -1))


def crandn(rng, shape):
    """i.i.d. CN(0, 1) samples: (g1 + i g2)/sqrt(2)."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _qr_positive(A):
    """Batched QR with the R diagonal forced real positive."""
    Q, R = np.linalg.qr(A)
    d = np.diagonal(R, axis1=-2, axis2=-1)
    mag = np.abs(d)
    if np.any(mag <= 1e-12 * np.maximum(np.max(mag, axis=-1, keepdims=True), 1e-300)):
        raise DegenerateRetractionError("rank-deficient matrix in QR retraction")
    phase = d / mag
    return Q * phase[..., None, :]


def _check_dims(T, M):
    if not T > M >= 1:
        raise InvalidDimensionsError(f"need T > M >= 1, got T={T}, M={M}")


def random_codeword(kind, T: int, M: int, rng) -> np.ndarray:
    """One random T x M codeword on the given manifold.

    Grassmann draws are Haar distributed (Q factor of a Gaussian matrix); the
    sphere kinds rescale a Gaussian matrix to ``||X||_F^2 = M``.
    """
    _check_dims(T, M)
    kind = ManifoldKind(kind)
    G = crandn(rng, (T, M))
    if kind is ManifoldKind.GRASSMANN:
        return _qr_positive(G)
    return G * np.sqrt(M) / np.linalg.norm(G)


def random_constellation(kind, T: int, M: int, sizes, rng) -> Constellation:
    """Random starting point for ``K = len(sizes)`` users."""
    kind = ManifoldKind(kind)
    books = []
    for L in sizes:
        if L < 1:
            raise InvalidDimensionsError(f"codebook size must be >= 1, got {L}")
        book = np.stack([random_codeword(kind, T, M, rng) for _ in range(L)])
        if kind is ManifoldKind.TRACE:
            book = _rescale_codebook(book, M)
        books.append(book)
    return Constellation(tuple(books))


def _rescale_codebook(book, M):
    L = book.shape[0]
    power = np.sum(np.abs(book) ** 2)
    return book * np.sqrt(M * L / power)


def _check_gradient_shapes(base: Constellation, grads):
    if len(grads) != base.K:
        raise InvalidInputError(f"expected {base.K} gradient blocks, got {len(grads)}")
    for b, g in zip(base.codebooks, grads):
        if np.shape(g) != b.shape:
            raise InvalidInputError(f"gradient block shape {np.shape(g)} != codebook shape {b.shape}")


def project_tangent(kind, base: Constellation, ambient, *, xc_projector: bool = False) -> tuple:
    """Project an ambient gradient set onto the tangent space at ``base``.

    ``xc_projector`` selects the alternative trace-manifold projector that
    removes, from every codeword gradient, its component along the sum of the
    user's codewords.
    """
    kind = ManifoldKind(kind)
    _check_gradient_shapes(base, ambient)
    out = []
    for X, Z in zip(base.codebooks, ambient):
        Z = np.asarray(Z, dtype=complex)
        if kind is ManifoldKind.GRASSMANN:
            P = Z - X @ (np.conj(np.swapaxes(X, -1, -2)) @ Z)
        elif kind is ManifoldKind.OBLIQUE:
            coef = np.real(inner(X, Z)) / np.real(inner(X, X))
            P = Z - coef[:, None, None] * X
        elif xc_projector:
            XC = X.sum(axis=0)
            coef = np.real(inner(XC, Z)) / np.real(inner(XC, XC))
            P = Z - coef[:, None, None] * XC
        else:
            coef = np.real(np.vdot(X, Z)) / np.real(np.vdot(X, X))
            P = Z - coef * X
        out.append(P)
    return tuple(out)


def retract(kind, base: Constellation, step) -> Constellation:
    """Move ``base`` by ``step`` and map the result back onto the manifold."""
    kind = ManifoldKind(kind)
    _check_gradient_shapes(base, step)
    M = base.M
    books = []
    for X, Z in zip(base.codebooks, step):
        Y = X + Z
        if kind is ManifoldKind.GRASSMANN:
            Y = _qr_positive(Y)
        elif kind is ManifoldKind.OBLIQUE:
            norms = np.sqrt(np.real(inner(Y, Y)))
            if np.any(norms == 0):
                raise DegenerateRetractionError("zero codeword in oblique retraction")
            Y = Y * (np.sqrt(M) / norms)[:, None, None]
        else:
            if not np.any(Y):
                raise DegenerateRetractionError("zero codebook in trace retraction")
            Y = _rescale_codebook(Y, M)
        books.append(Y)
    return Constellation(tuple(books))


def constraint_residual(kind, c: Constellation) -> float:
    """Largest violation of the manifold's power constraint over ``c``."""
    kind = ManifoldKind(kind)
    M = c.M
    worst = 0.0
    for X in c.codebooks:
        if kind is ManifoldKind.GRASSMANN:
            gram = np.conj(np.swapaxes(X, -1, -2)) @ X
            r = np.linalg.norm(gram - np.eye(M), axis=(-2, -1)).max()
        elif kind is ManifoldKind.OBLIQUE:
            r = np.abs(np.real(inner(X, X)) - M).max()
        else:
            r = abs(np.sum(np.abs(X) ** 2) / X.shape[0] - M)
        worst = max(worst, float(r))
    return worst


def grassmann_distance(X1, X2) -> float:
    """Frobenius distance between the projectors ``X X^H``."""
    P1 = X1 @ np.conj(np.swapaxes(X1, -1, -2))
    P2 = X2 @ np.conj(np.swapaxes(X2, -1, -2))
    return float(np.linalg.norm(P1 - P2))


def unitary_rotate(c: Constellation, rng) -> Constellation:
    """Replace every codeword X by X U with a fresh Haar unitary U (testing aid)."""
    def rot(book):
        L, _, M = book.shape
        U = _qr_positive(crandn(rng, (L, M, M)))
        return book @ U
    return c.transform(rot)


def iter_codewords(c: Constellation):
    for k, book in enumerate(c.codebooks):
        for i in range(book.shape[0]):
            yield k, i, book[i]


def all_index_tuples(sizes):
    return list(itertools.product(*[range(L) for L in sizes]))
