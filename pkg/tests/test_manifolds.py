import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import KINDS, rng_for
from ncmac.errors import DegenerateRetractionError, InvalidDimensionsError, InvalidInputError
from ncmac.manifolds import (
    Constellation,
    ManifoldKind,
    constraint_residual,
    crandn,
    grassmann_distance,
    inner,
    project_tangent,
    random_codeword,
    random_constellation,
    retract,
)

dims = st.tuples(st.integers(2, 7), st.integers(1, 3)).filter(lambda tm: tm[0] > tm[1])
kinds = st.sampled_from(KINDS)
seeds = st.integers(0, 2**32 - 1)


def random_ambient(c, rng):
    return tuple(crandn(rng, b.shape) for b in c.codebooks)


class TestRandomCodeword:
    def test_grassmann_single_column_is_unit(self):
        x = random_codeword("grassmann", 3, 1, rng_for(1))
        assert x.shape == (3, 1)
        assert abs(np.vdot(x, x) - 1) < 1e-14

    def test_oblique_power(self):
        X = random_codeword("oblique", 5, 2, rng_for(2))
        assert np.isclose(np.linalg.norm(X) ** 2, 2.0, rtol=0, atol=1e-13)

    @pytest.mark.parametrize("T,M", [(2, 2), (1, 1), (3, 4), (2, 0)])
    def test_invalid_dimensions(self, T, M):
        with pytest.raises(InvalidDimensionsError):
            random_codeword("oblique", T, M, rng_for(0))

    def test_grassmann_residual_is_tiny(self):
        c = random_constellation("grassmann", 6, 2, [8, 8], rng_for(3))
        assert constraint_residual("grassmann", c) <= 1e-12

    def test_trace_codebook_power(self):
        c = random_constellation("trace", 5, 2, [7, 3], rng_for(4))
        for book in c.codebooks:
            assert abs(np.sum(np.abs(book) ** 2) / book.shape[0] - 2) <= 1e-12
        # individual codewords are no longer on the oblique sphere in general
        assert constraint_residual("trace", c) <= 1e-12

    def test_grassmann_projector_trace_statistics(self):
        # E[X^H X] = I for Haar Stiefel draws, so E[tr(X X^H)] = M, and
        # E[X X^H] = (M/T) I; check the latter's (0, 0) entry against 3 standard errors.
        rng = rng_for(5)
        T, M, n = 4, 2, 10_000
        diag = np.empty(n)
        traces = np.empty(n)
        for s in range(n):
            X = random_codeword("grassmann", T, M, rng)
            P = X @ X.conj().T
            diag[s] = P[0, 0].real
            traces[s] = np.trace(P).real
        assert np.allclose(traces, M, atol=1e-12)
        se = diag.std(ddof=1) / np.sqrt(n)
        assert abs(diag.mean() - M / T) <= 3 * se


class TestConstellation:
    def test_joint_layout(self):
        c = random_constellation("oblique", 4, 1, [2, 3], rng_for(0))
        assert c.num_joint == 6
        idx = c.multi_indices()
        assert idx.tolist() == [[0, 0], [0, 1], [0, 2], [1, 0], [1, 1], [1, 2]]
        F = c.joint_codewords()
        assert F.shape == (6, 4, 2)
        for j, (a, b) in enumerate(idx):
            assert np.array_equal(F[j], c.joint((a, b)))
            assert np.array_equal(F[j][:, :1], c.codebooks[0][a])
            assert np.array_equal(F[j][:, 1:], c.codebooks[1][b])

    def test_codebooks_are_read_only(self):
        c = random_constellation("oblique", 4, 1, [2], rng_for(0))
        with pytest.raises(ValueError):
            c.codebooks[0][0, 0, 0] = 1.0

    def test_with_codeword_does_not_touch_original(self):
        c = random_constellation("oblique", 4, 1, [2], rng_for(0))
        before = np.array(c.codebooks[0])
        c2 = c.with_codeword(0, 1, np.zeros((4, 1)))
        assert np.array_equal(c.codebooks[0], before)
        assert not np.any(c2.codebooks[0][1])

    def test_mismatched_shapes(self):
        with pytest.raises(InvalidDimensionsError):
            Constellation((np.zeros((2, 4, 1)), np.zeros((2, 5, 1))))
        with pytest.raises(InvalidDimensionsError):
            Constellation((np.zeros((2, 2, 2)),))

    def test_bad_multi_index(self):
        c = random_constellation("oblique", 4, 1, [2, 2], rng_for(0))
        with pytest.raises(InvalidInputError):
            c.joint((0,))


class TestProjection:
    def test_grassmann_examples(self):
        T = 3
        X = random_constellation("grassmann", T, 1, [1], rng_for(9))
        (P,) = project_tangent("grassmann", X, X.codebooks)
        assert np.allclose(P, 0, atol=1e-14)
        e = np.eye(2, dtype=complex)
        c = Constellation((e[None, :, :1],))
        (P,) = project_tangent("grassmann", c, (e[None, :, 1:],))
        assert np.array_equal(P, e[None, :, 1:])

    def test_oblique_keeps_tangent_vectors(self):
        c = random_constellation("oblique", 4, 2, [3], rng_for(1))
        X = c.codebooks[0]
        Z = crandn(rng_for(2), X.shape)
        # make Z tangent by hand: Re<X, Z> = 0 per codeword
        Z = Z - (np.real(inner(X, Z)) / np.real(inner(X, X)))[:, None, None] * X
        (P,) = project_tangent("oblique", c, (Z,))
        assert np.allclose(P, Z, atol=1e-14)

    def test_shape_mismatch(self):
        c = random_constellation("oblique", 4, 1, [2, 2], rng_for(0))
        with pytest.raises(InvalidInputError):
            project_tangent("oblique", c, (np.zeros((2, 4, 1)),))
        with pytest.raises(InvalidInputError):
            project_tangent("oblique", c, (np.zeros((2, 4, 1)), np.zeros((3, 4, 1))))

    @given(kind=kinds, tm=dims, seed=seeds, xc=st.booleans())
    def test_idempotent(self, kind, tm, seed, xc):
        T, M = tm
        rng = rng_for(seed)
        c = random_constellation(kind, T, M, [3, 2], rng)
        Z = random_ambient(c, rng)
        P1 = project_tangent(kind, c, Z, xc_projector=xc)
        P2 = project_tangent(kind, c, P1, xc_projector=xc)
        for a, b in zip(P1, P2):
            assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.max(np.abs(a)))

    @given(kind=kinds, tm=dims, seed=seeds)
    def test_tangency(self, kind, tm, seed):
        T, M = tm
        rng = rng_for(seed)
        c = random_constellation(kind, T, M, [3, 2], rng)
        P = project_tangent(kind, c, random_ambient(c, rng))
        for X, Pk in zip(c.codebooks, P):
            if kind is ManifoldKind.GRASSMANN:
                back = Pk - X @ (X.conj().transpose(0, 2, 1) @ Pk)
                assert np.allclose(back, Pk, atol=1e-12)
            elif kind is ManifoldKind.OBLIQUE:
                assert np.allclose(np.real(inner(X, Pk)), 0, atol=1e-12)
            else:
                assert abs(np.real(np.vdot(X, Pk))) <= 1e-11

    @given(tm=dims, seed=seeds)
    def test_xc_projector_removes_sum_direction(self, tm, seed):
        T, M = tm
        rng = rng_for(seed)
        c = random_constellation("trace", T, M, [4], rng)
        (P,) = project_tangent("trace", c, random_ambient(c, rng), xc_projector=True)
        XC = c.codebooks[0].sum(axis=0)
        assert np.allclose(np.real(inner(XC[None], P)), 0, atol=1e-11)


class TestRetraction:
    @pytest.mark.parametrize("kind", KINDS, ids=lambda k: k.value)
    def test_zero_step(self, kind):
        c = random_constellation(kind, 5, 2, [3, 2], rng_for(3))
        r = retract(kind, c, tuple(np.zeros_like(b) for b in c.codebooks))
        for a, b in zip(c.codebooks, r.codebooks):
            for x, y in zip(a, b):
                assert grassmann_distance(x, y) <= 1e-12
                if kind is not ManifoldKind.GRASSMANN:
                    assert np.allclose(x, y, atol=1e-14)

    def test_grassmann_single_column_is_normalization(self):
        e = np.eye(3, dtype=complex)
        c = Constellation((e[None, :, :1],))
        step = 0.1 * e[None, :, 1:2]
        (x,) = retract("grassmann", c, (step,)).codebooks[0]
        expected = (e[:, :1] + 0.1 * e[:, 1:2]) / np.linalg.norm(e[:, :1] + 0.1 * e[:, 1:2])
        assert np.allclose(x, expected, atol=1e-15)

    def test_grassmann_positive_diagonal_convention(self):
        rng = rng_for(4)
        c = random_constellation("grassmann", 5, 2, [2], rng)
        step = tuple(0.3 * crandn(rng, b.shape) for b in c.codebooks)
        r = retract("grassmann", c, step)
        for X, Y, Z in zip(c.codebooks[0], r.codebooks[0], step[0]):
            # Y = (X + Z) R^-1 with R upper triangular, positive real diagonal
            R = Y.conj().T @ (X + Z)
            assert np.allclose(np.tril(R, -1), 0, atol=1e-12)
            assert np.all(np.diag(R).real > 0) and np.allclose(np.diag(R).imag, 0, atol=1e-12)

    def test_oblique_small_tangent_step(self):
        e = np.zeros((4, 2), dtype=complex)
        e[0, 0] = np.sqrt(2)
        c = Constellation((e[None],))
        Z = np.zeros_like(e)
        Z[1, 1] = 1e-3
        (Y,) = retract("oblique", c, (Z[None],)).codebooks[0]
        assert abs(np.linalg.norm(Y) ** 2 - 2) <= 1e-14

    def test_rank_deficient_step(self):
        c = random_constellation("grassmann", 4, 2, [1], rng_for(0))
        with pytest.raises(DegenerateRetractionError):
            retract("grassmann", c, (-c.codebooks[0],))

    def test_scaled_oblique_residual(self):
        c = random_constellation("oblique", 4, 2, [2], rng_for(0))
        c2 = c.with_codeword(0, 1, 2 * c.codebooks[0][1])
        assert np.isclose(constraint_residual("oblique", c2), 3 * 2, atol=1e-12)

    @given(kind=kinds, tm=dims, seed=seeds, scale=st.floats(1e-3, 3.0))
    def test_feasible_after_retraction(self, kind, tm, seed, scale):
        T, M = tm
        rng = rng_for(seed)
        c = random_constellation(kind, T, M, [3, 2], rng)
        step = tuple(scale * s for s in project_tangent(kind, c, random_ambient(c, rng)))
        try:
            r = retract(kind, c, step)
        except DegenerateRetractionError:
            return
        assert constraint_residual(kind, r) <= 1e-10

    @pytest.mark.parametrize("kind", KINDS, ids=lambda k: k.value)
    def test_second_order_agreement(self, kind):
        rng = rng_for(11)
        c = random_constellation(kind, 5, 2, [3, 2], rng)
        Z = project_tangent(kind, c, random_ambient(c, rng))
        errs = []
        for t in (1e-2, 1e-3, 1e-4):
            r = retract(kind, c, tuple(t * z for z in Z))
            errs.append(
                np.sqrt(sum(np.sum(np.abs(a - (x + t * z)) ** 2) for a, x, z in zip(r.codebooks, c.codebooks, Z)))
            )
        # o(t): each tenfold reduction of t cuts the error by far more than tenfold
        assert errs[1] / errs[0] < 0.02 and errs[2] / errs[1] < 0.02

    def test_hundred_random_retractions_per_kind(self):
        rng = rng_for(21)
        for kind in KINDS:
            for _ in range(100):
                c = random_constellation(kind, 4, 2, [2], rng)
                step = tuple(0.5 * s for s in project_tangent(kind, c, random_ambient(c, rng)))
                assert constraint_residual(kind, retract(kind, c, step)) <= 1e-10
