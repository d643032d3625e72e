import math

import numpy as np
import pytest

from hitchinlab import linalg
from hitchinlab.errors import NonInvertible, NonTransverse
from hitchinlab.linalg import (
    Flag,
    Subspace,
    WeylVector,
    eigendecompose,
    exterior_power,
    flag_distance,
    grassmann_distance,
    hilbert_length,
    intersect,
    intersection_derivative,
    jordan_projection,
    plucker,
    rp_distance,
    simple_root,
)

from conftest import random_loxodromic


class TestEigendecompose:
    def test_diagonal(self):
        e = math.e
        eig = eigendecompose(np.diag([e, 1.0, 1.0 / e]))
        assert eig.loxodromic
        assert np.allclose(np.abs(eig.eigenvalues), [e, 1.0, 1.0 / e])

    def test_rotation_not_loxodromic(self):
        eig = eigendecompose(np.array([[0.0, -1.0], [1.0, 0.0]]))
        assert not eig.loxodromic

    def test_conjugation_invariance(self, rng):
        for _ in range(20):
            g = rng.standard_normal((3, 3))
            while abs(np.linalg.det(g)) < 0.1:
                g = rng.standard_normal((3, 3))
            m = g @ np.diag([4.0, 2.0, 1.0]) @ np.linalg.inv(g)
            eig = eigendecompose(m)
            assert np.abs(np.abs(eig.eigenvalues) - [4.0, 2.0, 1.0]).max() < 1e-8

    def test_singular_rejected(self):
        with pytest.raises(NonInvertible):
            eigendecompose(np.diag([1.0, 0.0]))


class TestJordanProjection:
    def test_diagonal(self):
        lam = jordan_projection(np.diag([math.e ** 2, math.e, math.e ** -3]))
        assert np.allclose(lam.entries, [2.0, 1.0, -3.0], atol=1e-12)

    def test_scalar_ambiguity(self):
        lam = jordan_projection(2.0 * np.eye(3))
        assert np.allclose(lam.entries, 0.0, atol=1e-12)

    def test_conjugation_and_scaling_invariance(self, rng):
        g = random_loxodromic(rng, 4)
        lam = jordan_projection(g)
        for _ in range(10):
            h = rng.standard_normal((4, 4))
            conj = h @ (3.7 * g) @ np.linalg.inv(h)
            assert np.abs(jordan_projection(conj).entries - lam.entries).max() < 1e-8

    def test_opposition_involution(self, rng):
        for _ in range(10):
            g = random_loxodromic(rng, 5)
            lam = jordan_projection(g).entries
            lam_inv = jordan_projection(np.linalg.inv(g)).entries
            assert np.abs(lam_inv - (-lam[::-1])).max() < 1e-8


class TestRootsAndLengths:
    def test_examples(self):
        lam = WeylVector(np.array([2.0, 1.0, -3.0]))
        assert simple_root(lam, 1) == pytest.approx(1.0)
        assert simple_root(lam, 2) == pytest.approx(4.0)
        assert hilbert_length(lam) == pytest.approx(5.0)

    def test_zero_vector(self):
        lam = WeylVector(np.zeros(4))
        assert all(simple_root(lam, k) == 0.0 for k in range(1, 4))

    def test_telescoping(self, rng):
        for _ in range(1000):
            raw = np.sort(rng.standard_normal(5))[::-1]
            lam = WeylVector(raw - raw.mean())
            total = sum(simple_root(lam, k) for k in range(1, 5))
            assert abs(hilbert_length(lam) - total) < 1e-12

    def test_out_of_range(self):
        lam = WeylVector(np.zeros(3))
        with pytest.raises(ValueError):
            simple_root(lam, 3)


class TestExteriorPower:
    def test_first_power_is_identity_map(self, rng):
        g = rng.standard_normal((4, 4))
        assert np.array_equal(exterior_power(g, 1), g)

    def test_diagonal_second_power(self):
        out = exterior_power(np.diag([2.0, 3.0, 5.0]), 2)
        assert np.allclose(out, np.diag([6.0, 10.0, 15.0]))

    def test_top_gap_identity(self, rng):
        # top gap of the k-th compound spectrum equals the k-th simple root
        for _ in range(50):
            n = int(rng.integers(3, 7))
            g = random_loxodromic(rng, n)
            lam = jordan_projection(g)
            for k in range(1, n):
                wedge = jordan_projection(exterior_power(g, k))
                gap = wedge.entries[0] - wedge.entries[1]
                assert abs(gap - simple_root(lam, k)) < 1e-10


class TestPlucker:
    def test_coordinate_plane(self):
        V = Subspace(np.eye(4)[:, :2])
        w = plucker(V)
        expect = np.zeros(6)
        expect[0] = 1.0  # e1^e2 is first in lexicographic order
        assert np.allclose(w, expect)

    def test_frame_invariance(self, rng):
        for _ in range(20):
            F = np.linalg.qr(rng.standard_normal((5, 2)))[0]
            theta = rng.uniform(0, 2 * np.pi)
            rot = np.array([[np.cos(theta), -np.sin(theta)],
                            [np.sin(theta), np.cos(theta)]])
            assert rp_distance(plucker(Subspace(F)), plucker(Subspace(F @ rot))) < 1e-10

    def test_distance_matches_chordal_of_images(self):
        U = Subspace(np.eye(4)[:, [0, 1]])
        W = Subspace(np.eye(4)[:, [0, 2]])
        assert grassmann_distance(U, W) == pytest.approx(
            rp_distance(plucker(U), plucker(W)))


class TestIntersect:
    def test_coordinate_example(self):
        U = Subspace(np.eye(3)[:, [0, 1]])
        W = Subspace(np.eye(3)[:, [1, 2]])
        line = intersect(U, W)
        assert rp_distance(line.frame[:, 0], np.array([0.0, 1.0, 0.0])) < 1e-12

    def test_symmetry(self, rng):
        for _ in range(10):
            U = Subspace.from_span(rng.standard_normal((4, 2)))
            W = Subspace.from_span(rng.standard_normal((4, 3)))
            d = grassmann_distance(intersect(U, W), intersect(W, U))
            assert d < 1e-10

    def test_membership_residuals(self, rng):
        for _ in range(20):
            U = Subspace.from_span(rng.standard_normal((5, 3)))
            W = Subspace.from_span(rng.standard_normal((5, 4)))
            I = intersect(U, W)
            for sub in (U, W):
                P = sub.frame @ sub.frame.T
                assert np.abs(P @ I.frame - I.frame).max() < 1e-8

    def test_dimension_count(self, rng):
        U = Subspace.from_span(rng.standard_normal((6, 4)))
        W = Subspace.from_span(rng.standard_normal((6, 3)))
        I = intersect(U, W)
        joint = np.hstack([U.frame, W.frame])
        dim_sum = np.linalg.matrix_rank(joint)
        assert I.dim + dim_sum == U.dim + W.dim

    def test_non_transverse(self):
        U = Subspace(np.eye(4)[:, [0, 1, 2]])
        W = Subspace(np.eye(4)[:, [0, 1]])
        with pytest.raises(NonTransverse) as err:
            intersect(U, W)
        assert err.value.sigma < 1e-8


class TestIntersectionDerivative:
    @staticmethod
    def _setup(rng, n, k, l):
        U = Subspace.from_span(rng.standard_normal((n, k)))
        W = Subspace.from_span(rng.standard_normal((n, l)))
        phi = rng.standard_normal((n - k, k))
        psi = rng.standard_normal((n - l, l))
        return U, W, phi, psi

    def test_zero_maps(self, rng):
        U, W, _, _ = self._setup(rng, 4, 2, 3)
        out = intersection_derivative(U, W, np.zeros((2, 2)), np.zeros((1, 3)))
        assert np.abs(out).max() < 1e-12

    def test_linearity(self, rng):
        U, W, phi, psi = self._setup(rng, 5, 3, 4)
        one = intersection_derivative(U, W, phi, psi)
        two = intersection_derivative(U, W, 2 * phi, 2 * psi)
        assert np.abs(two - 2 * one).max() < 1e-10

    def test_finite_difference(self, rng):
        h = 1e-4
        for n, k, l in [(4, 2, 3), (5, 3, 4)]:
            for _ in range(10):
                U, W, phi, psi = self._setup(rng, n, k, l)
                analytic = intersection_derivative(U, W, phi, psi)
                fd = _fd_tangent(U, W, phi, psi, h)
                rel = np.linalg.norm(fd - analytic) / np.linalg.norm(analytic)
                assert rel < 1e-6


def _fd_tangent(U, W, phi, psi, h):
    from hitchinlab.linalg import orth_complement

    Up, Wp = orth_complement(U.frame), orth_complement(W.frame)
    I0 = intersect(U, W)
    Ip = orth_complement(I0.frame)

    def curve(F, Fp, T, t):
        q, _ = np.linalg.qr(F + t * (Fp @ T))
        return Subspace(q)

    def rep(I):
        return Ip.T @ I.frame @ np.linalg.inv(I0.frame.T @ I.frame)

    plus = intersect(curve(U.frame, Up, phi, h), curve(W.frame, Wp, psi, h))
    minus = intersect(curve(U.frame, Up, phi, -h), curve(W.frame, Wp, psi, -h))
    return (rep(plus) - rep(minus)) / (2 * h)


class TestDistances:
    def test_identity(self, rng):
        p = rng.standard_normal(4)
        p /= np.linalg.norm(p)
        assert rp_distance(p, p) == 0.0
        assert rp_distance(p, -p) == 0.0

    def test_orthogonal_lines(self):
        assert rp_distance(np.eye(3)[:, 0], np.eye(3)[:, 1]) == pytest.approx(math.sqrt(2))

    def test_triangle_inequality(self, rng):
        pts = rng.standard_normal((300, 4))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        idx = rng.integers(0, 300, size=(10000, 3))
        for i, j, k in idx:
            dij = rp_distance(pts[i], pts[j])
            dik = rp_distance(pts[i], pts[k])
            dkj = rp_distance(pts[k], pts[j])
            assert dij <= dik + dkj + 1e-12

    def test_flag_distance_dimension_mismatch(self):
        F = Flag.from_matrix(np.eye(3))
        G = Flag.from_matrix(np.eye(4))
        with pytest.raises(ValueError):
            flag_distance(F, G)


class TestCocycle:
    def test_matches_eig_for_mild_products(self, rng):
        for _ in range(10):
            factors = [random_loxodromic(rng, 3, min_gap=0.8) for _ in range(3)]
            g = factors[0] @ factors[1] @ factors[2]
            spec = linalg.cocycle_spectrum(factors)
            lam = jordan_projection(g)
            assert np.abs(spec.log_moduli - lam.entries).max() < 1e-8

    def test_identity_not_loxodromic(self):
        spec = linalg.cocycle_spectrum([np.eye(3)])
        assert not spec.loxodromic

    def test_eigenbasis_assembly(self, rng):
        g = random_loxodromic(rng, 4, min_gap=0.7)
        fwd = linalg.cocycle_spectrum([g])
        bwd = linalg.cocycle_spectrum([np.linalg.inv(g)])
        V = linalg.loxodromic_eigenbasis(fwd, bwd)
        gv = g @ V
        ratios = np.linalg.norm(gv, axis=0)
        # columns are eigenvectors: image parallel to source
        cos = np.abs(np.sum(gv * V, axis=0)) / ratios
        assert np.all(cos > 1.0 - 1e-8)
