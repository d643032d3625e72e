import numpy as np
import pytest

import hitchinlab as hl
from hitchinlab import linalg, reps, words
from hitchinlab.errors import CertificationFailure, InadmissibleParameter
from hitchinlab.words import Presentation, enumerate_reduced


class TestFuchsianOctagon:
    def test_regular_relator(self, regular):
        assert regular.relator_residual < 1e-10

    def test_discreteness_smoke(self, regular):
        for w in enumerate_reduced(regular.presentation, 4):
            assert abs(np.trace(reps.evaluate(regular, w))) > 2.0

    def test_generators_hyperbolic(self, regular):
        for g in "abcd":
            assert abs(np.trace(regular.gens[g])) > 2.0

    def test_stretched_point_differs(self, regular, stretched):
        # some length ratio differs from 1: genuinely non-conjugate point
        ratios = []
        for w in ("a", "c", "ac", "bd"):
            la = linalg.hilbert_length(linalg.jordan_projection(reps.evaluate(regular, w)))
            lb = linalg.hilbert_length(linalg.jordan_projection(reps.evaluate(stretched, w)))
            ratios.append(lb / la)
        assert max(ratios) - min(ratios) > 1e-3

    def test_inadmissible(self):
        with pytest.raises(InadmissibleParameter):
            hl.fuchsian_octagon(1.5)
        with pytest.raises(InadmissibleParameter):
            hl.fuchsian_octagon(float("nan"))


class TestEvaluate:
    def test_generator(self, regular):
        assert np.array_equal(reps.evaluate(regular, "a"), regular.gens["a"])

    def test_unreduced_rejected(self, regular):
        with pytest.raises(ValueError):
            reps.evaluate(regular, "aAb")

    def test_relator_scalar(self, regular):
        assert reps.scalar_residual(reps.evaluate(regular, "abABcdCD")) < 1e-10

    def test_det_one(self, regular, rng):
        for _ in range(5):
            w = "".join(rng.choice(list("abcd"), size=4))
            m = reps.evaluate(regular, w)
            assert abs(abs(np.linalg.det(m)) - 1.0) < 1e-8


class TestSymPower:
    def test_eigenlog_ladder(self, regular):
        # image of a hyperbolic element has evenly spaced log-eigenvalues
        lam2 = linalg.jordan_projection(reps.evaluate(regular, "a")).entries
        t = lam2[0] - lam2[1]
        for n in (4, 5, 6):
            rho = hl.sym_power(regular, n)
            lam = linalg.jordan_projection(reps.evaluate(rho, "a")).entries
            expect = np.array([(n - 1 - 2 * j) * t / 2 for j in range(n)])
            assert np.abs(lam - expect).max() < 1e-9

    def test_all_simple_roots_equal(self, regular4, regular):
        lam2 = linalg.jordan_projection(reps.evaluate(regular, "ab")).entries
        t = lam2[0] - lam2[1]
        lam = linalg.jordan_projection(reps.evaluate(regular4, "ab"))
        for k in (1, 2, 3):
            assert abs(linalg.simple_root(lam, k) - t) < 1e-9

    def test_n2_identity(self, regular):
        same = hl.sym_power(regular, 2)
        assert np.allclose(same.gens["a"], regular.gens["a"])

    def test_relator_preserved(self, regular4):
        assert regular4.relator_residual < 1e-8

    def test_multiplicative(self, regular, rng):
        m = reps.symmetric_power_matrix
        g, h = regular.gens["a"], regular.gens["b"]
        assert np.abs(m(g @ h, 5) - m(g, 5) @ m(h, 5)).max() < 1e-9


class TestTwist:
    def test_zero_twist_identity(self, regular4):
        tw = hl.twist_deform(regular4, "abAB", 0.0)
        for g in "abcd":
            scale = np.abs(regular4.gens[g]).max()
            assert np.abs(tw.gens[g] - regular4.gens[g]).max() / scale < 1e-11

    def test_relator_small_twist(self, regular4):
        # the twist conjugation amplifies the base relator defect by the
        # condition number of T, so the tight bound applies to small twists
        for s in (0.1, 0.3, -0.25):
            tw = hl.twist_deform(regular4, "abAB", s)
            assert tw.relator_residual < 1e-8

    def test_first_handle_unchanged(self, regular4):
        tw = hl.twist_deform(regular4, "abAB", 0.4)
        for w in ("a", "b", "ab", "aB"):
            lam0 = linalg.jordan_projection(reps.evaluate(regular4, w)).entries
            lam1 = linalg.jordan_projection(reps.evaluate(tw, w)).entries
            assert np.abs(lam0 - lam1).max() < 1e-8

    def test_crossing_word_changes(self, regular4):
        tw = hl.twist_deform(regular4, "abAB", 0.4)
        l0 = reps.word_spectrum(regular4, "ac").log_moduli
        l1 = reps.word_spectrum(tw, "ac").log_moduli
        assert abs(l0[0] - l1[0]) > 1e-3

    def test_semigroup(self, regular4):
        a = hl.twist_deform(hl.twist_deform(regular4, "abAB", 0.15), "abAB", 0.2)
        b = hl.twist_deform(regular4, "abAB", 0.35)
        for g in "cd":
            denom = max(1.0, np.abs(b.gens[g]).max())
            assert np.abs(a.gens[g] - b.gens[g]).max() / denom < 1e-8

    def test_integer_twist_exact_semigroup(self, regular4):
        a = hl.twist_deform(hl.twist_deform(regular4, "abAB", 1), "abAB", 1)
        b = hl.twist_deform(regular4, "abAB", 2)
        for w in ("c", "ac", "acd"):
            assert np.array_equal(reps.evaluate(a, w), reps.evaluate(b, w))

    def test_wrong_separating_word(self, regular4):
        with pytest.raises(ValueError):
            hl.twist_deform(regular4, "ab", 0.3)


def _identity_rep():
    p = Presentation(genus=2)
    return reps.Representation(p, 2, {g: np.eye(2) for g in "abcd"}, label="trivial")


def _reducible_rep(regular, stretched):
    p = regular.presentation
    mats = {}
    for g in p.generators:
        top = regular.gens[g]
        bot = stretched.gens[g]
        m = np.zeros((4, 4))
        m[:2, :2] = 3.0 * top  # shift the spectra apart so gaps stay open
        m[2:, 2:] = bot / 3.0
        mats[g] = m
    return reps.Representation(p, 4, mats, label="reducible")


class TestCertify:
    def test_fuchsian_locus_passes(self, regular4):
        report = reps.certify(regular4, L=3)
        assert report.loxodromic_fraction == 1.0
        assert report.relator_residual < 1e-8
        assert report.min_transversality > 1e-6
        assert report.passed

    def test_identity_rep_fails(self):
        report = reps.certify(_identity_rep(), L=2)
        assert report.loxodromic_fraction == 0.0
        assert not report.passed

    def test_reducible_fails(self, regular, stretched):
        report = reps.certify(_reducible_rep(regular, stretched), L=3)
        assert report.min_transversality < 1e-8
        assert not report.passed

    def test_small_twist_passes(self, regular4):
        report = reps.certify(hl.twist_deform(regular4, "abAB", 0.2), L=3)
        assert report.passed


class TestJson:
    def test_roundtrip(self, regular4, tmp_path):
        path = tmp_path / "r4.json"
        reps.save_representation(regular4, path)
        back = reps.load_representation(path)
        assert back.label == regular4.label
        assert back.relator_residual < 1e-8
        for w in ("a", "acd"):
            assert np.abs(reps.evaluate(back, w) - reps.evaluate(regular4, w)).max() < 1e-9

    def test_twist_lineage_roundtrip(self, regular4, tmp_path):
        tw = hl.twist_deform(regular4, "abAB", 2, label="tw2")
        path = tmp_path / "tw2.json"
        reps.save_representation(tw, path)
        back = reps.load_representation(path)
        v0, v1 = reps.evaluate(tw, "acd"), reps.evaluate(back, "acd")
        assert np.abs(v0 - v1).max() / np.abs(v0).max() < 1e-12

    def test_corrupt_rejected(self, regular, tmp_path):
        broken = {g: regular.gens[g].tolist() for g in "abcd"}
        broken["c"][0][0] += 0.5  # violates the relator structurally
        path = tmp_path / "bad.json"
        import json

        with open(path, "w") as fh:
            json.dump({"genus": 2, "n": 2, "generators": broken, "label": "bad"}, fh)
        with pytest.raises(CertificationFailure):
            reps.load_representation(path)


def test_word_eigenbasis_consistency(regular4):
    logmods, V = reps.word_eigenbasis(regular4, "abc")
    g = reps.evaluate(regular4, "abc")
    gv = g @ V
    cos = np.abs(np.sum(gv * V, axis=0)) / np.linalg.norm(gv, axis=0)
    assert np.all(cos > 1.0 - 1e-7)
    assert np.all(np.diff(logmods) < 0)
