"""Quantitative proximality and loxodromy diagnostics.

An element acts proximally on each exterior-power projective space; the
profile measures, per power, the chordal separation r between attractor
and repelling hyperplane and the smallest dyadic contraction scale eps
verified by sampling.  Verified scales are estimates, never certificates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import linalg, reps
from .errors import NotLoxodromic

DYADIC_GRID = [2.0 ** (-i) for i in range(1, 21)]
DEFAULT_SAMPLES = 160


@dataclass(frozen=True)
class PowerProfile:
    k: int
    r: float
    epsilon: float  # math.inf when no grid level verified


@dataclass(frozen=True)
class ProximalityReport:
    r: float
    epsilon: float
    per_k: tuple
    inverse_per_k: tuple
    biloxodromic: bool
    sample_count: int
    seed: int

    @property
    def loxodromic_verified(self):
        return math.isfinite(self.epsilon) and 0.0 < self.epsilon < self.r


class WedgeAction:
    """Projective action of an exterior power of a loxodromic element.

    Built from the eigenbasis of the base matrix: wedge eigenvectors are
    Pluecker images of eigenvector subsets and eigenvalue log-moduli add.
    Applying through the eigenbasis keeps arbitrary powers stable.
    """

    def __init__(self, base_log_moduli, base_eigenvectors, k: int, power: int = 1):
        V = np.asarray(base_eigenvectors, dtype=float)
        n = V.shape[0]
        base_logs = np.asarray(base_log_moduli, dtype=float)
        subsets = list(itertools.combinations(range(n), k))
        cols = []
        logmods = []
        for I in subsets:
            w = _wedge_of_columns(V[:, list(I)])
            cols.append(w / np.linalg.norm(w))
            logmods.append(base_logs[list(I)].sum())
        self.basis = np.stack(cols, axis=1)
        self.basis_inv = np.linalg.inv(self.basis)
        self.log_moduli = power * np.asarray(logmods)
        order = np.argsort(-self.log_moduli, kind="stable")
        self.basis = self.basis[:, order]
        self.basis_inv = self.basis_inv[order, :]
        self.log_moduli = self.log_moduli[order]
        self.k = k
        self.dim = len(subsets)

    @property
    def attractor(self):
        return self.basis[:, 0]

    @property
    def repeller(self):
        return linalg.Subspace.from_span(self.basis[:, 1:])

    def apply(self, z):
        """Projective action on unit vectors (columns or single vector)."""
        c = self.basis_inv @ z
        scale = np.exp(self.log_moduli - self.log_moduli[0])
        if z.ndim > 1:
            w = self.basis @ (c * scale[:, None])
            return w / np.linalg.norm(w, axis=0, keepdims=True)
        w = self.basis @ (c * scale)
        return w / np.linalg.norm(w)


def _orth_cols(A):
    q, _ = np.linalg.qr(A)
    return q


def _wedge_of_columns(F):
    n, k = F.shape
    subsets = list(itertools.combinations(range(n), k))
    return np.linalg.det(np.stack([F[list(I), :] for I in subsets]))


def _sphere_samples(dim, count, rng):
    z = rng.standard_normal((dim, count))
    return z / np.linalg.norm(z, axis=0, keepdims=True)


def _profile_one_power(action: WedgeAction, samples):
    """Separation and smallest verified dyadic contraction scale for one power."""
    a = action.attractor
    rep = action.repeller
    r = linalg.rp_distance_to_subspace(a, rep)
    images = action.apply(samples)
    d_rep = np.array(
        [linalg.rp_distance_to_subspace(samples[:, i], rep) for i in range(samples.shape[1])]
    )
    d_att = np.sqrt(np.maximum(2.0 - 2.0 * np.clip(np.abs(images.T @ a), 0.0, 1.0), 0.0))
    eps_ok = math.inf
    for eps in DYADIC_GRID:  # descending
        if eps >= r:
            continue
        outside = d_rep > eps
        if outside.sum() < 2:
            continue  # not enough admissible samples to verify this level
        if d_att[outside].max() > eps:
            break
        idx = np.nonzero(outside)[0]
        pts = samples[:, idx]
        ims = images[:, idx]
        quot_ok = True
        for i in range(len(idx) - 1):
            dz = linalg.rp_distance(pts[:, i], pts[:, i + 1])
            if dz < 1e-13:
                continue
            if linalg.rp_distance(ims[:, i], ims[:, i + 1]) / dz > eps:
                quot_ok = False
                break
        if not quot_ok:
            break
        eps_ok = eps
    return r, eps_ok


def proximality_profile(g, sample_count: int = DEFAULT_SAMPLES, seed: int = 0,
                        power: int = 1, eigenbasis=None) -> ProximalityReport:
    """(r, eps)-loxodromy profile of a matrix across all exterior powers.

    ``power`` profiles the action of g^power without forming the matrix
    power, through the eigenbasis.  The inverse profile is always included
    and feeds the biloxodromic flag.  ``eigenbasis`` optionally supplies
    precomputed (log_moduli, eigenvector matrix), e.g. from the stable
    word-product path for long words.
    """
    if eigenbasis is None:
        eig = linalg.eigendecompose(linalg.normalize_det(g))
        if not eig.loxodromic:
            raise NotLoxodromic("proximality profile requires a loxodromic element")
        logmods, V = eig.log_moduli - eig.log_moduli.mean(), eig.eigenvectors
    else:
        logmods, V = eigenbasis
    rng = np.random.default_rng(seed)
    n = V.shape[0]
    per_k, inv_per_k = [], []
    for k in range(1, n):
        fwd = WedgeAction(logmods, V, k, power)
        bwd = WedgeAction(logmods, V, k, -power)
        samples = _sphere_samples(fwd.dim, sample_count, rng)
        r_f, eps_f = _profile_one_power(fwd, samples)
        r_b, eps_b = _profile_one_power(bwd, samples)
        per_k.append(PowerProfile(k, r_f, eps_f))
        inv_per_k.append(PowerProfile(k, r_b, eps_b))
    r = min(p.r for p in per_k)
    epsilon = max(p.epsilon for p in per_k)
    inv_eps = max(p.epsilon for p in inv_per_k)
    inv_r = min(p.r for p in inv_per_k)
    bilox = (
        math.isfinite(epsilon) and math.isfinite(inv_eps)
        and epsilon < r and inv_eps < inv_r
    )
    return ProximalityReport(
        r=r,
        epsilon=epsilon,
        per_k=tuple(per_k),
        inverse_per_k=tuple(inv_per_k),
        biloxodromic=bool(bilox),
        sample_count=sample_count,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# eigenbasis metrics


class EigenbasisMetric:
    """Chordal metric of the inner product making the unit eigenvectors of a
    loxodromic element orthonormal."""

    def __init__(self, g):
        eig = linalg.eigendecompose(linalg.normalize_det(g))
        if not eig.loxodromic:
            raise NotLoxodromic("eigenbasis metric requires a loxodromic element")
        self.eigendata = eig
        self.basis = eig.eigenvectors
        self.basis_inv = np.linalg.inv(self.basis)

    def __call__(self, p, q):
        pp = self.basis_inv @ np.asarray(p, dtype=float)
        qq = self.basis_inv @ np.asarray(q, dtype=float)
        return linalg.rp_distance(pp / np.linalg.norm(pp), qq / np.linalg.norm(qq))


def eigenbasis_metric(g) -> EigenbasisMetric:
    return EigenbasisMetric(g)


def comparability(g, trials: int = 400, seed: int = 0) -> float:
    """Empirical multiplicative comparability of the eigenbasis metric with the
    reference chordal metric: max over sampled pairs of both ratio directions."""
    dg = EigenbasisMetric(g)
    n = dg.basis.shape[0]
    rng = np.random.default_rng(seed)
    pts = _sphere_samples(n, 2 * trials, rng)
    worst = 1.0
    for i in range(trials):
        p, q = pts[:, 2 * i], pts[:, 2 * i + 1]
        d0 = linalg.rp_distance(p, q)
        d1 = dg(p, q)
        if d0 < 1e-12 or d1 < 1e-12:
            continue
        worst = max(worst, d1 / d0, d0 / d1)
    return worst


# ---------------------------------------------------------------------------
# the Hilbert-length refinement experiment


@dataclass(frozen=True)
class RefinementRow:
    power: int
    hilbert: float
    epsilon: float
    bilipschitz: float


def refinement_experiment(rho, axis_word: str, powers, sample_count=DEFAULT_SAMPLES,
                          seed: int = 0):
    """Contraction scale and eigenbasis-metric bilipschitz bound along powers
    of one loxodromic element.

    Hilbert lengths use the power rule for eigenvalues (the spectrum of
    g^m is the m-th powers of the spectrum of g), which keeps large powers
    exact; the action of g^m is likewise applied through the eigenbasis.
    The expected trend is epsilon decreasing while the bilipschitz bound
    grows with the Hilbert length.
    """
    if any(m <= 0 for m in powers):
        raise ValueError("powers must be positive")
    base_logs, V = reps.word_eigenbasis(rho, axis_word)
    h1 = float(base_logs[0] - base_logs[-1])
    rng = np.random.default_rng(seed)
    n = V.shape[0]
    pts = _sphere_samples(n, 2 * sample_count, rng)
    rows = []
    for m in powers:
        prof = proximality_profile(None, sample_count, seed, power=m,
                                   eigenbasis=(base_logs, V))
        bilip = _diagonal_bilipschitz(m * base_logs, pts)
        rows.append(RefinementRow(int(m), m * h1, prof.epsilon, bilip))
    return rows


def _diagonal_bilipschitz(logmods, pts):
    """Sampled bilipschitz constant of the diagonal action in eigenbasis coordinates."""
    weights = np.exp(logmods - logmods.max())
    worst = 1.0
    count = pts.shape[1] // 2
    for i in range(count):
        p, q = pts[:, 2 * i], pts[:, 2 * i + 1]
        d0 = linalg.rp_distance(p, q)
        if d0 < 1e-12:
            continue
        gp, gq = weights * p, weights * q
        d1 = linalg.rp_distance(gp / np.linalg.norm(gp), gq / np.linalg.norm(gq))
        if d1 < 1e-300:
            continue
        worst = max(worst, d1 / d0, d0 / d1)
    return worst


# ---------------------------------------------------------------------------
# word-ball survey


def proximality_survey(rho, L: int, sample_count: int = 80, seed: int = 0):
    """Rows (word, length, H, per-k r and eps, biloxodromic) over the conjugacy ball."""
    from . import words as _words

    rows = []
    for w in _words.conjugacy_representatives(rho.presentation, L):
        try:
            logmods, V = reps.word_eigenbasis(rho, w)
        except NotLoxodromic:
            rows.append({"word": w, "length": len(w), "hilbert": "",
                         "biloxodromic": False, "per_k": []})
            continue
        prof = proximality_profile(None, sample_count, seed,
                                   eigenbasis=(logmods, V))
        rows.append({
            "word": w,
            "length": len(w),
            "hilbert": float(logmods[0] - logmods[-1]),
            "biloxodromic": prof.biloxodromic,
            "per_k": [(p.k, p.r, p.epsilon) for p in prof.per_k],
        })
    return rows
