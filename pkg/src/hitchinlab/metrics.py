"""Truncated eigenvalue-ratio metrics between representations.

Every estimate scans the inversion-closed ball of conjugacy-class
representatives up to word length L.  Sup-type values are lower bounds of
their untruncated counterparts and are monotone non-decreasing in L;
estimates carry L and the extremal witness word so they can be reproduced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import linalg, reps, words
from .errors import EmptyBall, UndefinedForSmallN

LENGTH_FLOOR = 1e-12


@dataclass(frozen=True)
class MetricEstimate:
    """One extremal-ratio estimate over a truncated word ball."""

    kind: str
    value: float
    L: int
    witness: str
    direction: str
    k: int | None = None
    skipped: int = 0

    def row(self):
        return [self.kind, self.k if self.k is not None else "", self.L,
                repr(self.value), self.witness, self.direction]


@dataclass(frozen=True)
class LengthSpectrum:
    """Simple-root lengths over the conjugacy ball of one representation.

    ``alpha`` has one row per word and one column per simple root; the
    spread column equals the row sum.  Log-moduli come from the batched QR
    cocycle over the letter factors, which stays accurate across the full
    dynamic range of long word products.
    """

    words: tuple
    alpha: np.ndarray
    spread: np.ndarray
    loxodromic: np.ndarray
    L: int


_SPECTRUM_CACHE: dict = {}


def length_spectrum(rho: reps.Representation, L: int, threads: int = 1) -> LengthSpectrum:
    key = (rho.fingerprint, L)
    if key in _SPECTRUM_CACHE:
        return _SPECTRUM_CACHE[key]
    word_list = tuple(words.conjugacy_representatives(rho.presentation, L))
    m, n = len(word_list), rho.n
    lam = np.empty((m, n))
    lox = np.zeros(m, dtype=bool)
    factor_lists = [rho.spectrum_factors(w) for w in word_list]
    by_length: dict = {}
    for i, fl in enumerate(factor_lists):
        by_length.setdefault(len(fl), []).append(i)
    for length, idx in by_length.items():
        factors = np.empty((len(idx), length, n, n))
        for row, i in enumerate(idx):
            for j, f in enumerate(factor_lists[i]):
                factors[row, j] = f
        lam_g, _, converged = _batched_spectra(factors, threads)
        lam_g = np.sort(lam_g, axis=1)[:, ::-1]
        gaps_ok = np.min(lam_g[:, :-1] - lam_g[:, 1:], axis=1) > linalg.LOXODROMY_TOL
        for row, i in enumerate(idx):
            lam[i] = lam_g[row]
            lox[i] = bool(converged[row] and gaps_ok[row])
    alpha = lam[:, :-1] - lam[:, 1:]
    spread = lam[:, 0] - lam[:, -1]
    spec = LengthSpectrum(word_list, alpha, spread, lox, L)
    _SPECTRUM_CACHE[key] = spec
    return spec


def _batched_spectra(factors, threads):
    if threads <= 1 or factors.shape[0] < 1024:
        return linalg.batched_cocycle_spectrum(factors)
    chunks = np.array_split(np.arange(factors.shape[0]), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda c: linalg.batched_cocycle_spectrum(factors[c]), chunks))
    lam = np.concatenate([p[0] for p in parts])
    Q = np.concatenate([p[1] for p in parts])
    conv = np.concatenate([p[2] for p in parts])
    return lam, Q, conv


# ---------------------------------------------------------------------------
# stretch metrics and coupling exponents


def _check_pair(rho_a, rho_b):
    if rho_a.presentation != rho_b.presentation:
        raise ValueError("representations have different presentations")
    if rho_a.n != rho_b.n:
        raise ValueError("representations have different ranks")


def stretch_metric(rho_a, rho_b, k: int, L: int, threads: int = 1) -> MetricEstimate:
    """Log of the largest ratio (length under b) / (length under a) of the
    k-th simple-root length over the conjugacy ball."""
    _check_pair(rho_a, rho_b)
    if not 1 <= k <= rho_a.n - 1:
        raise ValueError(f"k out of range: {k}")
    sa = length_spectrum(rho_a, L, threads)
    sb = length_spectrum(rho_b, L, threads)
    la = sa.alpha[:, k - 1]
    lb = sb.alpha[:, k - 1]
    mask = la >= LENGTH_FLOOR
    skipped = int((~mask).sum())
    if not mask.any():
        raise EmptyBall("empty-ball")
    ratios = lb[mask] / la[mask]
    i = int(np.argmax(ratios))
    idx = np.nonzero(mask)[0][i]
    return MetricEstimate(
        kind="stretch_k",
        value=float(np.log(ratios[i])),
        L=L,
        witness=sa.words[idx],
        direction=f"{rho_a.label}->{rho_b.label}",
        k=k,
        skipped=skipped,
    )


def coupling_exponent_k(rho_a, rho_b, k: int, L: int, threads: int = 1):
    """Predicted regularity exponent of the k-th Grassmannian coupling map
    and the matching distance; the distance equals the stretch estimate
    clipped at zero by construction."""
    est = stretch_metric(rho_a, rho_b, k, L, threads)
    exponent = min(1.0, math.exp(-est.value))
    distance = -math.log(exponent)
    return exponent, MetricEstimate(
        kind="stretch_k",
        value=distance,
        L=L,
        witness=est.witness,
        direction=est.direction,
        k=k,
        skipped=est.skipped,
    )


def flag_coupling_exponent(rho_a, rho_b, L: int, threads: int = 1) -> MetricEstimate:
    """Truncated exponent of the full-flag coupling map: the infimum over
    the ball of the ratio of smallest simple-root lengths, clipped at 1."""
    _check_pair(rho_a, rho_b)
    sa = length_spectrum(rho_a, L, threads)
    sb = length_spectrum(rho_b, L, threads)
    ma = sa.alpha.min(axis=1)
    mb = sb.alpha.min(axis=1)
    mask = mb >= LENGTH_FLOOR
    skipped = int((~mask).sum())
    if not mask.any():
        raise EmptyBall("empty-ball")
    ratios = ma[mask] / mb[mask]
    i = int(np.argmin(ratios))
    idx = np.nonzero(mask)[0][i]
    value = min(1.0, float(ratios[i]))
    return MetricEstimate(
        kind="flag",
        value=value,
        L=L,
        witness=sa.words[idx],
        direction=f"{rho_a.label}->{rho_b.label}",
        skipped=skipped,
    )


# ---------------------------------------------------------------------------
# bouquet coupling bounds


def bouquet_bounds(rho_a, rho_b, L: int, threads: int = 1):
    """Two-sided truncated bounds for the bouquet coupling distance.

    The lower bound is the largest simple-root stretch estimate; the upper
    bound adds the spread-over-first-root term and is clipped from below
    by the lower bound, which makes lower <= upper an enforced invariant.
    """
    _check_pair(rho_a, rho_b)
    if rho_a.n <= 3:
        raise UndefinedForSmallN("undefined-for-n<=3")
    per_k = [stretch_metric(rho_a, rho_b, k, L, threads) for k in range(1, rho_a.n)]
    best = max(range(len(per_k)), key=lambda i: per_k[i].value)
    lower = MetricEstimate(
        kind="bouquet_lower",
        value=per_k[best].value,
        L=L,
        witness=per_k[best].witness,
        direction=per_k[best].direction,
        k=best + 1,
        skipped=sum(e.skipped for e in per_k),
    )
    sa = length_spectrum(rho_a, L, threads)
    sb = length_spectrum(rho_b, L, threads)
    a1 = sa.alpha[:, 0]
    mask = a1 >= LENGTH_FLOOR
    if not mask.any():
        raise EmptyBall("empty-ball")
    ratios = sb.spread[mask] / a1[mask]
    i = int(np.argmax(ratios))
    idx = np.nonzero(mask)[0][i]
    extra = float(np.log(ratios[i]))
    if extra >= lower.value:
        upper_value, upper_witness, upper_k = extra, sa.words[idx], None
    else:
        upper_value, upper_witness, upper_k = lower.value, lower.witness, lower.k
    upper = MetricEstimate(
        kind="bouquet_upper",
        value=upper_value,
        L=L,
        witness=upper_witness,
        direction=lower.direction,
        k=upper_k,
        skipped=int((~mask).sum()),
    )
    return lower, upper


def bi_coupling_bounds(rho_a, rho_b, L: int, threads: int = 1):
    """Symmetrized bounds: the bi-regularity exponent is the worse of the two
    directional exponents, so both bounds are maxima over directions."""
    lo_ab, up_ab = bouquet_bounds(rho_a, rho_b, L, threads)
    lo_ba, up_ba = bouquet_bounds(rho_b, rho_a, L, threads)
    direction = f"{rho_a.label}<->{rho_b.label}"

    def sym(kind, e1, e2):
        e = e1 if e1.value >= e2.value else e2
        return MetricEstimate(kind=kind, value=e.value, L=L, witness=e.witness,
                              direction=direction, k=e.k,
                              skipped=e1.skipped + e2.skipped)

    return sym("bi_lower", lo_ab, lo_ba), sym("bi_upper", up_ab, up_ba)


# ---------------------------------------------------------------------------
# Hilbert-length properness diagnostic


@dataclass(frozen=True)
class HilbertScan:
    labels: tuple
    curves: tuple
    table: np.ndarray  # one row per representation, one column per curve

    def rows(self):
        for label, row in zip(self.labels, self.table):
            yield [label] + [repr(v) for v in row]


def hilbert_properness_scan(rho_family, curves) -> HilbertScan:
    """Hilbert lengths of chosen curves across a family of representations.

    Growth of the rows along a deformation ray is the desk-scale
    diagnostic for properness of the Hilbert length spectrum.
    """
    if not curves:
        raise ValueError("curves must be nonempty")
    table = np.empty((len(rho_family), len(curves)))
    for i, rho in enumerate(rho_family):
        for j, w in enumerate(curves):
            lam = reps.word_spectrum(rho, w).log_moduli
            table[i, j] = float(lam[0] - lam[-1])
    return HilbertScan(
        tuple(r.label for r in rho_family), tuple(curves), table
    )
