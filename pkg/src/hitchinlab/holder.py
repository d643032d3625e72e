"""Empirical regularity-exponent estimation for coupling maps.

The estimator targets the binding side of the Hoelder constraint
d_target <= C * d_source^alpha: the pair cloud is binned in log source
scale, per-bin maxima of the log target distance form the envelope, and a
least-squares line through the envelope gives the exponent (slope) and
constant (intercept).  Raw least squares over all pairs would estimate an
average modulus instead of the supremum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from . import limits, linalg, metrics, reps, words
from .errors import NarrowCloud

DEFAULT_BINS = 12
DEFAULT_MAX_SCALE_FRACTION = 0.3


@dataclass(frozen=True)
class PairCloud:
    """Matched positive distances (d_source, d_target) from sampled map pairs."""

    d_source: np.ndarray
    d_target: np.ndarray
    map_kind: str
    scale_cutoff: float
    dropped: int = 0

    def __post_init__(self):
        if len(self.d_source) != len(self.d_target):
            raise ValueError("mismatched cloud components")
        if np.any(self.d_source <= 0) or np.any(self.d_target <= 0):
            raise ValueError("cloud distances must be positive")

    def __len__(self):
        return len(self.d_source)

    @property
    def decades(self):
        return float(np.log10(self.d_source.max() / self.d_source.min()))


@dataclass(frozen=True)
class ExponentEstimate:
    alpha_hat: float
    constant_hat: float
    bin_count: int
    residual: float
    scale_range: tuple

    @property
    def saturated(self):
        return self.alpha_hat > 1.0


_POSITION_NOISE_FLOOR = 1e-11


def build_pair_cloud(map_samples, metric_source=None, metric_target=None,
                     max_scale=math.inf, map_kind="generic",
                     min_scale=_POSITION_NOISE_FLOOR) -> PairCloud:
    """Pair cloud over all sample pairs with source distance <= max_scale.

    ``map_samples`` is a list of (source_point, target_point).  With the
    default metrics the points must be unit vectors and distances are
    chordal, computed vectorized; callables are applied pairwise.
    Degenerate pairs (zero distance, or source distance below the position
    noise floor) are dropped and counted.
    """
    if len(map_samples) < 100:
        raise ValueError("need at least 100 samples")
    src = [s for s, _ in map_samples]
    tgt = [t for _, t in map_samples]
    ds = _pairwise(src, metric_source)
    dt = _pairwise(tgt, metric_target)
    iu = np.triu_indices(len(map_samples), k=1)
    ds, dt = ds[iu], dt[iu]
    keep = (ds > min_scale) & (dt > 0)
    dropped = int((~keep).sum())
    ds, dt = ds[keep], dt[keep]
    inside = ds <= max_scale
    return PairCloud(ds[inside], dt[inside], map_kind, float(max_scale), dropped)


def _pairwise(points, metric):
    if metric is None:
        return _pairwise_chordal(np.asarray(points, dtype=float))
    m = len(points)
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            out[i, j] = out[j, i] = metric(points[i], points[j])
    return out


def _pairwise_chordal(X, block=256):
    """Chordal distances min(|u-v|, |u+v|) by direct differences.

    The Gram-matrix shortcut sqrt(2 - 2|g|) cancels catastrophically below
    distances of about 1e-8, which would erase the deep zoom pairs; direct
    subtraction is exact down to the position noise.
    """
    m = X.shape[0]
    out = np.empty((m, m))
    for lo in range(0, m, block):
        hi = min(lo + block, m)
        diff = np.linalg.norm(X[lo:hi, None, :] - X[None, :, :], axis=2)
        summ = np.linalg.norm(X[lo:hi, None, :] + X[None, :, :], axis=2)
        out[lo:hi] = np.minimum(diff, summ)
    return out


def chordal_cloud(source_vectors, target_vectors, max_scale, map_kind):
    """Vectorized cloud for stacked unit vectors on both sides."""
    pairs = list(zip(np.asarray(source_vectors), np.asarray(target_vectors)))
    return build_pair_cloud(pairs, None, None, max_scale, map_kind)


def estimate_exponent(cloud: PairCloud, bins: int = DEFAULT_BINS) -> ExponentEstimate:
    """Envelope regression of the cloud in log-log coordinates.

    Requires at least 2 decades of source scale; the fitted line passes
    through the per-bin maxima of the log target distance, evaluated at
    the source scale of the maximizing pair.
    """
    if bins < 5:
        raise ValueError("bins must be at least 5")
    if cloud.decades < 2.0:
        raise NarrowCloud(f"narrow-cloud: {cloud.decades:.2f} decades")
    x = np.log(cloud.d_source)
    y = np.log(cloud.d_target)
    edges = np.linspace(x.min(), x.max(), bins + 1)
    idx = np.clip(np.digitize(x, edges) - 1, 0, bins - 1)
    env_x, env_y = [], []
    for b in range(bins):
        sel = idx == b
        if not sel.any():
            continue
        j = np.nonzero(sel)[0][int(np.argmax(y[sel]))]
        env_x.append(x[j])
        env_y.append(y[j])
    env_x = np.array(env_x)
    env_y = np.array(env_y)
    if len(env_x) < 2:
        raise NarrowCloud("narrow-cloud: too few occupied bins")
    A = np.stack([env_x, np.ones_like(env_x)], axis=1)
    (slope, intercept), res, *_ = np.linalg.lstsq(A, env_y, rcond=None)
    fitted = A @ np.array([slope, intercept])
    residual = float(np.sqrt(np.mean((fitted - env_y) ** 2)))
    return ExponentEstimate(
        alpha_hat=float(slope),
        constant_hat=float(math.exp(intercept)),
        bin_count=len(env_x),
        residual=residual,
        scale_range=(float(cloud.d_source.min()), float(cloud.d_source.max())),
    )


class HolderEnvelopeRegressor(BaseEstimator):
    """Scikit-learn estimator wrapping the envelope regression.

    fit(X) expects an (m, 2) array of positive (d_source, d_target) pairs;
    the learned attributes are ``alpha_`` (exponent) and ``constant_``.
    """

    def __init__(self, bins=DEFAULT_BINS, max_scale=None):
        self.bins = bins
        self.max_scale = max_scale

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != 2:
            raise ValueError("X must be an (m, 2) array of distance pairs")
        cutoff = self.max_scale if self.max_scale is not None else math.inf
        keep = (X[:, 0] > 0) & (X[:, 1] > 0)
        inside = keep & (X[:, 0] <= cutoff)
        cloud = PairCloud(
            X[inside, 0], X[inside, 1], "fit", float(cutoff),
            dropped=int((~keep).sum()),
        )
        est = estimate_exponent(cloud, bins=self.bins)
        self.alpha_ = est.alpha_hat
        self.constant_ = est.constant_hat
        self.estimate_ = est
        return self

    def predict(self, d_source):
        d = np.asarray(d_source, dtype=float)
        return self.constant_ * d ** self.alpha_


# ---------------------------------------------------------------------------
# coupling experiments


@dataclass(frozen=True)
class ExperimentReport:
    map_kind: str
    direction: str
    L: int
    bins: int
    sample_count: int
    pair_count: int
    alpha_hat: float
    predicted: dict
    estimate: ExponentEstimate
    cloud: PairCloud = field(repr=False)

    def to_dict(self):
        return {
            "map_kind": self.map_kind,
            "direction": self.direction,
            "L": self.L,
            "bins": self.bins,
            "sample_count": self.sample_count,
            "pair_count": self.pair_count,
            "alpha_hat": self.alpha_hat,
            "predicted": self.predicted,
            "residual": self.estimate.residual,
            "scale_range": list(self.estimate.scale_range),
        }


def _experiment_boundary_set(ref_rho, atlas, L, coarse, zoom_L, zoom_depth,
                             extra_zoom_words=()):
    """Coarse atlas plus contraction-orbit refinements.

    Zoom orbits cover every short conjugacy class and any supplied witness
    words, so the pair cloud contains the geometric sequences on which the
    regularity of coupling maps binds.  Witness families are staggered
    across conjugates (which share the length ratio but shift the orbit
    phase), so their binding corners cover all scales instead of landing
    one word-length apart.
    """
    zoom_words = list(words.conjugacy_representatives(ref_rho.presentation, zoom_L))
    for w in extra_zoom_words:
        root = words.primitive_root(words.cyclic_reduce(w))
        if not root:
            continue
        family = [root, words.invert_word(root)]
        family += [words.conjugate_word(u, root) for u in ref_rho.presentation.alphabet]
        for v in family:
            if v and v not in zoom_words:
                zoom_words.append(v)
    samples = _thin(atlas, coarse) + limits.zoom_samples(
        ref_rho, atlas, zoom_words, depth=zoom_depth
    )
    seen = set()
    out = []
    for s in samples:
        key = round(s.angle / 1e-12)
        if key in seen:
            continue
        seen.add(key)
        out.append(s)
    return out


def coupling_experiment(rho_a, rho_b, map_kind, L, bins=DEFAULT_BINS, ref_rho=None,
                        k=None, max_scale_fraction=DEFAULT_MAX_SCALE_FRACTION,
                        coarse_samples=600, atlas_angles=48, zoom_L=3,
                        zoom_depth=6, threads=1):
    """Measure the regularity exponent of a coupling map and compare it with
    its eigenvalue-ratio prediction.

    Maps are sampled FROM the b-objects TO the a-objects through the
    shared fixed-point atlas of ``ref_rho``, matching the direction
    convention of the distances: the (a, b) experiment predicts exponent
    exp(-stretch(a, b)).  Sampling combines a coarse atlas with
    contraction-orbit zoom clusters, including orbits of the extremal
    witness words of the eigenvalue-ratio scan itself.
    """
    if ref_rho is None:
        raise ValueError("a reference representation is required for the atlas")
    atlas = limits.boundary_atlas(ref_rho, min(L, 5))
    if map_kind == "circle":
        if rho_a.n != 2 or rho_b.n != 2:
            raise ValueError("circle experiments require n = 2")
        exponent, est = metrics.coupling_exponent_k(rho_a, rho_b, 1, L, threads)
        predicted = {"exponent": exponent, "distance": est.value}
        samples = _experiment_boundary_set(
            ref_rho, atlas, L, coarse_samples, zoom_L, zoom_depth,
            extra_zoom_words=[est.witness],
        )
        src = np.stack([limits.fixed_direction(rho_b, s) for s in samples])
        tgt = np.stack([limits.fixed_direction(rho_a, s) for s in samples])
    elif map_kind == "grassmann_k":
        if k is None:
            raise ValueError("grassmann_k experiments need k")
        exponent, est = metrics.coupling_exponent_k(rho_a, rho_b, k, L, threads)
        predicted = {"exponent": exponent, "distance": est.value}
        samples = _experiment_boundary_set(
            ref_rho, atlas, L, coarse_samples // 2, zoom_L, zoom_depth,
            extra_zoom_words=[est.witness],
        )
        fa, fb = limits.FlagCache(rho_a), limits.FlagCache(rho_b)
        src = np.stack([linalg.plucker(fb(s).entry(k)) for s in samples])
        tgt = np.stack([linalg.plucker(fa(s).entry(k)) for s in samples])
    elif map_kind == "bouquet":
        if rho_a.n <= 3:
            raise ValueError("bouquet experiments require n > 3")
        lo_ab, up_ab = metrics.bouquet_bounds(rho_a, rho_b, L, threads)
        predicted = {
            "exponent_upper": math.exp(-lo_ab.value),
            "exponent_lower": math.exp(-up_ab.value),
            "distance_lower": lo_ab.value,
            "distance_upper": up_ab.value,
        }
        pairs = _bouquet_parameter_pairs(
            ref_rho, atlas, atlas_angles, zoom_depth,
            witnesses=[lo_ab.witness, up_ab.witness],
        )
        fa, fb = limits.FlagCache(rho_a), limits.FlagCache(rho_b)
        samples, src, tgt = [], [], []
        for x, y in pairs:
            got_a = {s.k: s for s in
                     limits.bouquet_samples_for_pairs(rho_a, [(x, y)], flags=fa)}
            got_b = {s.k: s for s in
                     limits.bouquet_samples_for_pairs(rho_b, [(x, y)], flags=fb)}
            for kk in sorted(got_a.keys() & got_b.keys()):
                samples.append(got_b[kk])
                src.append(got_b[kk].point)
                tgt.append(got_a[kk].point)
        src = np.stack(src)
        tgt = np.stack(tgt)
    else:
        raise ValueError(f"unknown map kind {map_kind!r}")

    diam = _diameter(src)
    cloud = chordal_cloud(src, tgt, max_scale_fraction * diam, map_kind)
    est = estimate_exponent(cloud, bins=bins)
    return ExperimentReport(
        map_kind=map_kind,
        direction=f"{rho_a.label}->{rho_b.label}",
        L=L,
        bins=bins,
        sample_count=len(samples),
        pair_count=len(cloud),
        alpha_hat=est.alpha_hat,
        predicted=predicted,
        estimate=est,
        cloud=cloud,
    )


def _bouquet_parameter_pairs(ref_rho, atlas, atlas_angles, zoom_depth, witnesses):
    """Parameter pairs for bouquet sampling: a coarse grid of ordered pairs
    with its glued diagonal, plus same-orbit zoom pairs whose bouquet
    points contract toward the singular curve."""
    grid = _thin(atlas, atlas_angles)
    pairs = [(x, x) for x in grid]
    pairs += [(x, y) for x in grid for y in grid if x is not y]
    zoom_words = list(words.conjugacy_representatives(ref_rho.presentation, 2))
    for w in witnesses:
        root = words.primitive_root(words.cyclic_reduce(w))
        if not root:
            continue
        family = [root, words.invert_word(root)]
        family += [words.conjugate_word(u, root) for u in ref_rho.presentation.alphabet]
        for v in family:
            if v and v not in zoom_words:
                zoom_words.append(v)
    zoomed = limits.zoom_samples(ref_rho, atlas, zoom_words, depth=zoom_depth)
    by_prefix = {}
    for s in zoomed:
        by_prefix.setdefault(s.prefix, []).append(s)
    for group in by_prefix.values():
        pairs += [(group[i], group[j])
                  for i in range(len(group)) for j in range(i + 1, len(group))]
        pairs.append((group[0], group[0]))
    return pairs


def _thin(samples, limit):
    if len(samples) <= limit:
        return list(samples)
    stride = len(samples) / limit
    return [samples[int(i * stride)] for i in range(limit)]


def _diameter(points):
    return float(_pairwise_chordal(np.asarray(points, dtype=float)).max())
