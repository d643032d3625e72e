"""Sampled boundary points, limit maps, torus bouquets and sliding maps.

The circle boundary of the group is parametrized once and for all through
a designated reference Fuchsian representation: each sample is the
attracting fixed point of a hyperbolic element, tagged by the witness
word.  All representations of the same presentation share this atlas, and
the group acts on samples by conjugating witness words.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg, reps, words
from .errors import NonTransverse, NotLoxodromic
from .linalg import Flag, Subspace

ANGLE_DEDUP_TOL = 1e-9


@dataclass(frozen=True)
class BoundarySample:
    """Boundary point: attracting fixed point of the reference image of ``word``.

    ``angle`` is the position on the real projective line of the reference
    representation, doubled to sweep the full circle, in [0, 2*pi).

    Samples produced by the group action keep their recipe word = prefix *
    base * prefix^-1; by equivariance the fixed point of the image equals
    (image of prefix) applied to the base fixed point, which is the stable
    way to evaluate limit data of deeply conjugated witnesses under any
    representation.
    """

    word: str
    angle: float
    prefix: str = ""
    base: str = ""
    base_angle: float = math.nan

    @property
    def base_word(self):
        return self.base or self.word

    @property
    def base_parameter(self):
        return self.angle if math.isnan(self.base_angle) else self.base_angle


@dataclass(frozen=True)
class LimitMapSample:
    boundary: BoundarySample
    flag: Flag


@dataclass(frozen=True)
class BouquetSample:
    """Point of the torus bouquet with its boundary parameters.

    For x != y the point is the line (flag entry k at x) ∩ (flag entry
    n+1-k at y); on the diagonal it is the first flag entry at x.
    """

    k: int
    x: BoundarySample
    y: BoundarySample
    point: np.ndarray

    @property
    def diagonal(self):
        return abs(_angle_gap(self.x.angle, self.y.angle)) < ANGLE_DEDUP_TOL


def _angle_gap(t1, t2):
    d = (t1 - t2) % (2.0 * math.pi)
    return min(d, 2.0 * math.pi - d)


def fixed_direction(rho, sample_or_word) -> np.ndarray:
    """Unit vector spanning the attracting fixed line of a word image.

    For recipe samples the prefix image is applied to the base fixed
    point (equivariance), which stays accurate at any conjugation depth.
    """
    if isinstance(sample_or_word, BoundarySample):
        base, prefix = sample_or_word.base_word, sample_or_word.prefix
    else:
        base, prefix = sample_or_word, ""
    eig = linalg.eigendecompose(reps.evaluate(rho, base))
    if not eig.loxodromic:
        raise NotLoxodromic(f"word {base!r} is not loxodromic")
    v = eig.eigenvectors[:, 0]
    if prefix:
        v = reps.apply_word(rho, prefix, v)
    i = int(np.argmax(np.abs(v)))
    return v if v[i] >= 0 else -v


def _direction_angle(v):
    return float((2.0 * math.atan2(v[1], v[0])) % (2.0 * math.pi))


def circle_parameter(rho2: reps.Representation, word: str):
    """Attracting fixed direction of a hyperbolic element on the projective line."""
    return _direction_angle(fixed_direction(rho2, word))


def boundary_atlas(ref_rho: reps.Representation, L: int):
    """Fixed-point atlas of the boundary circle up to word length L.

    One sample per conjugacy representative with hyperbolic image, sorted
    by angle and deduplicated at angular tolerance 1e-9 (words sharing an
    axis keep the first witness in enumeration order).
    """
    if ref_rho.n != 2:
        raise ValueError("the boundary atlas is built from a rank-one reference")
    samples = []
    for w in words.conjugacy_representatives(ref_rho.presentation, L):
        try:
            theta = circle_parameter(ref_rho, w)
        except NotLoxodromic:
            continue
        samples.append(BoundarySample(w, theta))
    samples.sort(key=lambda s: (s.angle, len(s.word), s.word))
    out = []
    for s in samples:
        if out and _angle_gap(out[-1].angle, s.angle) < ANGLE_DEDUP_TOL:
            if (len(s.word), s.word) < (len(out[-1].word), out[-1].word):
                out[-1] = s  # prefer the shortest witness on a shared axis
            continue
        out.append(s)
    if len(out) > 1 and _angle_gap(out[0].angle, out[-1].angle) < ANGLE_DEDUP_TOL:
        if (len(out[-1].word), out[-1].word) < (len(out[0].word), out[0].word):
            out[0] = out[-1]
        out.pop()
    return out


def act_on_sample(ref_rho: reps.Representation, gamma: str, s: BoundarySample):
    """Group action on boundary samples by conjugation of witness words."""
    w = words.conjugate_word(gamma, s.word)
    prefix = words.reduce_word(gamma + s.prefix)
    probe = BoundarySample(w, 0.0, prefix=prefix, base=s.base_word,
                           base_angle=s.base_parameter)
    return BoundarySample(w, _direction_angle(fixed_direction(ref_rho, probe)),
                          prefix=prefix, base=s.base_word,
                          base_angle=s.base_parameter)


def limit_flag(rho: reps.Representation, w: str) -> Flag:
    """Attracting flag of the image of ``w``: k-th entry spans the top-k
    eigenvectors.  Computed by the QR cocycle over the letter factors, which
    is reliable even when the word product is too ill-conditioned for a
    direct eigendecomposition."""
    spec = reps.word_spectrum(rho, w)
    if not spec.loxodromic:
        raise NotLoxodromic(f"image of {w!r} is not loxodromic")
    return Flag.from_matrix(spec.flag_basis)


class FlagCache:
    """Memoized limit flags of one representation, keyed by witness word.

    Recipe samples (conjugated witnesses) map their base flag forward by
    the prefix image and re-orthonormalize, which is stable at any depth.
    """

    def __init__(self, rho):
        self.rho = rho
        self._flags = {}

    def __call__(self, sample: BoundarySample) -> Flag:
        w = sample.word
        if w not in self._flags:
            if sample.prefix:
                base = self(BoundarySample(sample.base_word, 0.0))
                q = reps.apply_word_to_frame(self.rho, sample.prefix,
                                             base.subspaces[-1].frame)
                full = np.hstack([q, linalg.orth_complement(q)])
                self._flags[w] = Flag.from_matrix(full)
            else:
                self._flags[w] = limit_flag(self.rho, w)
        return self._flags[w]


def bouquet_point(rho: reps.Representation, x: BoundarySample, y: BoundarySample,
                  k: int, flags: FlagCache | None = None) -> BouquetSample:
    """Sample of the torus bouquet at boundary parameters (x, y) and index k.

    A non-transverse intersection signals a hyperconvexity failure and is
    raised with the offending singular value.
    """
    n = rho.n
    if n <= 3:
        raise ValueError("bouquet points require n > 3")
    if not 2 <= k <= n // 2:
        raise ValueError(f"k must lie in 2..{n // 2}")
    flags = flags or FlagCache(rho)
    if _angle_gap(x.angle, y.angle) < ANGLE_DEDUP_TOL:
        point = flags(x).entry(1).frame[:, 0]
        return BouquetSample(k, x, x, _sign_fix(point))
    fx, fy = flags(x), flags(y)
    line = linalg.intersect(fx.entry(k), fy.entry(n + 1 - k))
    return BouquetSample(k, x, y, _sign_fix(line.frame[:, 0]))


def _sign_fix(v):
    i = int(np.argmax(np.abs(v)))
    return v if v[i] >= 0 else -v


def sample_bouquet(rho, atlas, k_values=None, flags=None):
    """Bouquet samples over all ordered distinct pairs of atlas points plus the
    glued diagonal (one sample per atlas point, shared across k)."""
    n = rho.n
    k_values = list(k_values or range(2, n // 2 + 1))
    pairs = [(x, x) for x in atlas]
    pairs += [(x, y) for x in atlas for y in atlas if x is not y]
    return bouquet_samples_for_pairs(rho, pairs, k_values, flags)


def bouquet_samples_for_pairs(rho, pairs, k_values=None, flags=None,
                              skip_degenerate=True):
    """Bouquet samples for an explicit list of boundary-parameter pairs.

    Pairs whose members share a conjugation prefix are computed by pushing
    the base bouquet point forward with the prefix image (equivariance);
    the direct intersection degenerates as the parameters approach the
    diagonal, exactly where these deep pairs live.  Diagonal pairs are
    emitted once (the gluing identifies them across k).
    """
    n = rho.n
    k_values = list(k_values or range(2, n // 2 + 1))
    flags = flags or FlagCache(rho)
    base_cache = {}
    out = []
    for x, y in pairs:
        diagonal = _angle_gap(x.angle, y.angle) < ANGLE_DEDUP_TOL
        if diagonal:
            out.append(bouquet_point(rho, x, x, k_values[0], flags))
            continue
        for k in k_values:
            try:
                if x.prefix and x.prefix == y.prefix:
                    key = (x.base_word, y.base_word, k)
                    if key not in base_cache:
                        xb = BoundarySample(x.base_word, x.base_parameter)
                        yb = BoundarySample(y.base_word, y.base_parameter)
                        base_cache[key] = bouquet_point(rho, xb, yb, k, flags)
                    v = reps.evaluate(rho, x.prefix) @ base_cache[key].point
                    out.append(BouquetSample(k, x, y, _sign_fix(v / np.linalg.norm(v))))
                else:
                    out.append(bouquet_point(rho, x, y, k, flags))
            except NonTransverse:
                if not skip_degenerate:
                    raise
    return out


def zoom_samples(ref_rho, atlas, zoom_words, depth: int = 8,
                 floor_scale: float = 1e-12):
    """Geometrically refined boundary samples along contraction orbits.

    For each word g in ``zoom_words`` (taken to its primitive root), base
    points well separated from the fixed points of g are pushed by g, g^2,
    ..., producing sample pairs whose mutual distances shrink geometrically
    toward the attracting point.  Regularity-binding behavior of coupling
    maps lives on exactly these clusters, which a uniform atlas misses.
    The base separations are geometrically spread so consecutive orbit
    depths overlap in scale and the pair cloud covers scales continuously.
    """
    base_offsets = tuple(0.45 / 1.8 ** i for i in range(12))
    out = []
    seen_roots = set()
    for g in zoom_words:
        g = words.primitive_root(g)
        if g in seen_roots:
            continue
        seen_roots.add(g)
        try:
            plus = circle_parameter(ref_rho, g)
            minus = circle_parameter(ref_rho, words.invert_word(g))
        except NotLoxodromic:
            continue
        lam = reps.word_spectrum(ref_rho, g).log_moduli
        rate = 2.0 * float(lam[0] - lam[1])  # pair contraction per application
        base_angle = _far_angle(plus, minus)
        # base points at geometrically spread separations fill the scale
        # gaps between consecutive depths of the orbit
        bases = [_nearest_sample(atlas, base_angle)]
        for off in base_offsets:
            cand = _nearest_sample(atlas, base_angle + off)
            if all(cand is not b for b in bases):
                bases.append(cand)
        prefix = ""
        for m in range(1, depth + 1):
            if math.exp(-m * rate) < floor_scale:
                break
            prefix = prefix + g
            for b in bases:
                out.append(act_on_sample(ref_rho, prefix, b))
    return out


def _far_angle(a1, a2):
    """Angle on the larger arc between two angles, at its midpoint."""
    lo, hi = sorted(((a1 % (2 * math.pi)), (a2 % (2 * math.pi))))
    inner, outer = hi - lo, 2 * math.pi - (hi - lo)
    if inner >= outer:
        return (lo + inner / 2.0) % (2 * math.pi)
    return (hi + outer / 2.0) % (2 * math.pi)


def _nearest_sample(atlas, angle):
    angle = angle % (2 * math.pi)
    return min(atlas, key=lambda s: _angle_gap(s.angle, angle))


# ---------------------------------------------------------------------------
# hyperconvexity survey


@dataclass(frozen=True)
class SurveyReport:
    trials: int
    min_singular: float
    median_singular: float

    def summary(self):
        return (
            f"hyperconvexity survey: {self.trials} tuples, "
            f"min sigma={self.min_singular:.3e}, median={self.median_singular:.3e}"
        )


def hyperconvexity_survey(rho, samples, trials: int = 200, seed: int = 0):
    """Directness survey of random flag-entry sums at distinct boundary points.

    Draws tuples (k_1..k_j, x_1..x_j) with k_i >= 1, sum k_i <= n and
    distinct x_i, and records the smallest singular value of the stacked
    orthonormal frames; values near zero witness hyperconvexity failure.
    """
    if len(samples) < 3:
        raise ValueError("need at least 3 boundary samples")
    rng = np.random.default_rng(seed)
    flags = FlagCache(rho)
    usable = []
    for s in samples:
        try:
            flags(s)
        except NotLoxodromic:
            continue  # non-loxodromic witnesses carry no flag to test
        usable.append(s)
    if len(usable) < 3:
        raise ValueError("fewer than 3 samples have loxodromic witnesses")
    n = rho.n
    sigmas = []
    for _ in range(trials):
        j = int(rng.integers(2, min(n, len(usable)) + 1))
        ks = _random_composition(rng, n, j)
        idx = rng.choice(len(usable), size=j, replace=False)
        stacked = np.hstack(
            [flags(usable[int(i)]).entry(k).frame for i, k in zip(idx, ks)]
        )
        sigmas.append(float(np.linalg.svd(stacked, compute_uv=False)[-1]))
    sigmas = np.array(sigmas)
    return SurveyReport(len(sigmas), float(sigmas.min()), float(np.median(sigmas)))


def _random_composition(rng, n, j):
    while True:
        ks = [int(rng.integers(1, n)) for _ in range(j)]
        if sum(ks) <= n:
            return ks


# ---------------------------------------------------------------------------
# neighbor densification on the circle

_DENSIFY_MAX_POWER = 24


def neighbor_sample(ref_rho, base: BoundarySample, h: float, atlas=None,
                    pool_L: int = 2):
    """Boundary sample at angular distance as close to ``h`` as available.

    Nearest-angle lookup over the atlas, densified by fixed points of
    w^m u w^-m for the primitive root w of the base witness: applying w
    compresses candidates toward the base point geometrically, so target
    scales below the atlas resolution stay reachable when the root is
    short.  Candidates are recipe samples, so their limit data stays
    computable at any depth.  Raises when no candidate lands within a
    factor 3 of the target scale.
    """
    root = words.primitive_root(base.base_word)
    pool = list(atlas or ())
    for u in words.conjugacy_representatives(ref_rho.presentation, pool_L):
        try:
            pool.append(BoundarySample(u, circle_parameter(ref_rho, u)))
        except NotLoxodromic:
            continue
    best = None
    best_err = math.inf
    prefix = base.prefix
    for m in range(_DENSIFY_MAX_POWER):
        found_in_range = False
        for u in pool:
            cand = act_on_sample(ref_rho, prefix, u) if prefix else u
            d = _angle_gap(cand.angle, base.angle)
            if d < 1e-13:
                continue
            err = abs(math.log(d / h))
            if err < best_err:
                best_err = err
                best = cand
            if d > h:
                found_in_range = True
        if not found_in_range and best_err < math.log(1.5):
            break
        prefix = words.reduce_word(prefix + root)
    if best is None or best_err > math.log(3.0):
        raise ValueError(f"no neighbor sample found near scale {h:g}")
    return best


# ---------------------------------------------------------------------------
# tangent-space check


def _chart_coords(q, p):
    """Affine-chart coordinates of the projective point q in the orthogonal
    complement chart at the unit base point p."""
    t = float(q @ p)
    if abs(t) < 1e-12:
        raise ValueError("point left the affine chart")
    w = q / t
    return w - p * (w @ p)


def predicted_tangent_plane(rho, x, y, k, flags=None):
    """Two-plane predicted for the bouquet torus at (x, y, k), in the chart at the point.

    The ambient prediction is the sum of the two neighboring intersection
    lines, one step up in each flag index, with the convention that flag
    entry n is the whole space.
    """
    n = rho.n
    flags = flags or FlagCache(rho)
    fx, fy = flags(x), flags(y)
    p = bouquet_point(rho, x, y, k, flags).point
    first = linalg.intersect(fx.entry(k), fy.entry(n - k + 2))
    second = linalg.intersect(fx.entry(k + 1), fy.entry(n - k + 1))
    ambient = np.hstack([first.frame, second.frame])
    # chart at p: subtract the p-component of each spanning vector; the
    # columns are rank-deficient (both subspaces contain p), so take the
    # two dominant singular directions of the projected span
    chart_dirs = ambient - np.outer(p, p @ ambient)
    u, s, _ = np.linalg.svd(chart_dirs, full_matrices=False)
    if s[1] < 1e-10 * s[0]:
        raise ValueError("predicted tangent plane is degenerate")
    return p, u[:, :2]


def tangent_check(rho, x, y, k, h, ref_rho, flags=None, atlas=None):
    """Angle between the predicted tangent plane and finite-difference secants.

    Returns the largest principal angle (radians) between the predicted
    two-plane and the span of the secants toward neighbors of x and y at
    circle-parameter distance about h.
    """
    flags = flags or FlagCache(rho)
    p, predicted = predicted_tangent_plane(rho, x, y, k, flags)
    xh = neighbor_sample(ref_rho, x, h, atlas)
    yh = neighbor_sample(ref_rho, y, h, atlas)
    base = _chart_coords(bouquet_point(rho, x, y, k, flags).point, p)
    s1 = _chart_coords(bouquet_point(rho, xh, y, k, flags).point, p) - base
    s2 = _chart_coords(bouquet_point(rho, x, yh, k, flags).point, p) - base
    secants = np.stack([s1 / np.linalg.norm(s1), s2 / np.linalg.norm(s2)], axis=1)
    return linalg.largest_principal_angle(predicted, secants)


# ---------------------------------------------------------------------------
# sliding maps


def sliding_map(rho, x1, x2, family: str, k: int, p: BouquetSample,
                tol: float = 1e-7, flags=None) -> BouquetSample:
    """Slide a bouquet point from the leaf at x1 to the leaf at x2.

    ``family`` chooses between the two leaf foliations of the k-th torus:
    "G" fixes the first boundary parameter along leaves, "H" the second.
    The two exchange cases map through the singular curve.
    """
    if family not in ("G", "H"):
        raise ValueError("family must be 'G' or 'H'")
    flags = flags or FlagCache(rho)
    _check_on_leaf(rho, x1, family, k, p, tol, flags)
    same = lambda s, t: _angle_gap(s.angle, t.angle) < ANGLE_DEDUP_TOL
    if same(x1, x2):
        return p
    if family == "G":
        if p.diagonal:  # the singular point of the source leaf
            return bouquet_point(rho, x2, x1, k, flags)
        y = p.y
        if same(y, x2):
            return bouquet_point(rho, x2, x2, k, flags)
        return bouquet_point(rho, x2, y, k, flags)
    else:
        if p.diagonal:
            return bouquet_point(rho, x1, x2, k, flags)
        y = p.x
        if same(y, x2):
            return bouquet_point(rho, x2, x2, k, flags)
        return bouquet_point(rho, y, x2, k, flags)


def _check_on_leaf(rho, x1, family, k, p, tol, flags):
    if p.diagonal:
        anchor = p.x
    else:
        anchor = p.x if family == "G" else p.y
    if _angle_gap(anchor.angle, x1.angle) >= ANGLE_DEDUP_TOL:
        raise ValueError("point is not on the source leaf")
    recomputed = bouquet_point(rho, p.x, p.y, k, flags).point
    if linalg.rp_distance(recomputed, p.point) > tol:
        raise ValueError("point does not match its boundary parameters")
