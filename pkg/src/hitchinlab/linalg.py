"""Dense real linear algebra at small dimension: spectra, exterior powers,
subspaces, flags and chordal metrics on projective spaces and Grassmannians.

Conventions used throughout the package:

* group elements are numpy arrays scaled so that ``|det| = 1`` (this kills
  the projective scalar ambiguity once and for all),
* subspaces carry orthonormal frames (columns),
* all metrics are chordal: ``d([u],[v]) = min(|u - v|, |u + v|)`` on unit
  representatives, pushed through the Pluecker embedding for Grassmannians.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EigenFailure, NonInvertible, NonTransverse

ORTHONORMAL_TOL = 1e-10
NESTING_TOL = 1e-8
LOXODROMY_TOL = 1e-9
TRANSVERSALITY_TOL = 1e-8


# ---------------------------------------------------------------------------
# matrices


def normalize_det(g):
    """Scale a square matrix so that |det| = 1.

    |det| is accumulated from singular values in log scale; the cofactor
    determinant formula cancels catastrophically for graded matrices whose
    true determinant is tiny relative to the entry products.
    """
    g = np.asarray(g, dtype=float)
    scale = np.abs(g).max()
    if not np.isfinite(scale) or scale == 0.0:
        raise NonInvertible("non-invertible")
    h = g / scale
    sv = np.linalg.svd(h, compute_uv=False)
    if sv.min() <= 0.0 or not np.all(np.isfinite(sv)):
        raise NonInvertible("non-invertible")
    return h * math.exp(-np.log(sv).mean())


@dataclass(frozen=True)
class EigenData:
    """Spectral data of a real matrix, sorted by non-increasing modulus.

    ``eigenvectors`` has unit columns aligned with ``eigenvalues``; the
    columns are real arrays exactly when ``loxodromic`` is true.
    ``min_gap`` is the smallest gap between consecutive log-moduli.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    loxodromic: bool
    min_gap: float

    @property
    def n(self):
        return len(self.eigenvalues)

    @property
    def log_moduli(self):
        return np.log(np.abs(self.eigenvalues))


def eigendecompose(g, tol=LOXODROMY_TOL):
    """Eigendecomposition with loxodromy detection.

    The element is flagged loxodromic iff all log-modulus gaps exceed
    ``tol`` and all imaginary parts are below ``tol`` relative to the
    eigenvalue modulus (the absolute imaginary noise of the solver scales
    with the matrix norm); in that case the eigenvector columns are
    realified and sign-normalized.
    """
    g = np.asarray(g, dtype=float)
    try:
        vals, vecs = np.linalg.eig(g)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure("eigen-failure") from exc
    mods = np.abs(vals)
    if mods.min() <= 1e-300 * max(mods.max(), 1.0):
        raise NonInvertible("non-invertible")
    order = np.argsort(-mods, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    logmods = np.log(np.abs(vals))
    min_gap = float(np.min(logmods[:-1] - logmods[1:])) if len(vals) > 1 else math.inf
    imag_ok = bool(np.all(np.abs(vals.imag) < tol * np.abs(vals)))
    loxodromic = bool(min_gap > tol and imag_ok)
    if loxodromic:
        vecs = _realify_columns(vecs)
        vals = vals.real.astype(complex)
    return EigenData(vals, vecs, loxodromic, min_gap)


def _realify_columns(vecs):
    """Rotate complex phases away and fix signs; columns stay unit."""
    out = np.empty(vecs.shape, dtype=float)
    for j in range(vecs.shape[1]):
        v = vecs[:, j]
        i = int(np.argmax(np.abs(v)))
        phase = v[i] / abs(v[i])
        w = (v / phase).real
        out[:, j] = w / np.linalg.norm(w)
    return out


# ---------------------------------------------------------------------------
# Weyl chamber data


@dataclass(frozen=True)
class WeylVector:
    """Sorted (non-increasing) log-moduli of eigenvalues, sum zero."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", e)
        if np.any(e[:-1] - e[1:] < -1e-9):
            raise ValueError("Weyl vector entries must be non-increasing")
        if abs(e.sum()) > 1e-10:
            raise ValueError("Weyl vector entries must sum to zero")

    @property
    def n(self):
        return len(self.entries)


def jordan_projection(g):
    """Sorted log-moduli of the eigenvalues of the |det|=1 normalization."""
    eig = eigendecompose(normalize_det(g))
    lam = eig.log_moduli
    return WeylVector(lam - lam.mean())


def simple_root(lam: WeylVector, k: int) -> float:
    """k-th simple root evaluated on a Weyl vector: entry k minus entry k+1 (1-based)."""
    if not 1 <= k <= lam.n - 1:
        raise ValueError(f"k out of range: {k} (n={lam.n})")
    return float(lam.entries[k - 1] - lam.entries[k])


def hilbert_length(lam: WeylVector) -> float:
    """Top-to-bottom spread: entry 1 minus entry n; equals the sum of simple roots."""
    return float(lam.entries[0] - lam.entries[-1])


def all_simple_roots(lam: WeylVector):
    return lam.entries[:-1] - lam.entries[1:]


# ---------------------------------------------------------------------------
# exterior powers and Pluecker coordinates


def _lex_subsets(n, k):
    return list(itertools.combinations(range(n), k))


def exterior_power(g, k):
    """Compound matrix of g acting on the k-th wedge, lexicographic basis."""
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    if not 1 <= k <= n - 1:
        raise ValueError(f"k out of range: {k} (n={n})")
    if k == 1:
        return g.copy()
    subsets = _lex_subsets(n, k)
    N = len(subsets)
    minors = np.empty((N, N, k, k))
    for i, I in enumerate(subsets):
        gI = g[list(I), :]
        for j, J in enumerate(subsets):
            minors[i, j] = gI[:, list(J)]
    return np.linalg.det(minors)


def plucker(V: "Subspace"):
    """Unit Pluecker vector of a subspace: k x k minors of its frame, sign-fixed."""
    F = V.frame
    n, k = F.shape
    subsets = _lex_subsets(n, k)
    mat = np.stack([F[list(I), :] for I in subsets])
    w = np.linalg.det(mat)
    w = w / np.linalg.norm(w)
    i = int(np.argmax(np.abs(w)))
    if w[i] < 0:
        w = -w
    return w


# ---------------------------------------------------------------------------
# subspaces and flags


@dataclass(frozen=True)
class Subspace:
    """A point of the Grassmannian, stored as an n x k orthonormal frame."""

    frame: np.ndarray

    def __post_init__(self):
        F = np.asarray(self.frame, dtype=float)
        if F.ndim == 1:
            F = F[:, None]
        object.__setattr__(self, "frame", F)
        n, k = F.shape
        if not 1 <= k <= n:
            raise ValueError(f"bad subspace dimensions {k} in ambient {n}")
        gram = F.T @ F
        if np.abs(gram - np.eye(k)).max() > ORTHONORMAL_TOL:
            raise ValueError("frame columns are not orthonormal")

    @property
    def ambient_dim(self):
        return self.frame.shape[0]

    @property
    def dim(self):
        return self.frame.shape[1]

    @classmethod
    def from_span(cls, vectors):
        """Orthonormalize a spanning set (columns); rank must equal column count."""
        A = np.asarray(vectors, dtype=float)
        if A.ndim == 1:
            A = A[:, None]
        q, r = np.linalg.qr(A)
        if np.abs(np.diag(r)).min() < 1e-12 * max(np.abs(np.diag(r)).max(), 1.0):
            raise ValueError("spanning set is numerically rank-deficient")
        return cls(q)


def orth_complement(F):
    """Orthonormal basis of the orthogonal complement of the column span."""
    n, k = F.shape
    u, s, vt = np.linalg.svd(F, full_matrices=True)
    return u[:, k:]


@dataclass(frozen=True)
class Flag:
    """Full flag: nested subspaces of dimension 1, ..., n-1."""

    subspaces: tuple

    def __post_init__(self):
        subs = tuple(self.subspaces)
        object.__setattr__(self, "subspaces", subs)
        n = subs[0].ambient_dim
        if [V.dim for V in subs] != list(range(1, n)):
            raise ValueError("flag entries must have dimensions 1..n-1")
        for small, big in zip(subs[:-1], subs[1:]):
            # sine of the largest principal angle of the inclusion
            resid = small.frame - big.frame @ (big.frame.T @ small.frame)
            if np.linalg.norm(resid, 2) > NESTING_TOL:
                raise ValueError("flag entries are not nested")

    @property
    def ambient_dim(self):
        return self.subspaces[0].ambient_dim

    def entry(self, k):
        """k-th flag entry (1-based); k = n returns the full space."""
        n = self.ambient_dim
        if k == n:
            return Subspace(np.eye(n))
        return self.subspaces[k - 1]

    @classmethod
    def from_matrix(cls, basis):
        """Flag spanned by the leading columns of ``basis`` for every k."""
        q, r = np.linalg.qr(np.asarray(basis, dtype=float))
        n = q.shape[0]
        q = q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))
        return cls(tuple(Subspace(q[:, :k]) for k in range(1, n)))


# ---------------------------------------------------------------------------
# intersections


def intersect(U: Subspace, W: Subspace, tol=TRANSVERSALITY_TOL) -> Subspace:
    """Intersection of transverse subspaces with dim U + dim W > n.

    Transversality (U + W spans the ambient space) is certified by the
    smallest singular value of the joint frame; failure raises
    NonTransverse carrying that value.
    """
    n = U.ambient_dim
    k, l = U.dim, W.dim
    if U.ambient_dim != W.ambient_dim:
        raise ValueError("ambient dimension mismatch")
    if k + l <= n:
        raise ValueError("expected dim U + dim W > ambient dimension")
    joint = np.hstack([U.frame, W.frame])
    sigma = np.linalg.svd(joint, compute_uv=False)[n - 1]
    if sigma <= tol:
        raise NonTransverse(sigma)
    A = np.hstack([orth_complement(U.frame), orth_complement(W.frame)])
    u, s, vt = np.linalg.svd(A, full_matrices=True)
    return Subspace(u[:, A.shape[1]:])


def intersection_derivative(U: Subspace, W: Subspace, phi, psi, tol=TRANSVERSALITY_TOL):
    """Derivative of the intersection map at a transverse pair.

    Tangent vectors at a subspace are matrices in the (frame, complement
    frame) bases: ``phi`` is (n-k) x k at U, ``psi`` is (n-l) x l at W.
    Returns the induced tangent matrix at U ∩ W in the same convention,
    computed by the lift-split-project recipe: lift both tangents to maps
    into the ambient space, split along U + W, and project the crossed
    parts modulo the intersection.
    """
    n, k = U.frame.shape
    l = W.dim
    I0 = intersect(U, W, tol=tol)
    m = I0.dim
    Up, Wp = orth_complement(U.frame), orth_complement(W.frame)
    Ip = orth_complement(I0.frame)
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if phi.shape != (n - k, k) or psi.shape != (n - l, l):
        raise ValueError("tangent matrices have wrong shape")
    phibar = Up @ phi  # lift U -> R^n of the tangent at U
    psibar = Wp @ psi
    joint = np.hstack([U.frame, W.frame])
    fv = phibar @ (U.frame.T @ I0.frame)  # lifted tangent applied to intersection frame
    gv = psibar @ (W.frame.T @ I0.frame)
    cf, *_ = np.linalg.lstsq(joint, fv, rcond=None)
    cg, *_ = np.linalg.lstsq(joint, gv, rcond=None)
    w_part_of_f = W.frame @ cf[k:, :]
    u_part_of_g = U.frame @ cg[:k, :]
    return Ip.T @ (w_part_of_f + u_part_of_g)


# ---------------------------------------------------------------------------
# chordal metrics


def rp_distance(p, q):
    """Chordal distance between projective points given by unit vectors."""
    p = np.asarray(p, dtype=float).ravel()
    q = np.asarray(q, dtype=float).ravel()
    if p.shape != q.shape:
        raise ValueError("dimension mismatch")
    return min(float(np.linalg.norm(p - q)), float(np.linalg.norm(p + q)))


def grassmann_distance(U: Subspace, W: Subspace):
    """Chordal distance of the Pluecker images; requires equal dimensions."""
    if U.ambient_dim != W.ambient_dim or U.dim != W.dim:
        raise ValueError("dimension mismatch")
    return rp_distance(plucker(U), plucker(W))


def flag_distance(F: Flag, G: Flag):
    """Max over k of the Grassmannian distances of the flag entries."""
    if F.ambient_dim != G.ambient_dim:
        raise ValueError("dimension mismatch")
    return max(grassmann_distance(U, W) for U, W in zip(F.subspaces, G.subspaces))


def rp_distance_to_subspace(p, V: Subspace):
    """Chordal distance from a projective point to a projective subspace."""
    p = np.asarray(p, dtype=float).ravel()
    c = np.linalg.norm(V.frame.T @ p) / np.linalg.norm(p)
    c = min(c, 1.0)
    return math.sqrt(max(2.0 - 2.0 * c, 0.0))


def largest_principal_angle(A, B):
    """Largest principal angle between the column spans of two frames."""
    qa, _ = np.linalg.qr(np.asarray(A, dtype=float))
    qb, _ = np.linalg.qr(np.asarray(B, dtype=float))
    s = np.linalg.svd(qa.T @ qb, compute_uv=False)
    s = np.clip(s, -1.0, 1.0)
    return float(np.arccos(s.min()))


# ---------------------------------------------------------------------------
# stable spectra of long products (QR cocycle)
#
# Eigendecomposing an explicit word product loses the small eigenvalues: one
# application of the product mixes scales by exp(top-to-bottom spread), which
# exceeds float resolution for longer words.  Re-orthogonalizing between the
# letter factors (the discrete-QR method familiar from Lyapunov-exponent
# computation) reads every log-modulus at its own scale instead.

_COCYCLE_TOL = 1e-11
_COCYCLE_PLATEAU = 1e-7
_COCYCLE_STALL = 12
_COCYCLE_MAX_CYCLES = 400
_COCYCLE_SEED = 12345


def _generic_start(n, m=None):
    rng = np.random.default_rng(_COCYCLE_SEED)
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    if m is None:
        return q
    return np.broadcast_to(q, (m, n, n)).copy()


@dataclass(frozen=True)
class CocycleSpectrum:
    """Log-moduli of the eigenvalues of a product of factors, with the
    orthonormal basis of its attracting flag, from the QR cocycle."""

    log_moduli: np.ndarray  # non-increasing, sum zero
    flag_basis: np.ndarray  # n x n orthonormal; leading k columns span entry k
    converged: bool
    min_gap: float

    @property
    def loxodromic(self):
        # distinct moduli of a real matrix force real, simple eigenvalues
        return self.converged and self.min_gap > LOXODROMY_TOL


def cocycle_spectrum(factors, max_cycles=_COCYCLE_MAX_CYCLES):
    """Spectrum of factors[0] @ factors[1] @ ... by periodic QR accumulation."""
    factors = np.asarray(factors, dtype=float)
    lam, Q, conv = batched_cocycle_spectrum(factors[None, ...], max_cycles)
    n = factors.shape[-1]
    min_gap = float(np.min(lam[0, :-1] - lam[0, 1:])) if n > 1 else math.inf
    return CocycleSpectrum(lam[0], Q[0], bool(conv[0]), min_gap)


def batched_cocycle_spectrum(factors, max_cycles=_COCYCLE_MAX_CYCLES):
    """Batched spectrum of m products sharing one word length.

    ``factors`` has shape (m, length, n, n); returns (log_moduli (m, n),
    flag_bases (m, n, n), converged (m,)).  An item converges when its
    per-cycle readout stabilizes below tolerance, or plateaus at its
    rounding-noise floor; items that keep moving (indistinct moduli) end
    unconverged, which downstream code treats as non-loxodromic.
    """
    factors = np.asarray(factors, dtype=float)
    m, length, n, _ = factors.shape
    Q_all = _generic_start(n, m)
    lam_all = np.zeros((m, n))
    done = np.zeros(m, dtype=bool)
    converged = np.zeros(m, dtype=bool)

    active = np.arange(m)
    Q = Q_all.copy()
    prev = None
    best = np.full(m, math.inf)
    stall = np.zeros(m, dtype=int)
    for _ in range(max_cycles):
        acc = np.zeros((len(active), n))
        for i in range(length - 1, -1, -1):
            Q, R = np.linalg.qr(factors[active, i] @ Q)
            d = np.diagonal(R, axis1=1, axis2=2)
            s = np.where(d < 0, -1.0, 1.0)
            Q = Q * s[:, None, :]
            acc = acc + np.log(np.abs(d))
        if prev is not None:
            change = np.max(np.abs(acc - prev), axis=1)
            improved = change < best[active]
            best[active] = np.where(improved, change, best[active])
            stall[active] = np.where(improved, 0, stall[active] + 1)
            ok = (change < _COCYCLE_TOL) | (
                (change < _COCYCLE_PLATEAU) & (stall[active] >= _COCYCLE_STALL)
            )
            if ok.any():
                idx = active[ok]
                lam_all[idx] = acc[ok]
                Q_all[idx] = Q[ok]
                done[idx] = True
                converged[idx] = True
                keep = ~ok
                active = active[keep]
                Q = Q[keep]
                acc = acc[keep]
                if len(active) == 0:
                    break
        prev = acc
    if len(active):
        lam_all[active] = prev
        Q_all[active] = Q
    lam_all = lam_all - lam_all.mean(axis=1, keepdims=True)
    return lam_all, Q_all, converged


def loxodromic_eigenbasis(spec_fwd: CocycleSpectrum, spec_bwd: CocycleSpectrum):
    """Unit eigenvector columns from the attracting flags of an element and
    its inverse: the i-th eigenline is (entry i of the forward flag)
    intersected with (entry n-i+1 of the backward flag)."""
    n = len(spec_fwd.log_moduli)
    Qf, Qb = spec_fwd.flag_basis, spec_bwd.flag_basis
    cols = [Qf[:, 0]]
    for i in range(2, n):
        line = intersect(Subspace(Qf[:, :i]), Subspace(Qb[:, : n - i + 1]))
        v = line.frame[:, 0]
        cols.append(v)
    cols.append(Qb[:, 0])
    V = np.stack(cols, axis=1)
    # deterministic signs
    for j in range(n):
        i = int(np.argmax(np.abs(V[:, j])))
        if V[i, j] < 0:
            V[:, j] = -V[:, j]
    return V
