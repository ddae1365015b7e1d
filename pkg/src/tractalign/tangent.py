"""Unit-sphere geometry of SRVFs and the Fourier coefficient encoding.

A tangent vector at a base SRVF is any ``(T, 3)`` array orthogonal (in L2) to
the base.  :func:`make_basis` builds a tangent basis from Fourier elements and
:func:`encode` / :func:`decode` move between tangent vectors and coefficient
rows.
"""
import hashlib
from dataclasses import dataclass, field

import numpy as np

from .curves import _trapezoid_weights, grid, inner, l2_norm
from .exceptions import AntipodalPoint, BaseMismatch, TangencyViolation

TANGENCY_TOL = 1e-6
ANTIPODAL_TOL = 1e-9


def log_map(base, q):
    """Inverse exponential map on the unit sphere: the velocity at ``base`` of
    the geodesic reaching ``q`` at time 1."""
    base = np.asarray(base, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    c = inner(base, q)
    if c <= -1.0 + ANTIPODAL_TOL:
        raise AntipodalPoint("log map undefined for antipodal points")
    v = q - c * base
    s = l2_norm(v)
    if s == 0.0:
        return np.zeros_like(base)
    return v * (np.arctan2(s, c) / s)


def exp_map(base, v, check=True):
    base = np.asarray(base, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if check and abs(inner(v, base)) >= TANGENCY_TOL:
        raise TangencyViolation(
            f"vector is not tangent at base (<v, base> = {inner(v, base):.3g})")
    alpha = l2_norm(v)
    if alpha == 0.0:
        return base.copy()
    out = np.cos(alpha) * base + (np.sin(alpha) / alpha) * v
    return out / l2_norm(out)


def project_tangent(base, v):
    """Remove the component of ``v`` along ``base``."""
    return v - inner(v, base) * base


def _fourier_elements(T, count):
    """First ``count`` raw Fourier elements, each of unit L2 norm.

    Order: a constant on each of the three channels, then for m = 1, 2, ...
    ``sin(2 pi m t)`` on each channel followed by ``cos(2 pi m t)`` on each.
    """
    t = grid(T)
    out = []
    m = 0
    while len(out) < count:
        waves = ([np.ones(T)] if m == 0 else
                 [np.sin(2 * np.pi * m * t), np.cos(2 * np.pi * m * t)])
        for wave in waves:
            for c in range(3):
                g = np.zeros((T, 3))
                g[:, c] = wave
                out.append(g / l2_norm(g))
        m += 1
    return out[:count]


@dataclass(frozen=True, eq=False)
class Basis:
    """Tangent basis at ``base``.

    ``elements`` has shape (K, T, 3).  With ``orthonormal=False`` the elements
    are the projected Fourier functions without Gram-Schmidt, and ``gram``
    holds their Gram matrix so decoding stays a true inverse on the span.
    """
    base: np.ndarray
    elements: np.ndarray
    requested: int
    orthonormal: bool = True
    dropped: tuple = ()
    gram: np.ndarray = field(default=None, repr=False)

    @property
    def K(self):
        return self.elements.shape[0]

    @property
    def basis_id(self):
        h = hashlib.sha1(np.ascontiguousarray(self.base).tobytes())
        h.update(f"{self.requested}:{self.orthonormal}".encode())
        return h.hexdigest()[:16]


def make_basis(base, K, orthonormal=True, drop_tol=1e-8):
    """Fourier basis of the tangent space at ``base``.

    The first ``K`` raw elements are projected onto the tangent space and,
    by default, orthonormalized with (twice-applied) modified Gram-Schmidt.
    Elements whose norm after projection (and orthogonalization) falls below
    ``drop_tol`` are discarded; their raw indices are kept in ``dropped``.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    base = np.asarray(base, dtype=np.float64)
    T = base.shape[0]
    w = _trapezoid_weights(T)
    kept, dropped = [], []
    for k, g in enumerate(_fourier_elements(T, K)):
        g = project_tangent(base, g)
        if orthonormal:
            for _ in range(2):
                for e in kept:
                    g = g - inner(g, e) * e
                g = project_tangent(base, g)
        norm = l2_norm(g)
        if norm < drop_tol:
            dropped.append(k)
            continue
        kept.append(g / norm if orthonormal else g)
    elements = np.array(kept) if kept else np.zeros((0, T, 3))
    gram = None
    if not orthonormal:
        gram = np.einsum("atc,btc,t->ab", elements, elements, w)
    return Basis(base, elements, K, orthonormal, tuple(dropped), gram)


def _check_vectors(vs, basis, base):
    vs = np.asarray(vs, dtype=np.float64)
    if vs.ndim == 2:
        vs = vs[None]
    if vs.shape[1:] != basis.base.shape:
        raise BaseMismatch(
            f"vectors of shape {vs.shape[1:]} do not match basis grid "
            f"{basis.base.shape}")
    if base is not None and not np.array_equal(np.asarray(base), basis.base):
        raise BaseMismatch("basis was built at a different base point")
    w = _trapezoid_weights(basis.base.shape[0])
    off = np.abs(np.einsum("ntc,tc,t->n", vs, basis.base, w))
    if off.size and off.max() >= TANGENCY_TOL:
        raise BaseMismatch(
            f"vector {int(off.argmax())} is not tangent at the basis base "
            f"(|<v, base>| = {off.max():.3g})")
    return vs


def encode(vs, basis, base=None):
    """Coefficient matrix ``A[i, k] = <v_i, e_k>`` of shape (N, K)."""
    vs = _check_vectors(vs, basis, base)
    w = _trapezoid_weights(basis.base.shape[0])
    return np.einsum("ntc,ktc,t->nk", vs, basis.elements, w)


def decode(A, basis):
    """Tangent vectors ``sum_k A[i, k] e_k``, shape (N, T, 3).

    For a non-orthonormal basis the coefficients are inner products, so they
    are mapped through the inverse Gram matrix first.
    """
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    if A.shape[1] != basis.K:
        raise BaseMismatch(
            f"coefficients have {A.shape[1]} columns, basis has {basis.K}")
    if not basis.orthonormal:
        A = np.linalg.solve(basis.gram, A.T).T
    return np.einsum("nk,ktc->ntc", A, basis.elements)


def truncation_residuals(vs, A, basis):
    """L2 norm of each vector's component outside the basis span."""
    rest = np.asarray(vs) - decode(A, basis)
    w = _trapezoid_weights(basis.base.shape[0])
    return np.sqrt(np.einsum("ntc,ntc,t->n", rest, rest, w))


@dataclass(frozen=True, eq=False)
class BundleCode:
    """Bundle representation: mean SRVF plus tangent coefficients.

    ``A`` has one row per fiber (in ``fiber_ids`` order) and one column per
    basis element.  ``rotations`` and ``gammas`` record how each member was
    aligned to ``beta_mu`` and are used to place reconstructed fibers back
    in the bundle's own frame.  ``residuals`` are the per-fiber truncation
    errors of the encoding.
    """
    beta_mu: np.ndarray
    A: np.ndarray
    basis: Basis
    fiber_ids: tuple
    rotations: np.ndarray = None
    gammas: np.ndarray = None
    residuals: np.ndarray = None

    @property
    def n_fibers(self):
        return self.A.shape[0]

    def tangent_vectors(self):
        return decode(self.A, self.basis)


def default_basis_size(n_fibers):
    return min(n_fibers, 20)


def encode_bundle(mean, basis_size=None, orthonormal=True, fiber_ids=None):
    """Encode a :class:`~tractalign.mean.MeanResult` as a :class:`BundleCode`."""
    n = len(mean.aligned)
    basis = make_basis(mean.beta_mu,
                       basis_size or default_basis_size(n), orthonormal)
    vs = np.array([project_tangent(mean.beta_mu, log_map(mean.beta_mu, a))
                   for a in mean.aligned])
    A = encode(vs, basis)
    return BundleCode(
        beta_mu=mean.beta_mu,
        A=A,
        basis=basis,
        fiber_ids=tuple(range(n)) if fiber_ids is None else tuple(fiber_ids),
        rotations=np.asarray(mean.rotations),
        gammas=np.asarray(mean.gammas),
        residuals=truncation_residuals(vs, A, basis),
    )
