"""Discrete open curves in 3-space and their square-root velocity functions.

All curves share a uniform grid on [0, 1] with ``T`` samples.  Fibers are
``(T, 3)`` point arrays, SRVFs are ``(T, 3)`` arrays of unit L2 norm and
reparameterizations (``gamma``) are length-``T`` arrays of grid values.
Integrals use the trapezoid rule on the grid.
"""
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from ._dp import MOVES, dp_lattice
from ._validation import check_curve, check_gamma, check_same_grid
from .exceptions import DegenerateFiber, GridMismatch

ZERO_SPEED = 1e-12


def grid(T):
    """Uniform grid on [0, 1] with ``T`` points."""
    return np.linspace(0.0, 1.0, T)


@lru_cache(maxsize=32)
def _trapezoid_weights(T):
    w = np.full(T, 1.0 / (T - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    w.setflags(write=False)
    return w


def inner(q1, q2):
    """L2 inner product of two functions sampled on the same grid.

    Parameters
    ----------
    q1, q2 : ndarray of shape (T, 3)

    Returns
    -------
    float
        Trapezoid approximation of the integral of <q1(t), q2(t)> over [0, 1].
    """
    q1 = np.asarray(q1, dtype=np.float64)
    q2 = np.asarray(q2, dtype=np.float64)
    if q1.shape != q2.shape:
        raise GridMismatch(f"grid mismatch: {q1.shape} vs {q2.shape}")
    w = _trapezoid_weights(q1.shape[0])
    return float(w @ np.einsum("ij,ij->i", q1, q2))


def l2_norm(q):
    return float(np.sqrt(max(inner(q, q), 0.0)))


def l2_distance(q1, q2):
    return l2_norm(np.asarray(q1) - np.asarray(q2))


def geodesic_distance(q1, q2):
    """Great-circle distance between two unit-norm SRVFs."""
    c = inner(q1, q2)
    return float(np.arctan2(l2_norm(np.asarray(q2) - c * np.asarray(q1)), c))


def arc_length(fiber):
    return float(np.linalg.norm(np.diff(fiber, axis=0), axis=1).sum())


def resample(fiber, T):
    """Resample a polyline to ``T`` points equally spaced in arc length.

    Endpoints are kept exactly.  Raises :class:`DegenerateFiber` when the
    polyline has zero length.
    """
    fiber = check_curve(fiber, "fiber")
    if T < 3:
        raise ValueError(f"T must be at least 3, got {T}")
    seg = np.linalg.norm(np.diff(fiber, axis=0), axis=1)
    keep = np.concatenate([[True], seg > 0])
    fiber, seg = fiber[keep], seg[seg > 0]
    if seg.size == 0:
        raise DegenerateFiber("fiber has zero arc length")
    s = np.concatenate([[0.0], np.cumsum(seg)])
    s /= s[-1]
    u = grid(T)
    out = np.column_stack([np.interp(u, s, fiber[:, c]) for c in range(3)])
    out[0], out[-1] = fiber[0], fiber[-1]
    return out


def to_srvf(fiber):
    """Square-root velocity function of a fiber, scaled to unit L2 norm.

    Velocities come from second-order differences (central inside,
    one-sided at the ends);
    samples with speed below 1e-12 map to the zero vector.
    """
    fiber = check_curve(fiber, "fiber", min_points=3)
    T = fiber.shape[0]
    vel = _derivative(fiber)
    speed = np.linalg.norm(vel, axis=1)
    q = np.zeros_like(vel)
    moving = speed >= ZERO_SPEED
    q[moving] = vel[moving] / np.sqrt(speed[moving])[:, None]
    norm = l2_norm(q)
    if norm == 0.0:
        raise DegenerateFiber("fiber has zero arc length")
    return q / norm


def _derivative(fiber):
    return np.gradient(fiber, 1.0 / (len(fiber) - 1), axis=0, edge_order=2)


@lru_cache(maxsize=16)
def _integration_operator(T):
    # Least-squares inverse of the difference operator in _derivative, with
    # f[0] pinned at 0.
    h = 1.0 / (T - 1)
    D = np.zeros((T, T))
    D[0, :3] = [-1.5 / h, 2.0 / h, -0.5 / h]
    D[-1, -3:] = [0.5 / h, -2.0 / h, 1.5 / h]
    idx = np.arange(1, T - 1)
    D[idx, idx - 1] = -0.5 / h
    D[idx, idx + 1] = 0.5 / h
    P = np.linalg.pinv(D[:, 1:])
    P.setflags(write=False)
    return P


def srvf_scale(fiber):
    """Length factor removed by :func:`to_srvf` (trapezoid integral of speed).

    ``from_srvf(to_srvf(f), f[0], srvf_scale(f))`` reproduces ``f``.
    """
    fiber = check_curve(fiber, "fiber", min_points=3)
    speed = np.linalg.norm(_derivative(fiber), axis=1)
    return float(_trapezoid_weights(len(fiber)) @ speed)


def from_srvf(q, origin=(0.0, 0.0, 0.0), scale=1.0):
    """Reconstruct a fiber ``origin + scale * integral of q|q|``.

    The integral inverts the finite-difference derivative used by
    :func:`to_srvf`, so ``to_srvf(from_srvf(q))`` returns ``q`` whenever ``q``
    came from a fiber on the same grid.
    """
    q = check_curve(q, "srvf", min_points=3)
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    vel = q * np.linalg.norm(q, axis=1)[:, None]
    f = np.zeros_like(q)
    f[1:] = _integration_operator(q.shape[0]) @ vel
    return np.asarray(origin, dtype=np.float64) + scale * f


def rotate(q, R):
    """Apply a 3x3 rotation to every sample of a curve or SRVF."""
    return np.asarray(q) @ np.asarray(R).T


def apply_gamma(q, gamma, normalize=True):
    """Group action ``sqrt(gamma') * q(gamma)``, renormalized to unit norm.

    Pass ``normalize=False`` to act on tangent vectors, which are not unit.
    """
    q = check_curve(q, "srvf", min_points=3)
    T = q.shape[0]
    gamma = check_gamma(gamma, T)
    t = grid(T)
    gdot = np.clip(np.gradient(gamma, t), 0.0, None)
    warped = np.column_stack([np.interp(gamma, t, q[:, c]) for c in range(3)])
    warped *= np.sqrt(gdot)[:, None]
    if not normalize:
        return warped
    norm = l2_norm(warped)
    return warped / norm if norm > 0 else warped


def warp_curve(f, gamma):
    """Compose a sampled curve or profile with ``gamma`` (no velocity factor)."""
    f = np.asarray(f, dtype=np.float64)
    t = grid(f.shape[0])
    if f.ndim == 1:
        return np.interp(gamma, t, f)
    return np.column_stack([np.interp(gamma, t, f[:, c]) for c in range(f.shape[1])])


def invert_gamma(gamma):
    t = grid(len(gamma))
    inv = np.interp(t, gamma, t)
    inv[0], inv[-1] = 0.0, 1.0
    return inv


def _proper_procrustes(C):
    """Rotation maximizing tr(R C^T), with a det = +1 fix."""
    U, _, Vt = np.linalg.svd(C)
    if np.linalg.det(U @ Vt) < 0:
        U[:, -1] = -U[:, -1]
    return U @ Vt


def kabsch_rotation(q_ref, q):
    """Rotation ``R`` in SO(3) minimizing ``||q_ref - R q||``."""
    q_ref = check_curve(q_ref, "q_ref")
    q = check_curve(q, "q")
    check_same_grid(q_ref, q)
    w = _trapezoid_weights(q.shape[0])
    return _proper_procrustes((q_ref * w[:, None]).T @ q)


def kabsch_points(source, target):
    """Rigid motion ``(R, t)`` minimizing ``sum |target - (R source + t)|^2``."""
    source = np.asarray(source, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    cs, ct = source.mean(axis=0), target.mean(axis=0)
    R = _proper_procrustes((target - ct).T @ (source - cs))
    return R, ct - R @ cs


def optimal_gamma(q_ref, q):
    """Reparameterization of ``q`` that best matches ``q_ref``.

    Minimizes ``||q_ref - sqrt(gamma') q(gamma)||`` over piecewise-linear
    gamma through a monotone lattice of grid nodes (steps with both
    components in 1..3 and coprime), by dynamic programming.

    Returns
    -------
    gamma : ndarray of shape (T,)
    distance : float
        Square root of the optimal lattice cost.
    """
    q_ref = check_curve(q_ref, "q_ref", min_points=3)
    q = check_curve(q, "q", min_points=3)
    check_same_grid(q_ref, q)
    E, P = dp_lattice(q_ref, q, MOVES)
    T = q.shape[0]
    nodes = [(T - 1, T - 1)]
    i = j = T - 1
    while i > 0 or j > 0:
        a, b = MOVES[P[i, j]]
        i, j = i - a, j - b
        nodes.append((i, j))
    nodes = np.array(nodes[::-1], dtype=np.float64) / (T - 1)
    gamma = np.interp(grid(T), nodes[:, 0], nodes[:, 1])
    gamma[0], gamma[-1] = 0.0, 1.0
    return gamma, float(np.sqrt(max(E[-1, -1], 0.0)))


class PairAlignment(NamedTuple):
    aligned: np.ndarray
    rotation: np.ndarray
    gamma: np.ndarray
    history: tuple


def align_pair(q_ref, q, iters=3, tol=1e-8):
    """Jointly align ``q`` to ``q_ref`` over rotations and reparameterizations.

    Alternates :func:`kabsch_rotation` and :func:`optimal_gamma` for at most
    ``iters`` rounds.  A round is accepted only if it does not increase
    ``||q_ref - aligned||``; iteration stops early once the improvement drops
    below ``tol``.  ``history`` holds the objective after each accepted round,
    starting with the unaligned distance.
    """
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    q_ref = check_curve(q_ref, "q_ref", min_points=3)
    q = check_curve(q, "q", min_points=3)
    check_same_grid(q_ref, q)
    T = q.shape[0]
    R = np.eye(3)
    gamma = grid(T)
    aligned = q
    history = [l2_distance(q_ref, q)]
    for _ in range(iters):
        R_new = kabsch_rotation(q_ref, apply_gamma(q, gamma))
        rq = rotate(q, R_new)
        gamma_new, _ = optimal_gamma(q_ref, rq)
        cand = apply_gamma(rq, gamma_new)
        obj = l2_distance(q_ref, cand)
        if obj > history[-1]:
            break
        improvement = history[-1] - obj
        R, gamma, aligned = R_new, gamma_new, cand
        history.append(obj)
        if improvement < tol:
            break
    return PairAlignment(aligned, R, gamma, tuple(history))


def orient_fiber(fiber, reference):
    """Reverse ``fiber`` if that brings its endpoints closer to ``reference``'s."""
    fiber = np.asarray(fiber)
    same = (np.linalg.norm(fiber[0] - reference[0])
            + np.linalg.norm(fiber[-1] - reference[-1]))
    flipped = (np.linalg.norm(fiber[-1] - reference[0])
               + np.linalg.norm(fiber[0] - reference[-1]))
    return fiber[::-1].copy() if flipped < same else fiber


def orient_fibers(fibers, reference=None):
    """Orient every fiber against ``reference`` (default: the first fiber)."""
    if reference is None:
        reference = fibers[0]
    return np.stack([orient_fiber(f, reference) for f in fibers])
