"""Parallel transport of tangent vectors along great circles of the SRVF sphere."""
from dataclasses import dataclass

import numpy as np

from .curves import inner, l2_norm
from .tangent import exp_map, log_map, project_tangent

MIN_PATH = 1e-12


@dataclass(frozen=True)
class TransportResult:
    vectors: np.ndarray
    steps: int
    path_length: float


def _as_stack(vs):
    vs = np.asarray(vs, dtype=np.float64)
    return vs[None] if vs.ndim == 2 else vs


def transport_exact(src_base, dst_base, vs):
    """Closed-form transport along the minimal geodesic from ``src_base`` to
    ``dst_base``.

    Only the component along the geodesic direction turns; everything
    orthogonal to the plane of the great circle is unchanged.
    """
    vs = _as_stack(vs)
    w = log_map(src_base, dst_base)
    alpha = l2_norm(w)
    if alpha < MIN_PATH:
        return TransportResult(vs.copy(), 1, alpha)
    u = w / alpha
    turn = (np.cos(alpha) - 1.0) * u - np.sin(alpha) * np.asarray(src_base)
    out = np.array([v + inner(v, u) * turn for v in vs])
    # Strip rounding drift off the destination's normal direction.
    out = np.array([project_tangent(dst_base, v) for v in out])
    return TransportResult(out, 1, alpha)


def transport_stepwise(src_base, dst_base, vs, k=10, rescale="norm"):
    """Transport by repeated projection onto tangent spaces along the geodesic.

    Walks ``q_tau = exp_src(tau * w / k)`` for ``tau = 1..k`` where
    ``w = log_src(dst)``.  After each projection the vector is rescaled:
    ``rescale="norm"`` restores its original norm; ``rescale="path"``
    gives every vector the geodesic length ``|w|`` instead, which does not
    preserve norms and is kept only for comparison.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if rescale not in ("norm", "path"):
        raise ValueError(f"rescale must be 'norm' or 'path', got {rescale!r}")
    vs = _as_stack(vs)
    w = log_map(src_base, dst_base)
    l_w = l2_norm(w)
    if l_w < MIN_PATH:
        return TransportResult(vs.copy(), 0, l_w)
    targets = np.array([l2_norm(v) for v in vs]) if rescale == "norm" \
        else np.full(len(vs), l_w)
    cur = vs.copy()
    for tau in range(1, k + 1):
        q_tau = dst_base if tau == k else exp_map(src_base, tau * w / k, check=False)
        for i in range(len(cur)):
            v = project_tangent(q_tau, cur[i])
            n = l2_norm(v)
            cur[i] = v * (targets[i] / n) if n > 0 else v
    return TransportResult(cur, k, l_w)


def transport(src_base, dst_base, vs, mode="exact", k=10, rescale="norm"):
    """Dispatch on ``mode``: ``"exact"`` or ``"stepwise"``."""
    if mode == "exact":
        return transport_exact(src_base, dst_base, vs)
    if mode == "stepwise":
        return transport_stepwise(src_base, dst_base, vs, k=k, rescale=rescale)
    raise ValueError(f"unknown transport mode {mode!r}")
