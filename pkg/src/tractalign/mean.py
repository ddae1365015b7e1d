"""Karcher mean of a bundle's SRVFs modulo rotation and reparameterization."""
import logging
from dataclasses import dataclass

import numpy as np

from .curves import align_pair, l2_distance, l2_norm
from .exceptions import EmptyBundle, GridMismatch
from .tangent import exp_map, log_map, project_tangent

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MeanResult:
    """Converged mean and each member's alignment to it.

    ``aligned[i]``, ``rotations[i]`` and ``gammas[i]`` are the
    :func:`~tractalign.curves.align_pair` output for member ``i`` against
    ``beta_mu``.  ``objective`` is the mean squared L2 distance of the aligned
    members to the estimate at each accepted iteration.
    """
    beta_mu: np.ndarray
    aligned: np.ndarray
    rotations: np.ndarray
    gammas: np.ndarray
    iterations: int
    final_gradient_norm: float
    objective: tuple
    converged: bool


def _align_all(mu, qs, align_iters):
    res = [align_pair(mu, q, iters=align_iters) for q in qs]
    aligned = np.array([r.aligned for r in res])
    obj = float(np.mean([l2_distance(mu, a) ** 2 for a in aligned]))
    return res, aligned, obj


def karcher_mean(qs, max_iters=50, tol=1e-6, step=0.5, align_iters=3,
                 max_halvings=8):
    """Intrinsic mean of SRVFs under the rotation- and warp-invariant metric.

    Starts at the normalized extrinsic average.  Each iteration aligns every
    member to the current estimate, averages the log maps and moves along
    the exponential map by ``step`` times the average.  A move that would
    increase the objective is retried with half the step (up to
    ``max_halvings`` times) and otherwise rejected, which ends the iteration.

    Parameters
    ----------
    qs : array-like of shape (N, T, 3)
    max_iters : int
        Maximum number of alignment rounds.
    tol : float
        Stop once the average tangent vector has norm below ``tol``.

    Returns
    -------
    MeanResult
    """
    qs = np.asarray(qs, dtype=np.float64)
    if qs.ndim != 3 or qs.shape[0] == 0:
        raise EmptyBundle("karcher_mean needs at least one SRVF")
    if qs.shape[2] != 3:
        raise GridMismatch(f"SRVFs must have shape (N, T, 3), got {qs.shape}")
    mu = qs.mean(axis=0)
    norm = l2_norm(mu)
    mu = mu / norm if norm > 0 else qs[0].copy()

    res, aligned, obj = _align_all(mu, qs, align_iters)
    objective = [obj]
    grad_norm = np.inf
    iterations = 0
    converged = False
    while iterations < max_iters:
        iterations += 1
        vbar = np.mean([log_map(mu, a) for a in aligned], axis=0)
        vbar = project_tangent(mu, vbar)
        grad_norm = l2_norm(vbar)
        logger.debug("karcher iter %d: |grad| = %.3e, objective = %.6e",
                     iterations, grad_norm, objective[-1])
        if grad_norm < tol:
            converged = True
            break
        s = step
        for _ in range(max_halvings + 1):
            cand = exp_map(mu, s * vbar, check=False)
            c_res, c_aligned, c_obj = _align_all(cand, qs, align_iters)
            if c_obj <= objective[-1] + 1e-12:
                break
            s *= 0.5
        else:
            logger.info("karcher mean stalled at |grad| = %.3e", grad_norm)
            break
        mu, res, aligned = cand, c_res, c_aligned
        objective.append(c_obj)

    return MeanResult(
        beta_mu=mu,
        aligned=aligned,
        rotations=np.array([r.rotation for r in res]),
        gammas=np.array([r.gamma for r in res]),
        iterations=iterations,
        final_gradient_norm=float(grad_norm),
        objective=tuple(objective),
        converged=converged,
    )
