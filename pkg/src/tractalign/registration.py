"""Bundle-to-bundle distance and soft/hard registration.

Soft alignment works entirely on bundle codes: the subject mean is aligned
to the template mean (rotation and warp), the subject's tangent vectors are
carried along by the same group action, parallel transported to the
template mean and re-encoded in the template basis.  A rotation in SO(N)
acting on coefficient rows then matches them to the template's
coefficients.  Hard alignment pairs fibers by nearest coefficient rows and
warps each pair elastically.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .bundle import Bundle
from .curves import (align_pair, apply_gamma, from_srvf, kabsch_points,
                     l2_distance, rotate, srvf_scale, to_srvf)
from .exceptions import FiberCountMismatch, GridMismatch, ShapeMismatch
from .tangent import decode, encode, exp_map, project_tangent
from .transport import transport

logger = logging.getLogger(__name__)


def procrustes_rotation(A1, A2):
    """Rotation ``O`` in SO(N) minimizing ``||A2 - O A1||_F``.

    With the SVD ``A1 A2^T = R S Q^T`` the minimizer is ``Q R^T``; when that
    has determinant -1 the singular direction with the smallest singular
    value is negated.
    """
    A1 = np.asarray(A1, dtype=np.float64)
    A2 = np.asarray(A2, dtype=np.float64)
    if A1.shape != A2.shape or A1.ndim != 2:
        raise ShapeMismatch(f"coefficient shapes differ: {A1.shape} vs {A2.shape}")
    R, _, Qt = np.linalg.svd(A1 @ A2.T)
    if np.linalg.det(Qt.T @ R.T) < 0:
        R[:, -1] = -R[:, -1]
    return Qt.T @ R.T


@dataclass(frozen=True, eq=False)
class SoftAlignment:
    """Result of matching a subject code to a template code.

    ``distance`` is ``sqrt(mean_term**2 + coeff_term**2)``.  ``rotation``
    mixes coefficient rows; ``correspondence[r, i]`` (its squared entries,
    a doubly stochastic matrix) is the weight of subject fiber ``i`` in the
    soft fiber placed at template slot ``r``.
    """
    distance: float
    mean_term: float
    coeff_term: float
    mean_gamma: np.ndarray
    mean_rotation: np.ndarray
    rotation: np.ndarray
    transported_A: np.ndarray
    path_length: float
    srvfs: np.ndarray = None
    fibers: np.ndarray = None

    @property
    def correspondence(self):
        return self.rotation ** 2

    @property
    def rotated_A(self):
        return self.rotation @ self.transported_A


@dataclass(frozen=True, eq=False)
class HardAlignment:
    """Per-fiber elastic refinement of a soft alignment.

    Subject fiber ``i`` is paired with template fiber ``pairings[i]`` and
    warped onto it; ``pre_distances`` / ``post_distances`` are the SRVF
    distances of each pair before and after warping.
    """
    warped_fibers: np.ndarray
    pairings: np.ndarray
    pairing_costs: np.ndarray
    per_pair_gammas: np.ndarray
    per_pair_rotations: np.ndarray
    pre_distances: np.ndarray
    post_distances: np.ndarray


def _check_compatible(B1, B2):
    if B1.n_fibers != B2.n_fibers:
        raise FiberCountMismatch(
            f"bundles have {B1.n_fibers} and {B2.n_fibers} fibers; resample "
            "both to a common count")
    if B1.beta_mu.shape != B2.beta_mu.shape:
        raise GridMismatch(
            f"means sampled on different grids: {B1.beta_mu.shape} vs "
            f"{B2.beta_mu.shape}")


def bundle_distance(B1, B2, transport_mode="exact", transport_steps=10,
                    rescale="norm", align_iters=3):
    """Distance between two bundle codes and the soft alignment of B1 onto B2.

    Returns
    -------
    distance : float
    soft : SoftAlignment
        Without reconstructed fibers; see :func:`soft_align`.
    """
    _check_compatible(B1, B2)
    pa = align_pair(B2.beta_mu, B1.beta_mu, iters=align_iters)
    src = pa.aligned
    mean_term = l2_distance(B2.beta_mu, src)

    vs = decode(B1.A, B1.basis)
    moved = np.array([
        project_tangent(src, apply_gamma(rotate(v, pa.rotation), pa.gamma,
                                         normalize=False))
        for v in vs])
    tr = transport(src, B2.beta_mu, moved, mode=transport_mode,
                   k=transport_steps, rescale=rescale)
    A1t = encode(np.array([project_tangent(B2.beta_mu, v) for v in tr.vectors]),
                 B2.basis)
    O = procrustes_rotation(A1t, B2.A)
    coeff_term = float(np.linalg.norm(B2.A - O @ A1t))
    distance = float(np.hypot(mean_term, coeff_term))
    soft = SoftAlignment(
        distance=distance, mean_term=mean_term, coeff_term=coeff_term,
        mean_gamma=pa.gamma, mean_rotation=pa.rotation, rotation=O,
        transported_A=A1t, path_length=tr.path_length)
    return distance, soft


def _centered(fiber, center):
    return fiber - fiber.mean(axis=0) + center


def soft_align(subject, template, subject_bundle=None, template_bundle=None,
               **kwargs):
    """Soft alignment plus reconstructed subject fibers in the template frame.

    Row ``r`` of ``rotation @ transported_A`` is decoded at the template mean
    and exp-mapped to an SRVF.  When both bundles are given, that SRVF is
    turned back by template member ``r``'s alignment rotation, integrated to
    a fiber whose length is the correspondence-weighted subject length, and
    centered on template fiber ``r``.
    """
    _, soft = bundle_distance(subject, template, **kwargs)
    vs = decode(soft.rotated_A, template.basis)
    srvfs = np.array([exp_map(template.beta_mu, v, check=False) for v in vs])
    fibers = None
    if subject_bundle is not None and template_bundle is not None:
        scales = soft.correspondence @ np.array(
            [srvf_scale(f) for f in subject_bundle.fibers])
        rots = template.rotations if template.rotations is not None \
            else np.broadcast_to(np.eye(3), (len(srvfs), 3, 3))
        fibers = np.array([
            _centered(from_srvf(rotate(q, R.T), scale=s), tf.mean(axis=0))
            for q, R, s, tf in zip(srvfs, rots, scales, template_bundle.fibers)])
    return SoftAlignment(**{**soft.__dict__, "srvfs": srvfs, "fibers": fibers})


def pair_by_coefficients(rows, template_rows):
    """Nearest template row (Euclidean) for every row; ties go to the lowest
    index."""
    d = np.linalg.norm(rows[:, None, :] - template_rows[None, :, :], axis=2)
    idx = np.argmin(d, axis=1)
    return idx, d[np.arange(len(rows)), idx]


def hard_align(soft, subject_bundle, template, template_bundle, align_iters=3):
    """Warp every subject fiber onto the template fiber nearest in code space."""
    if subject_bundle.n_fibers != template_bundle.n_fibers:
        raise FiberCountMismatch("subject and template fiber counts differ")
    pairings, costs = pair_by_coefficients(soft.rotated_A, template.A)
    sub_q = [to_srvf(f) for f in subject_bundle.fibers]
    tmp_q = [to_srvf(f) for f in template_bundle.fibers]
    warped, gammas, rots, pre, post = [], [], [], [], []
    for i, j in enumerate(pairings):
        pa = align_pair(tmp_q[j], sub_q[i], iters=align_iters)
        f = from_srvf(pa.aligned, scale=srvf_scale(subject_bundle.fibers[i]))
        warped.append(_centered(f, template_bundle.fibers[j].mean(axis=0)))
        gammas.append(pa.gamma)
        rots.append(pa.rotation)
        pre.append(pa.history[0])
        post.append(pa.history[-1])
    return HardAlignment(
        warped_fibers=np.array(warped), pairings=pairings, pairing_costs=costs,
        per_pair_gammas=np.array(gammas), per_pair_rotations=np.array(rots),
        pre_distances=np.array(pre), post_distances=np.array(post))


def rigid_align(subject, template):
    """Rigidly move ``subject`` onto ``template`` (a :class:`Bundle` each).

    Fits rotation and translation between the pointwise mean curves of the
    two bundles, trying the subject mean in both directions; if the reversed
    direction wins, every subject fiber (and profile) is reversed too.
    """
    src = subject.fibers.mean(axis=0)
    dst = template.fibers.mean(axis=0)
    best = None
    for reverse in (False, True):
        s = src[::-1] if reverse else src
        R, t = kabsch_points(s, dst)
        err = np.linalg.norm(s @ R.T + t - dst)
        if best is None or err < best[0]:
            best = (err, reverse, R, t)
    _, reverse, R, t = best
    fibers = subject.fibers[:, ::-1] if reverse else subject.fibers
    profiles = subject.profiles
    if reverse and profiles is not None:
        profiles = profiles[:, ::-1]
    moved = fibers @ R.T + t
    prov = {**subject.provenance,
            "rigid": {"rotation": R.tolist(), "translation": t.tolist(),
                      "reversed": bool(reverse)}}
    return Bundle(subject.name, moved, profiles, subject.fiber_ids, prov)


def gamma_deviation(gamma):
    """Trapezoid integral of ``(gamma(t) - t)^2``; zero for the identity."""
    gamma = np.asarray(gamma, dtype=np.float64)
    t = np.linspace(0.0, 1.0, len(gamma))
    return float(np.trapezoid((gamma - t) ** 2, t))
