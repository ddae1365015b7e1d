"""Estimator-style wrappers around the bundle coding and registration steps.

Both classes follow the scikit-learn conventions: hyperparameters are set in
``__init__`` and stored verbatim, learned state gets a trailing underscore
and is only available after ``fit``.
"""
import logging
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_fibers
from .bundle import Bundle
from .curves import align_pair, to_srvf
from .exceptions import BadSpec
from .mean import karcher_mean
from .registration import hard_align, rigid_align, soft_align
from .tangent import (decode, encode, encode_bundle, exp_map, log_map,
                      project_tangent)

logger = logging.getLogger(__name__)

TRANSPORT_MODES = ("exact", "stepwise")
RESCALE_MODES = ("norm", "path")


def _fibers_of(X):
    if isinstance(X, Bundle):
        return X.fibers
    return check_fibers(X, "X")


def _as_bundle(X, name="bundle"):
    return X if isinstance(X, Bundle) else Bundle(name, check_fibers(X, "X"))


def code_bundle(X, basis_size=None, orthonormal=True, max_iters=50, tol=1e-6,
                align_iters=3):
    """Karcher mean and bundle code of a set of fibers.

    Returns
    -------
    mean : MeanResult
    code : BundleCode
    """
    fibers = _fibers_of(X)
    ids = X.fiber_ids if isinstance(X, Bundle) else None
    mean = karcher_mean([to_srvf(f) for f in fibers], max_iters=max_iters,
                        tol=tol, align_iters=align_iters)
    if not mean.converged:
        logger.warning("mean did not converge: |grad| = %.2e after %d iterations",
                       mean.final_gradient_norm, mean.iterations)
    code = encode_bundle(mean, basis_size, orthonormal=orthonormal, fiber_ids=ids)
    return mean, code


class BundleEncoder(TransformerMixin, BaseEstimator):
    """Encode fibers as coefficients of tangent vectors at a bundle mean.

    Parameters
    ----------
    basis_size : int, optional
        Number of Fourier basis elements; defaults to ``min(N, 20)``.
    orthonormal : bool
        Orthonormalize the projected basis (otherwise the raw projected
        elements are used and decoding goes through their Gram matrix).
    max_iters, tol : mean iteration limits.
    align_iters : int
        Rotation/warp alternations per fiber alignment.

    Attributes
    ----------
    mean_ : MeanResult
    code_ : BundleCode
    n_samples_ : int
        Grid size the encoder was fitted on.
    """

    def __init__(self, basis_size=None, orthonormal=True, max_iters=50,
                 tol=1e-6, align_iters=3):
        self.basis_size = basis_size
        self.orthonormal = orthonormal
        self.max_iters = max_iters
        self.tol = tol
        self.align_iters = align_iters

    def fit(self, X, y=None):
        if self.basis_size is not None and self.basis_size < 1:
            raise BadSpec(f"basis_size must be >= 1, got {self.basis_size}")
        self.mean_, self.code_ = code_bundle(
            X, self.basis_size, self.orthonormal, self.max_iters, self.tol,
            self.align_iters)
        self.n_samples_ = self.code_.beta_mu.shape[0]
        return self

    def transform(self, X):
        """Coefficient rows of ``X`` after aligning each fiber to the mean."""
        check_is_fitted(self, "code_")
        fibers = check_fibers(_fibers_of(X), "X")
        mu = self.code_.beta_mu
        vs = [project_tangent(mu, log_map(mu, align_pair(
                  mu, to_srvf(f), iters=self.align_iters).aligned))
              for f in fibers]
        return encode(np.array(vs), self.code_.basis)

    def fit_transform(self, X, y=None):
        # The fitted code already holds the encoding of the training fibers.
        return self.fit(X).code_.A.copy()

    def inverse_transform(self, A):
        """SRVFs reconstructed from coefficient rows."""
        check_is_fitted(self, "code_")
        vs = decode(np.atleast_2d(A), self.code_.basis)
        return np.array([exp_map(self.code_.beta_mu, v, check=False) for v in vs])


@dataclass(frozen=True, eq=False)
class Registration:
    """Everything produced by registering one subject to the template."""
    rigid: Bundle
    code: object
    mean: object
    soft: object
    hard: object

    @property
    def distance(self):
        return self.soft.distance


class BundleRegistration(BaseEstimator):
    """Register subject bundles to a template bundle.

    ``fit`` codes the template; ``register`` rigidly pre-aligns a subject,
    codes it, soft-aligns the codes and (optionally) refines fiber by fiber.

    Parameters
    ----------
    basis_size, orthonormal, max_iters, tol, align_iters
        Passed to the bundle coder.
    transport : {"exact", "stepwise"}
    transport_steps : int
        Number of steps for stepwise transport.
    rescale : {"norm", "path"}
        Stepwise rescaling rule.  ``"path"`` rescales every vector to the
        geodesic length at each step.
    hard : bool
        Also run the per-fiber refinement.
    """

    def __init__(self, basis_size=None, orthonormal=True, transport="exact",
                 transport_steps=10, rescale="norm", hard=True, max_iters=50,
                 tol=1e-6, align_iters=3):
        self.basis_size = basis_size
        self.orthonormal = orthonormal
        self.transport = transport
        self.transport_steps = transport_steps
        self.rescale = rescale
        self.hard = hard
        self.max_iters = max_iters
        self.tol = tol
        self.align_iters = align_iters

    def _check_params(self):
        if self.transport not in TRANSPORT_MODES:
            raise BadSpec(f"transport must be one of {TRANSPORT_MODES}")
        if self.rescale not in RESCALE_MODES:
            raise BadSpec(f"rescale must be one of {RESCALE_MODES}")
        if self.transport == "stepwise" and self.transport_steps < 2:
            raise BadSpec("stepwise transport needs at least 2 steps")

    def _coder_params(self):
        return dict(basis_size=self.basis_size, orthonormal=self.orthonormal,
                    max_iters=self.max_iters, tol=self.tol,
                    align_iters=self.align_iters)

    def fit(self, template, y=None, code=None):
        """Fit to ``template`` (a Bundle or fiber array).

        A precomputed template ``code`` skips the mean computation.
        """
        self._check_params()
        self.template_ = _as_bundle(template, "template")
        if code is None:
            _, code = code_bundle(self.template_, **self._coder_params())
        self.template_code_ = code
        return self

    def register(self, subject, code=None):
        """Register ``subject``; returns a :class:`Registration`."""
        check_is_fitted(self, "template_code_")
        subject = _as_bundle(subject, "subject")
        rigid = rigid_align(subject, self.template_)
        mean = None
        if code is None:
            mean, code = code_bundle(rigid, **self._coder_params())
        soft = soft_align(code, self.template_code_, rigid, self.template_,
                          transport_mode=self.transport,
                          transport_steps=self.transport_steps,
                          rescale=self.rescale, align_iters=self.align_iters)
        hard = None
        if self.hard:
            hard = hard_align(soft, rigid, self.template_code_, self.template_,
                              align_iters=self.align_iters)
        return Registration(rigid, code, mean, soft, hard)

    def transform(self, subject):
        """Soft-aligned subject fibers in the template frame."""
        return self.register(subject).soft.fibers

    def score(self, subject):
        """Negative bundle distance to the template (higher is closer)."""
        return -self.register(subject).distance
