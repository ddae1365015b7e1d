import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from tractalign.curves import align_pair, l2_distance, to_srvf
from tractalign.estimators import BundleEncoder, BundleRegistration
from tractalign.exceptions import BadSpec
from tractalign.io.synthetic import synth_bundle
from tractalign.registration import bundle_distance


@pytest.fixture(scope="module")
def bundle():
    return synth_bundle(n_fibers=6, n_samples=50, displacement=3, seed=11)


@pytest.fixture(scope="module")
def encoder(bundle):
    return BundleEncoder(basis_size=6, tol=1e-5).fit(bundle)


def test_params_and_clone():
    enc = BundleEncoder(basis_size=7, orthonormal=False)
    assert enc.get_params()["basis_size"] == 7
    copy = clone(enc)
    assert copy.get_params() == enc.get_params()
    reg = BundleRegistration(transport="stepwise", transport_steps=20)
    assert clone(reg).set_params(hard=False).get_params()["hard"] is False


def test_not_fitted(bundle):
    with pytest.raises(NotFittedError):
        BundleEncoder().transform(bundle)
    with pytest.raises(NotFittedError):
        BundleRegistration().register(bundle)


def test_bad_params(bundle):
    with pytest.raises(BadSpec):
        BundleEncoder(basis_size=0).fit(bundle)
    with pytest.raises(BadSpec):
        BundleRegistration(transport="magic").fit(bundle)
    with pytest.raises(BadSpec):
        BundleRegistration(rescale="magic").fit(bundle)
    with pytest.raises(BadSpec):
        BundleRegistration(transport="stepwise", transport_steps=1).fit(bundle)


def test_fitted_attributes(encoder, bundle):
    assert encoder.n_samples_ == 50
    assert encoder.code_.A.shape == (6, 6)
    assert encoder.mean_.converged


def test_transform_matches_fit_transform(encoder, bundle):
    A = encoder.transform(bundle)
    np.testing.assert_allclose(A, encoder.code_.A, atol=1e-6)
    np.testing.assert_allclose(BundleEncoder(basis_size=6, tol=1e-5)
                               .fit_transform(bundle.fibers), encoder.code_.A)


def test_inverse_transform_within_residuals(encoder):
    q = encoder.inverse_transform(encoder.code_.A)
    assert q.shape == (6, 50, 3)
    for rec, a, r in zip(q, encoder.mean_.aligned, encoder.code_.residuals):
        assert l2_distance(rec, a) <= r + 1e-9


def test_inverse_of_zero_is_mean(encoder):
    q = encoder.inverse_transform(np.zeros(6))
    np.testing.assert_allclose(q[0], encoder.code_.beta_mu, atol=1e-15)


def test_transform_of_new_fiber_is_aligned(encoder):
    new = synth_bundle(n_fibers=1, n_samples=50, displacement=3, seed=99).fibers
    A = encoder.transform(new)
    rec = encoder.inverse_transform(A)[0]
    target = align_pair(encoder.code_.beta_mu, to_srvf(new[0])).aligned
    # Reconstruction error stays below the spread of the training fibers.
    assert l2_distance(rec, target) < encoder.code_.residuals.max() * 2


def test_registration_self_score():
    template = synth_bundle(n_fibers=6, n_samples=40, displacement=3, seed=12)
    reg = BundleRegistration(hard=False, tol=1e-5).fit(template)
    r = reg.register(template)
    assert r.hard is None
    assert r.distance < 1e-6
    assert reg.score(template) == -r.distance
    assert reg.transform(template).shape == template.fibers.shape


def test_registration_accepts_arrays():
    template = synth_bundle(n_fibers=5, n_samples=40, displacement=3, seed=13)
    subject = synth_bundle(n_fibers=5, n_samples=40, displacement=3, seed=14,
                           rotation=0.2)
    reg = BundleRegistration(tol=1e-5).fit(template.fibers)
    r = reg.register(subject.fibers)
    d, _ = bundle_distance(r.code, reg.template_code_)
    assert r.distance == d > 0
    assert r.rigid.name == "subject"
