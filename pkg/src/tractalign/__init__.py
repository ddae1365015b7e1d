"""Elastic coding and registration of white-matter fiber bundles.

A bundle is represented by the Karcher mean of its fibers' square-root
velocity functions plus the coefficients of each fiber's tangent vector at
that mean.  Two bundles are compared by warping one mean onto the other,
transporting the coefficients along the connecting geodesic and rotating
them in SO(N).
"""
from .bundle import Bundle
from .curves import (align_pair, apply_gamma, from_srvf, inner,
                     kabsch_rotation, optimal_gamma, resample, to_srvf)
from .estimators import BundleEncoder, BundleRegistration, code_bundle
from .exceptions import TractAlignError
from .mean import MeanResult, karcher_mean
from .metrics import (EvalReport, compare_alignments, hausdorff,
                      profile_variability, warp_profile)
from .registration import (bundle_distance, hard_align, procrustes_rotation,
                           rigid_align, soft_align)
from .tangent import (BundleCode, decode, encode, encode_bundle, exp_map,
                      log_map, make_basis)
from .transport import transport, transport_exact, transport_stepwise

__version__ = "0.1.0"

__all__ = [
    "Bundle", "BundleCode", "BundleEncoder", "BundleRegistration",
    "EvalReport", "MeanResult", "TractAlignError", "align_pair",
    "apply_gamma", "bundle_distance", "code_bundle", "compare_alignments",
    "decode", "encode", "encode_bundle", "exp_map", "from_srvf",
    "hard_align", "hausdorff", "inner", "kabsch_rotation", "karcher_mean",
    "log_map", "make_basis", "optimal_gamma", "procrustes_rotation",
    "profile_variability", "resample", "rigid_align", "soft_align",
    "to_srvf", "transport", "transport_exact", "transport_stepwise",
    "warp_profile",
]
