"""Input validation helpers shared by the functional API and the estimators."""
import numpy as np

from .exceptions import GridMismatch, NonMonotoneGamma, ShapeMismatch


def check_curve(x, name="curve", min_points=2):
    """Return ``x`` as a C-contiguous float64 array of shape (T, 3)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != 3:
        raise ShapeMismatch(f"{name} must have shape (T, 3), got {x.shape}")
    if x.shape[0] < min_points:
        raise ShapeMismatch(
            f"{name} needs at least {min_points} points, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains NaN or Inf")
    return x


def check_fibers(X, name="fibers", min_fibers=1):
    """Return a stack of equally sampled fibers as an (N, T, 3) float array."""
    if isinstance(X, (list, tuple)):
        lengths = {len(f) for f in X}
        if len(lengths) > 1:
            raise GridMismatch(
                f"{name} have different sample counts {sorted(lengths)}; "
                "resample them first")
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 3 or X.shape[2] != 3:
        raise ShapeMismatch(f"{name} must have shape (N, T, 3), got {X.shape}")
    if X.shape[0] < min_fibers:
        raise ShapeMismatch(
            f"{name} needs at least {min_fibers} fibers, got {X.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains NaN or Inf")
    return X


def check_same_grid(a, b):
    if a.shape != b.shape:
        raise GridMismatch(f"grid mismatch: {a.shape} vs {b.shape}")


def check_gamma(gamma, T=None, atol=1e-9):
    """Validate a reparameterization sampled on the uniform grid."""
    gamma = np.asarray(gamma, dtype=np.float64)
    if gamma.ndim != 1:
        raise NonMonotoneGamma(f"gamma must be 1-D, got shape {gamma.shape}")
    if T is not None and gamma.shape[0] != T:
        raise GridMismatch(f"gamma has {gamma.shape[0]} samples, expected {T}")
    if abs(gamma[0]) > atol or abs(gamma[-1] - 1.0) > atol:
        raise NonMonotoneGamma(
            f"gamma must fix the endpoints, got {gamma[0]!r} and {gamma[-1]!r}")
    if np.any(np.diff(gamma) < -atol):
        raise NonMonotoneGamma("gamma is decreasing somewhere")
    return gamma
