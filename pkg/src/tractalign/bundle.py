"""The in-memory fiber bundle."""
from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import check_fibers
from .curves import arc_length, orient_fibers, resample
from .exceptions import FiberCountMismatch, GridMismatch


@dataclass(frozen=True, eq=False)
class Bundle:
    """A named set of ``N`` fibers sampled on a common grid of ``T`` points.

    ``profiles`` optionally carries one scalar per sample and fiber, shape
    (N, T).  ``provenance`` records where the data came from and how it was
    resampled.
    """
    name: str
    fibers: np.ndarray
    profiles: np.ndarray = None
    fiber_ids: tuple = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        fibers = check_fibers(self.fibers, f"bundle {self.name!r}")
        fibers.setflags(write=False)
        object.__setattr__(self, "fibers", fibers)
        if self.profiles is not None:
            profiles = np.ascontiguousarray(self.profiles, dtype=np.float64)
            if profiles.shape != fibers.shape[:2]:
                raise GridMismatch(
                    f"profiles shape {profiles.shape} does not match fibers "
                    f"{fibers.shape[:2]}")
            profiles.setflags(write=False)
            object.__setattr__(self, "profiles", profiles)
        if self.fiber_ids is None:
            object.__setattr__(self, "fiber_ids", tuple(range(len(fibers))))
        elif len(self.fiber_ids) != len(fibers):
            raise FiberCountMismatch(
                f"{len(self.fiber_ids)} fiber ids for {len(fibers)} fibers")
        else:
            object.__setattr__(self, "fiber_ids", tuple(self.fiber_ids))

    @property
    def n_fibers(self):
        return self.fibers.shape[0]

    @property
    def n_samples(self):
        return self.fibers.shape[1]

    def points(self):
        """All sample points as an (N*T, 3) array."""
        return self.fibers.reshape(-1, 3)

    def lengths(self):
        return np.array([arc_length(f) for f in self.fibers])

    def replace(self, **changes):
        return replace(self, **changes)


def prepare_fibers(streamlines, T, reference=None):
    """Resample variable-length streamlines to ``T`` points and orient them.

    Returns the (N, T, 3) array and a boolean array telling which fibers
    were reversed.
    """
    fibers = np.stack([resample(s, T) for s in streamlines])
    oriented = orient_fibers(fibers, reference)
    flipped = np.array([not np.array_equal(a, b) for a, b in zip(fibers, oriented)])
    return oriented, flipped


def subsample_indices(n, M, seed):
    """Deterministic choice of ``M`` of ``n`` fibers: a seeded offset and a
    fixed stride, wrapping around."""
    if n < M:
        raise FiberCountMismatch(f"bundle has {n} fibers, need at least {M}")
    if n == M:
        return np.arange(n)
    stride = n / M
    offset = (seed % n) / n * stride if seed is not None else 0.0
    idx = np.floor(offset + stride * np.arange(M)).astype(int) % n
    return np.sort(idx)
