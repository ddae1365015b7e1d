"""Evaluation metrics: point-set Hausdorff distance and along-tract profiles."""
import csv
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ._validation import check_gamma
from .curves import grid
from .exceptions import EmptySet, GridMismatch, PairMismatch, TooFewProfiles

REPORT_COLUMNS = ("pair_id", "tract_name", "rigid_hausdorff", "soft_hausdorff",
                  "difference")


def _as_points(X, name):
    X = np.asarray(X, dtype=np.float64).reshape(-1, 3)
    if X.shape[0] == 0:
        raise EmptySet(f"{name} is empty")
    return X


def directed_hausdorff(X, Y):
    """``max over x in X of min over y in Y of |x - y|``."""
    X, Y = _as_points(X, "X"), _as_points(Y, "Y")
    d, _ = cKDTree(Y).query(X, k=1)
    return float(d.max())


def hausdorff(X, Y):
    """Bidirectional Hausdorff distance between two point sets.

    Fiber bundles may be passed directly; all sample points are pooled.
    """
    return max(directed_hausdorff(X, Y), directed_hausdorff(Y, X))


def warp_profile(profile, gamma):
    """Resample a scalar profile at ``gamma(t_j)`` by linear interpolation."""
    profile = np.asarray(profile, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    if profile.ndim != 1 or profile.shape != gamma.shape:
        raise GridMismatch(
            f"profile shape {profile.shape} does not match gamma {gamma.shape}")
    gamma = check_gamma(gamma)
    out = np.interp(gamma, grid(len(profile)), profile)
    out[0], out[-1] = profile[0], profile[-1]
    return out


def profile_variability(profiles):
    """Mean over the grid of the across-fiber sample standard deviation."""
    profiles = np.asarray(profiles, dtype=np.float64)
    if profiles.ndim != 2:
        raise GridMismatch(f"profiles must be (N, T), got {profiles.shape}")
    if profiles.shape[0] < 2:
        raise TooFewProfiles(f"need at least 2 profiles, got {profiles.shape[0]}")
    # Centering on one profile makes identical inputs give exactly zero.
    return float((profiles - profiles[0]).std(axis=0, ddof=1).mean())


@dataclass(frozen=True)
class PairRow:
    pair_id: str
    tract_name: str
    rigid_hausdorff: float
    soft_hausdorff: float

    @property
    def difference(self):
        return self.soft_hausdorff - self.rigid_hausdorff


@dataclass(frozen=True)
class EvalReport:
    """Per-pair Hausdorff distances and per-tract summaries.

    ``difference`` is soft minus rigid, so negative means soft is closer.
    """
    rows: tuple

    def tracts(self):
        return sorted({r.tract_name for r in self.rows})

    def summary(self):
        out = {}
        for tract in self.tracts():
            rows = [r for r in self.rows if r.tract_name == tract]
            rigid = np.array([r.rigid_hausdorff for r in rows])
            soft = np.array([r.soft_hausdorff for r in rows])
            diff = soft - rigid
            sd = (lambda x: float(x.std(ddof=1)) if len(x) > 1 else 0.0)
            out[tract] = {
                "n": len(rows),
                "rigid_mean": float(rigid.mean()), "rigid_sd": sd(rigid),
                "soft_mean": float(soft.mean()), "soft_sd": sd(soft),
                "difference_mean": float(diff.mean()), "difference_sd": sd(diff),
            }
        return out

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(REPORT_COLUMNS)
            for r in self.rows:
                writer.writerow([r.pair_id, r.tract_name, repr(r.rigid_hausdorff),
                                 repr(r.soft_hausdorff), repr(r.difference)])


def compare_alignments(rigid, soft):
    """Hausdorff distances to the template for rigid and soft results.

    ``rigid`` and ``soft`` are sequences of
    ``(pair_id, tract_name, moved_fibers, template_fibers)`` tuples, paired
    by position; ids and tract names must agree.
    """
    if len(rigid) != len(soft):
        raise PairMismatch(f"{len(rigid)} rigid results vs {len(soft)} soft results")
    rows = []
    for r, s in zip(rigid, soft):
        if (r[0], r[1]) != (s[0], s[1]):
            raise PairMismatch(f"pair {r[0]!r}/{r[1]!r} is matched with {s[0]!r}/{s[1]!r}")
        rows.append(PairRow(str(r[0]), str(r[1]), hausdorff(r[2], r[3]),
                            hausdorff(s[2], s[3])))
    return EvalReport(tuple(rows))
