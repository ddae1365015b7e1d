"""Random test objects shared by the test modules."""
import numpy as np
from scipy.stats import special_ortho_group

from tractalign._dp import MOVES
from tractalign.curves import grid, l2_norm, resample, to_srvf
from tractalign.tangent import project_tangent


def random_fiber(rng, T=100, n_modes=4, scale=10.0):
    """Smooth random open curve, resampled by arc length to ``T`` points."""
    s = np.linspace(0.0, 1.0, 400)
    f = np.outer(s, rng.normal(size=3)) * 3 * scale
    for m in range(1, n_modes + 1):
        f += np.outer(np.sin(np.pi * m * s), rng.normal(size=3)) * scale / m
        f += np.outer(np.cos(np.pi * m * s), rng.normal(size=3)) * scale / m
    return resample(f, T)


def random_srvf(rng, T=100):
    return to_srvf(random_fiber(rng, T))


def random_gamma(rng, T=100, strength=0.5, n_modes=3):
    """Smooth strictly increasing warp with fixed endpoints."""
    t = grid(T)
    logd = sum(rng.uniform(-1, 1) * strength / m * np.cos(np.pi * m * t)
               for m in range(1, n_modes + 1))
    d = np.exp(logd)
    g = np.concatenate([[0.0], np.cumsum((d[1:] + d[:-1]) / 2)])
    g /= g[-1]
    g[0], g[-1] = 0.0, 1.0
    return g


def random_rotation(rng, dim=3):
    return special_ortho_group.rvs(dim, random_state=rng)


def random_tangent(rng, base, norm=1.0):
    v = project_tangent(base, random_srvf(rng, base.shape[0]))
    return v * (norm / l2_norm(v))


def segment_cost(q1, q2, i0, j0, a, b):
    # Trapezoid rule over the a+1 samples of q1 against interpolated q2.
    h = 1.0 / (len(q1) - 1)
    pos = j0 + np.arange(a + 1) * b / a
    q2i = np.column_stack([np.interp(pos, np.arange(len(q2)), q2[:, c])
                           for c in range(3)])
    err = np.sum((q1[i0:i0 + a + 1] - np.sqrt(b / a) * q2i) ** 2, axis=1)
    return np.trapezoid(err, dx=h)


def all_lattice_paths(T):
    """Every monotone lattice path from (0, 0) to (T-1, T-1)."""
    moves = [tuple(m) for m in MOVES]
    paths = []

    def walk(i, j, path):
        if (i, j) == (T - 1, T - 1):
            paths.append(path)
            return
        for a, b in moves:
            if i + a < T and j + b < T:
                walk(i + a, j + b, path + [(i, j, a, b)])

    walk(0, 0, [])
    return paths


def brute_force_min(q1, q2, paths):
    """Smallest squared matching cost over an explicit list of paths."""
    costs = {}
    best = np.inf
    for path in paths:
        c = 0.0
        for seg in path:
            if seg not in costs:
                costs[seg] = segment_cost(q1, q2, *seg)
            c += costs[seg]
        best = min(best, c)
    return best
