"""Compiled dynamic-programming kernel for elastic reparameterization.

The lattice objective matched by :func:`dp_lattice` is, for a monotone path
through grid nodes ``(i_0, j_0) = (0, 0), ..., (i_n, j_n) = (T-1, T-1)``,

    sum over segments of  h * sum_{s=0..a} w_s |q1[i0+s] - sqrt(b/a) q2(j0 + s*b/a)|^2

where ``(a, b)`` is the segment step, ``w_s`` are trapezoid weights (1/2 at
both segment ends, 1 inside) and ``q2(x)`` is linear interpolation at the
fractional grid index ``x``.  Summed over a path this is the trapezoid rule
for ``||q1 - sqrt(gamma') q2(gamma)||^2`` with piecewise-linear ``gamma``.
"""
import numpy as np
from numba import njit

# Steps (a, b) = (rows of q1, rows of q2) with 1 <= a, b <= 3, gcd(a, b) = 1.
# Order fixes tie-breaking: the first strictly better move wins.
MOVES = np.array(
    [[1, 1], [1, 2], [2, 1], [1, 3], [3, 1], [2, 3], [3, 2]], dtype=np.int64)


@njit(cache=True)
def segment_cost(q1, q2, i0, j0, a, b, h):
    """Cost of one lattice segment; reference version of the inner loop."""
    T = q2.shape[0]
    m = b / a
    sq = np.sqrt(m)
    acc = 0.0
    for s in range(a + 1):
        pos = j0 + s * m
        k = int(np.floor(pos))
        if k >= T - 1:
            k = T - 2
        frac = pos - k
        w = 0.5 if (s == 0 or s == a) else 1.0
        for c in range(3):
            val = (1.0 - frac) * q2[k, c] + frac * q2[k + 1, c]
            d = q1[i0 + s, c] - sq * val
            acc += w * d * d
    return acc * h


@njit(cache=True)
def dp_lattice(q1, q2, moves):
    """Return (cost table, predecessor move index table)."""
    T = q1.shape[0]
    h = 1.0 / (T - 1)
    n_moves = moves.shape[0]

    # Half-weight endpoint terms: ends[m, i, j] = 0.5 |q1[i] - sqrt(slope) q2[j]|^2
    ends = np.empty((n_moves, T, T))
    sq = np.empty(n_moves)
    for m in range(n_moves):
        sq[m] = np.sqrt(moves[m, 1] / moves[m, 0])
        for i in range(T):
            for j in range(T):
                acc = 0.0
                for c in range(3):
                    d = q1[i, c] - sq[m] * q2[j, c]
                    acc += d * d
                ends[m, i, j] = 0.5 * acc

    # Interior samples: integer offset into q2 and interpolation fraction.
    koff = np.zeros((n_moves, 3), dtype=np.int64)
    frac = np.zeros((n_moves, 3))
    for m in range(n_moves):
        a = moves[m, 0]
        b = moves[m, 1]
        for s in range(1, a):
            pos = s * b / a
            koff[m, s] = int(np.floor(pos))
            frac[m, s] = pos - koff[m, s]

    E = np.full((T, T), np.inf)
    P = np.full((T, T), -1, dtype=np.int64)
    E[0, 0] = 0.0
    for i in range(1, T):
        for j in range(1, T):
            best = np.inf
            arg = -1
            for m in range(n_moves):
                a = moves[m, 0]
                b = moves[m, 1]
                i0 = i - a
                j0 = j - b
                if i0 < 0 or j0 < 0:
                    continue
                prev = E[i0, j0]
                if prev == np.inf:
                    continue
                acc = ends[m, i0, j0] + ends[m, i, j]
                for s in range(1, a):
                    k = j0 + koff[m, s]
                    f = frac[m, s]
                    for c in range(3):
                        val = (1.0 - f) * q2[k, c] + f * q2[k + 1, c]
                        d = q1[i0 + s, c] - sq[m] * val
                        acc += d * d
                c_total = prev + acc * h
                if c_total < best:
                    best = c_total
                    arg = m
            E[i, j] = best
            P[i, j] = arg
    return E, P
