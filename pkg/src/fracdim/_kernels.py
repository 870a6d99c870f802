"""Compiled inner loops for the pairwise energy and pair-count kernels.

Every kernel works on one rectangular tile of index ranges and is
single-threaded, so a tile's result depends only on its inputs. Callers
reduce tile partials in a fixed order.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# power-evaluation modes for each requested exponent
MODE_GENERAL = 0
MODE_ZERO = 1
MODE_ONE = 2
MODE_TWO = 3


def power_modes(s_values: np.ndarray) -> np.ndarray:
    modes = np.full(len(s_values), MODE_GENERAL, dtype=np.int64)
    modes[s_values == 0.0] = MODE_ZERO
    modes[s_values == 1.0] = MODE_ONE
    modes[s_values == 2.0] = MODE_TWO
    return modes


def gap_plan(s_sorted: np.ndarray, rel_tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Gaps between consecutive exponents and whether each needs a fresh ``exp``.

    A gap equal (to ``rel_tol``) to its predecessor reuses the previous
    per-pair factor ``r**-gap``, so a uniform grid costs two ``exp`` calls per
    pair regardless of its length.
    """
    gaps = np.diff(s_sorted, prepend=s_sorted[:1])
    fresh = np.ones(len(s_sorted), dtype=np.bool_)
    for t in range(2, len(s_sorted)):
        if abs(gaps[t] - gaps[t - 1]) <= rel_tol * max(abs(gaps[t]), 1e-300):
            fresh[t] = False
            gaps[t] = gaps[t - 1]
    return gaps, fresh


@njit(nogil=True, cache=True)
def tile_energy(pts, i0, i1, j0, j1, s_values, mode0, gaps, fresh, out_sum, out_comp):
    """Compensated sums of ``|p_i - p_j|**-s`` over pairs ``i < j`` of the tile.

    ``s_values`` must be increasing. The first exponent is evaluated directly
    (``mode0`` selects the fast path for s in {0, 1, 2}); each further one is
    the previous term times ``exp(-gap/2 * ln r^2)``. Each row segment is
    summed plainly, segments are added into the tile total with Neumaier
    compensation. Returns the smallest squared distance in the tile.
    """
    ns = s_values.shape[0]
    d = pts.shape[1]
    need_log = ns > 1 or mode0 == MODE_GENERAL
    h0 = -0.5 * s_values[0]
    row = np.zeros(ns)
    acc = np.zeros(ns)
    comp = np.zeros(ns)
    min_d2 = np.inf
    for i in range(i0, i1):
        jstart = j0 if j0 > i else i + 1
        if jstart >= j1:
            continue
        for t in range(ns):
            row[t] = 0.0
        for j in range(jstart, j1):
            d2 = 0.0
            for c in range(d):
                diff = pts[i, c] - pts[j, c]
                d2 += diff * diff
            if d2 < min_d2:
                min_d2 = d2
            lg = np.log(d2) if need_log else 0.0
            if mode0 == MODE_ZERO:
                term = 1.0
            elif mode0 == MODE_ONE:
                term = 1.0 / np.sqrt(d2)
            elif mode0 == MODE_TWO:
                term = 1.0 / d2
            else:
                term = np.exp(h0 * lg)
            row[0] += term
            w = 1.0
            for t in range(1, ns):
                if fresh[t]:
                    w = np.exp(-0.5 * gaps[t] * lg)
                term *= w
                row[t] += term
        for t in range(ns):
            x = row[t]
            a = acc[t]
            s = a + x
            if abs(a) >= abs(x):
                comp[t] += (a - s) + x
            else:
                comp[t] += (x - s) + a
            acc[t] = s
    for t in range(ns):
        out_sum[t] = acc[t]
        out_comp[t] = comp[t]
    return min_d2


@njit(nogil=True, cache=True)
def tile_close_pairs(pts, i0, i1, j0, j1, r):
    """Number of pairs ``i < j`` in the tile with ``|p_i - p_j| <= r``."""
    d = pts.shape[1]
    count = 0
    for i in range(i0, i1):
        jstart = j0 if j0 > i else i + 1
        for j in range(jstart, j1):
            d2 = 0.0
            for c in range(d):
                diff = pts[i, c] - pts[j, c]
                d2 += diff * diff
            if np.sqrt(d2) <= r:
                count += 1
    return count


@njit(nogil=True, cache=True)
def spectrum_energy(sq, counts, s_values, mode0, gaps, fresh, out_sum, out_comp, start, stop):
    """Compensated ``sum counts[i] * sq[i]**(-s/2)`` over ``sq[start:stop]``.

    Same exponent recurrence as :func:`tile_energy`; ``s_values`` increasing.
    """
    ns = s_values.shape[0]
    h0 = -0.5 * s_values[0]
    acc = np.zeros(ns)
    comp = np.zeros(ns)
    for i in range(start, stop):
        d2 = sq[i]
        lg = np.log(d2)
        if mode0 == MODE_ZERO:
            term = counts[i]
        elif mode0 == MODE_ONE:
            term = counts[i] / np.sqrt(d2)
        elif mode0 == MODE_TWO:
            term = counts[i] / d2
        else:
            term = counts[i] * np.exp(h0 * lg)
        w = 1.0
        for t in range(ns):
            if t > 0:
                if fresh[t]:
                    w = np.exp(-0.5 * gaps[t] * lg)
                term *= w
            a = acc[t]
            s = a + term
            if abs(a) >= abs(term):
                comp[t] += (a - s) + term
            else:
                comp[t] += (term - s) + a
            acc[t] = s
    for t in range(ns):
        out_sum[t] = acc[t]
        out_comp[t] = comp[t]
