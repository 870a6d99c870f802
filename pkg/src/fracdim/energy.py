"""Discrete s-energy of point sets and fixed-radius ordered-pair counting.

The s-energy of ``P`` with ``n`` points is

    I_s(P) = n**-2 * sum_{p != p'} |p - p'|**-s

over ordered pairs. Two exact evaluation paths are provided:

``blocked``
    O(n^2) over fixed 1024x1024 index tiles. Each tile is summed serially with
    Neumaier compensation and tile partials are combined with ``math.fsum``,
    so the result does not depend on how many worker threads ran the tiles.

``product``
    For a Cartesian product of per-axis coordinate sets, the ordered-pair
    distance multiset is the product of per-axis difference multisets. The
    squared distances are merged into a spectrum ``{r^2: count}`` once and
    every exponent is then a weighted power sum over the spectrum. This is
    what makes million-point Cantor products affordable.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .geometry import PointSet, product_factors

__all__ = [
    "BLOCK",
    "EnergyError",
    "DuplicatePointsError",
    "EnergyResult",
    "EnergyCache",
    "resolve_threads",
    "s_energy",
    "s_energy_sweep",
    "count_close_pairs",
    "distance_spectrum",
]

BLOCK = 1024
SPECTRUM_CHUNK = 1 << 18
# per-axis coordinate count above which the product path stops paying off
_MAX_AXIS_SIZE = 4096


class EnergyError(ValueError):
    pass


class DuplicatePointsError(EnergyError):
    """Raised when a point set has repeated points (the energy is infinite)."""

    def __init__(self, pairs: Sequence[tuple[int, int]]):
        self.pairs = list(pairs)
        shown = ", ".join(f"{i}~{j}" for i, j in self.pairs[:10])
        more = "" if len(self.pairs) <= 10 else f" (+{len(self.pairs) - 10} more)"
        super().__init__(f"duplicate points at indices {shown}{more}; energy is infinite")


@dataclass(frozen=True)
class EnergyResult:
    s: float
    n: int
    value: float
    pair_count: int
    min_distance: float
    method: str = "blocked"

    def to_json(self) -> dict:
        return {
            "s": self.s,
            "n": self.n,
            "value": self.value,
            "pair_count": self.pair_count,
            "min_distance": self.min_distance,
            "method": self.method,
        }


class EnergyCache:
    """Energies keyed by ``(content hash, s)``."""

    def __init__(self) -> None:
        self._store: dict[tuple[str, float], EnergyResult] = {}

    def get(self, ps: PointSet, s: float) -> EnergyResult | None:
        return self._store.get((ps.content_hash, float(s)))

    def put(self, ps: PointSet, res: EnergyResult) -> None:
        self._store[(ps.content_hash, float(res.s))] = res

    def __len__(self) -> int:
        return len(self._store)


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit argument, else ``FRACDIM_THREADS``, else CPU count."""
    if threads is None:
        env = os.environ.get("FRACDIM_THREADS")
        if env:
            try:
                threads = int(env)
            except ValueError as exc:
                raise EnergyError(f"FRACDIM_THREADS must be an integer, got {env!r}") from exc
        else:
            threads = os.cpu_count() or 1
    if threads < 1:
        raise EnergyError("thread count must be >= 1")
    return int(threads)


def _tiles(n: int, block: int = BLOCK) -> list[tuple[int, int, int, int]]:
    starts = list(range(0, n, block))
    out = []
    for a, i0 in enumerate(starts):
        i1 = min(i0 + block, n)
        for j0 in starts[a:]:
            out.append((i0, i1, j0, min(j0 + block, n)))
    return out


def _run(fn, items: list, threads: int) -> list:
    if threads == 1 or len(items) == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _reduce(sums: np.ndarray, comps: np.ndarray) -> np.ndarray:
    """Exactly rounded column totals of ``sums + comps``; order independent.

    A column whose terms overflowed the double range totals ``inf``.
    """
    out = np.empty(sums.shape[1])
    for t in range(sums.shape[1]):
        if np.isinf(sums[:, t]).any():
            out[t] = math.inf
        else:
            out[t] = math.fsum(np.concatenate([sums[:, t], comps[:, t]]).tolist())
    return out


def _blocked_totals(pts: np.ndarray, s_arr: np.ndarray, threads: int) -> tuple[np.ndarray, float]:
    """Sum over unordered pairs of ``|p-p'|**-s`` for each (increasing) s; plus min squared distance."""
    mode0 = int(_kernels.power_modes(s_arr[:1])[0])
    gaps, fresh = _kernels.gap_plan(s_arr)
    tiles = _tiles(pts.shape[0])
    sums = np.zeros((len(tiles), len(s_arr)))
    comps = np.zeros_like(sums)
    mins = np.full(len(tiles), np.inf)

    def work(idx: int) -> None:
        i0, i1, j0, j1 = tiles[idx]
        mins[idx] = _kernels.tile_energy(
            pts, i0, i1, j0, j1, s_arr, mode0, gaps, fresh, sums[idx], comps[idx]
        )

    _run(work, list(range(len(tiles))), threads)
    return _reduce(sums, comps), float(mins.min())


def _axis_differences(coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distinct squared |x - x'| over ordered pairs of one axis, with counts."""
    diff = np.abs(coords[:, None] - coords[None, :]).ravel()
    vals, counts = np.unique(diff, return_counts=True)
    return vals * vals, counts.astype(np.float64)


def distance_spectrum(axes: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Squared-distance spectrum of the product of ``axes`` over ordered pairs.

    Returns increasing squared distances (including 0 for the diagonal) and
    the number of ordered pairs at each. Squared distances are accumulated
    axis by axis in the same order as the blocked kernel, so each value is
    bit-identical to the one the brute-force path computes for that pair.
    """
    sq = np.zeros(1)
    counts = np.ones(1)
    for coords in axes:
        a_sq, a_cnt = _axis_differences(np.asarray(coords, dtype=np.float64))
        total = (sq[:, None] + a_sq[None, :]).ravel()
        weight = (counts[:, None] * a_cnt[None, :]).ravel()
        sq, inverse = np.unique(total, return_inverse=True)
        counts = np.bincount(inverse.ravel(), weights=weight, minlength=len(sq))
        del total, weight, inverse
    return sq, counts


def _product_axes(ps: PointSet) -> list[np.ndarray] | None:
    if ps.dim < 2:
        return None
    axes = product_factors(ps)
    if axes is None:
        return None
    sizes = [len(a) for a in axes]
    if max(sizes) > _MAX_AXIS_SIZE or sum(m * m for m in sizes) * 4 > ps.n * ps.n:
        return None
    return axes


def _spectrum_totals(sq: np.ndarray, counts: np.ndarray, s_arr: np.ndarray, threads: int) -> np.ndarray:
    """Sum over ordered pairs with positive distance, for each (increasing) s."""
    sq = np.ascontiguousarray(sq[1:])  # drop the diagonal
    counts = np.ascontiguousarray(counts[1:])
    mode0 = int(_kernels.power_modes(s_arr[:1])[0])
    gaps, fresh = _kernels.gap_plan(s_arr)
    chunks = list(range(0, len(sq), SPECTRUM_CHUNK)) or [0]
    sums = np.zeros((len(chunks), len(s_arr)))
    comps = np.zeros_like(sums)

    def work(idx: int) -> None:
        start = chunks[idx]
        stop = min(start + SPECTRUM_CHUNK, len(sq))
        _kernels.spectrum_energy(
            sq, counts, s_arr, mode0, gaps, fresh, sums[idx], comps[idx], start, stop
        )

    _run(work, list(range(len(chunks))), threads)
    return _reduce(sums, comps)


def _validate(ps: PointSet, s_values: Iterable[float]) -> np.ndarray:
    if ps.n < 2:
        raise EnergyError("the s-energy needs at least two points")
    s_arr = np.asarray([float(s) for s in s_values], dtype=np.float64)
    if s_arr.size == 0:
        raise EnergyError("no exponents given")
    if not np.all(np.isfinite(s_arr)) or np.any(s_arr < 0):
        raise EnergyError("exponents must be finite and >= 0")
    dups = ps.duplicates()
    if dups:
        raise DuplicatePointsError(dups)
    return s_arr


def s_energy_sweep(
    ps: PointSet,
    s_values: Iterable[float],
    *,
    threads: int | None = None,
    method: str = "auto",
    cache: EnergyCache | None = None,
) -> list[EnergyResult]:
    """``I_s(ps)`` for every ``s`` in ``s_values`` from one pass over the pairs.

    ``method`` is ``"auto"`` (product spectrum when ``ps`` is a Cartesian
    product of modest axes, else blocked), ``"blocked"`` or ``"product"``.
    """
    s_arr = _validate(ps, s_values)
    if method not in ("auto", "blocked", "product"):
        raise EnergyError(f"unknown energy method {method!r}")
    threads = resolve_threads(threads)

    missing = [float(s) for s in s_arr if cache is None or cache.get(ps, s) is None]
    fresh: dict[float, EnergyResult] = {}
    if missing:
        todo = np.asarray(sorted(set(missing)))
        n = ps.n
        axes = None
        if method == "product":
            axes = product_factors(ps)
            if axes is None:
                raise EnergyError("point set is not a Cartesian product of per-axis sets")
        elif method == "auto":
            axes = _product_axes(ps)
        if axes is not None:
            sq, counts = distance_spectrum(axes)
            totals = _spectrum_totals(sq, counts, todo, threads)
            min_d2 = float(sq[1])
            used = "product"
        else:
            pts = np.ascontiguousarray(ps.points)
            unordered, min_d2 = _blocked_totals(pts, todo, threads)
            totals = 2.0 * unordered
            used = "blocked"
        min_dist = math.sqrt(min_d2)
        for s, tot in zip(todo.tolist(), totals.tolist()):
            res = EnergyResult(s, n, tot / (float(n) * float(n)), n * (n - 1), min_dist, used)
            fresh[s] = res
            if cache is not None:
                cache.put(ps, res)

    out = []
    for s in s_arr.tolist():
        res = fresh.get(s)
        if res is None:
            res = cache.get(ps, s)  # type: ignore[union-attr]
        out.append(res)
    return out


def s_energy(ps: PointSet, s: float, **kwargs) -> EnergyResult:
    """Discrete s-energy ``n**-2 * sum_{p != p'} |p - p'|**-s``."""
    return s_energy_sweep(ps, [s], **kwargs)[0]


def count_close_pairs(
    ps: PointSet, r: float, *, threads: int | None = None, method: str = "auto"
) -> int:
    """Ordered pairs ``(p, p')``, including ``p == p'``, with ``|p - p'| <= r``."""
    r = float(r)
    if not r >= 0:
        raise EnergyError("radius must be >= 0")
    threads = resolve_threads(threads)
    axes = _product_axes(ps) if method == "auto" else None
    if method == "product":
        axes = product_factors(ps)
        if axes is None:
            raise EnergyError("point set is not a Cartesian product of per-axis sets")
    if axes is not None:
        sq, counts = distance_spectrum(axes)
        return int(round(math.fsum(counts[np.sqrt(sq) <= r].tolist())))
    pts = np.ascontiguousarray(ps.points)
    tiles = _tiles(ps.n)
    counts = _run(lambda t: _kernels.tile_close_pairs(pts, t[0], t[1], t[2], t[3], r), tiles, threads)
    return ps.n + 2 * int(sum(counts))
