"""Dimension estimates for point families from the growth of their s-energies.

A family has dimension ``D`` when ``I_s`` stays bounded along the family for
``s < D`` and grows for ``s > D``. Boundedness cannot be observed from finitely
many members, so growth is judged from fitted log-log slopes on a grid of s.

Two criteria are offered:

``increment`` (default)
    Fit ``log(I_s(P_{i+1}) - I_s(P_i))`` against ``log n_{i+1}``. For a
    bounded, converging sequence the increments shrink (negative slope); for a
    divergent one they grow. The estimate is the zero crossing of this slope.
    Both sides of the crossing behave like ``s/D - 1``, so the crossing is
    unbiased even at small sizes.

``threshold``
    Fit ``log I_s`` against ``log n`` directly and take the largest s whose
    slope stays at or below a small threshold (0.1 by default). Near the
    critical exponent ``I_s`` grows only logarithmically, so at desk-scale
    sizes this criterion tends to land below the true dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .energy import EnergyCache, s_energy_sweep
from .geometry import PointFamily

__all__ = [
    "DimensionError",
    "SlopeFit",
    "DimensionEstimate",
    "MIN_SIZE_RATIO",
    "family_energies",
    "slope_fit",
    "increment_slope",
    "estimate_dimension",
    "s_grid",
    "cantor_product_dimension",
    "holder_dimension_bound",
]

# smallest accepted max(n)/min(n) across a family
MIN_SIZE_RATIO = 8.0
DEFAULT_TAU = {"threshold": 0.1, "increment": 0.0}


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares fit ``log y = slope * log n + intercept``; residual is the RMS misfit."""

    s: float
    slope: float
    intercept: float
    residual: float
    n_values: tuple[int, ...]

    def to_json(self) -> dict:
        return {
            "s": self.s,
            "slope": self.slope,
            "intercept": self.intercept,
            "residual": self.residual,
            "n_values": list(self.n_values),
        }


@dataclass(frozen=True)
class DimensionEstimate:
    value: float
    slopes: tuple[SlopeFit, ...]
    tau: float
    method: str
    boundary: str = "none"  # "none", "lower" or "upper"
    increment_slopes: tuple[float | None, ...] = ()
    energies: tuple[tuple[float, ...], ...] = field(default=(), repr=False)

    @property
    def s_values(self) -> list[float]:
        return [f.s for f in self.slopes]

    @property
    def flagged(self) -> bool:
        return self.boundary != "none"

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "method": self.method,
            "tau": self.tau,
            "boundary": self.boundary,
            "slopes": [f.to_json() for f in self.slopes],
            "increment_slopes": list(self.increment_slopes),
            "energies": [list(row) for row in self.energies],
        }


def _check_family(family: PointFamily, min_ratio: float) -> np.ndarray:
    if len(family) < 3:
        raise DimensionError(f"a slope fit needs at least 3 family members, got {len(family)}")
    ns = np.asarray(family.sizes, dtype=np.float64)
    if ns[-1] / ns[0] < min_ratio:
        raise DimensionError(f"family sizes span a ratio of {ns[-1] / ns[0]:g}, need >= {min_ratio:g}")
    return ns


def family_energies(
    family: PointFamily,
    s_values: Sequence[float],
    *,
    threads: int | None = None,
    cache: EnergyCache | None = None,
) -> np.ndarray:
    """``I_s`` for every member (rows) and exponent (columns)."""
    cache = cache if cache is not None else EnergyCache()
    rows = []
    for ps in family:
        rows.append([r.value for r in s_energy_sweep(ps, s_values, threads=threads, cache=cache)])
    energies = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(energies)) or np.any(energies <= 0):
        raise DimensionError("energies must be finite and positive")
    return energies


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    slope = float(np.dot(dx, y - ym) / np.dot(dx, dx))
    intercept = float(ym - slope * xm)
    resid = y - (slope * x + intercept)
    return slope, intercept, float(math.sqrt(np.mean(resid * resid)))


def _fit(s: float, ns: np.ndarray, values: np.ndarray) -> SlopeFit:
    slope, intercept, residual = _ols(np.log(ns), np.log(values))
    return SlopeFit(float(s), slope, intercept, residual, tuple(int(n) for n in ns))


def slope_fit(
    family: PointFamily,
    s: float,
    *,
    threads: int | None = None,
    cache: EnergyCache | None = None,
    min_ratio: float = MIN_SIZE_RATIO,
) -> SlopeFit:
    """Least-squares slope of ``log I_s(P_n)`` against ``log n`` over the family."""
    ns = _check_family(family, min_ratio)
    energies = family_energies(family, [s], threads=threads, cache=cache)
    return _fit(s, ns, energies[:, 0])


def increment_slope(ns: np.ndarray, values: np.ndarray) -> float | None:
    """Slope of ``log(I(n_{i+1}) - I(n_i))`` against ``log n_{i+1}``.

    ``None`` when some increment is not positive: the sequence is not
    growing there.
    """
    inc = np.diff(values)
    if np.any(inc <= 0):
        return None
    return _ols(np.log(ns[1:]), np.log(inc))[0]


def s_grid(s_min: float, s_max: float, step: float) -> np.ndarray:
    """``s_min, s_min + step, ...`` up to and including ``s_max``, values rounded to 1e-10."""
    count = int(math.floor((s_max - s_min) / step + 1e-9))
    grid = s_min + step * np.arange(count + 1)
    if s_max - grid[-1] > 1e-9 * max(1.0, step):
        grid = np.append(grid, s_max)
    return np.round(grid, 10)


def _crossing(grid: np.ndarray, slopes: list[float | None], tau: float) -> tuple[float, str]:
    above = [v is not None and v > tau for v in slopes]
    if not any(above):
        return float(grid[-1]), "upper"
    i = above.index(True)
    if i == 0:
        return float(grid[0]), "lower"
    lo, hi = slopes[i - 1], slopes[i]
    if lo is None:
        return float(grid[i - 1]), "none"
    frac = (tau - lo) / (hi - lo)  # type: ignore[operator]
    return float(grid[i - 1] + frac * (grid[i] - grid[i - 1])), "none"


def estimate_dimension(
    family: PointFamily,
    s_min: float = 0.0,
    s_max: float | None = None,
    step: float = 0.05,
    tau: float | None = None,
    *,
    method: str = "increment",
    threads: int | None = None,
    cache: EnergyCache | None = None,
    min_ratio: float = MIN_SIZE_RATIO,
) -> DimensionEstimate:
    """Estimate the critical exponent of ``family`` on the grid ``s_min:step:s_max``.

    ``s_max`` defaults to the ambient dimension. ``tau`` defaults to 0 for the
    increment criterion and 0.1 for the threshold criterion. When the
    criterion is already met at ``s_min`` or never met up to ``s_max`` the
    returned value sits on that end of the range and ``boundary`` says so.
    """
    if method not in DEFAULT_TAU:
        raise DimensionError(f"unknown method {method!r}; use 'increment' or 'threshold'")
    d = family.dim
    s_max = float(d) if s_max is None else float(s_max)
    tau = DEFAULT_TAU[method] if tau is None else float(tau)
    if not 0 <= s_min < s_max <= d:
        raise DimensionError(f"need 0 <= s_min < s_max <= {d}, got {s_min}, {s_max}")
    if not step > 0:
        raise DimensionError("step must be positive")
    if tau < 0 or (method == "threshold" and tau == 0):
        raise DimensionError("tau must be positive (non-negative for the increment criterion)")
    ns = _check_family(family, min_ratio)

    grid = s_grid(float(s_min), s_max, float(step))
    energies = family_energies(family, grid.tolist(), threads=threads, cache=cache)
    fits = tuple(_fit(s, ns, energies[:, j]) for j, s in enumerate(grid.tolist()))
    incs = tuple(increment_slope(ns, energies[:, j]) for j in range(len(grid)))

    used: list[float | None] = list(incs) if method == "increment" else [f.slope for f in fits]
    value, boundary = _crossing(grid, used, tau)
    return DimensionEstimate(
        value=min(max(value, 0.0), float(d)),
        slopes=fits,
        tau=tau,
        method=method,
        boundary=boundary,
        increment_slopes=incs,
        energies=tuple(tuple(row) for row in energies.tolist()),
    )


def cantor_product_dimension(factors: Iterable[tuple[int, int]]) -> float:
    """``sum ln(m_i) / ln(n_i)`` for a product of keep-m-of-n Cantor sets."""
    total = 0.0
    factors = list(factors)
    if not factors:
        raise DimensionError("need at least one (m, n) factor")
    for m, n in factors:
        if not (1 <= m < n):
            raise DimensionError(f"need 1 <= m < n, got ({m}, {n})")
        total += math.log(m) / math.log(n)
    return total


def holder_dimension_bound(d: int, alpha: float) -> float:
    """Upper bound ``d - alpha`` for graphs of order-alpha Hölder functions on ``[0,1]^(d-1)``."""
    if not 0 < alpha <= 1:
        raise DimensionError(f"Hölder order must lie in (0, 1], got {alpha}")
    if d < 2:
        raise DimensionError("graphs need d >= 2")
    return float(d) - float(alpha)
