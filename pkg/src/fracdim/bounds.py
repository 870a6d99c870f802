"""Closed-form energy and concentration bounds for point sets near a region.

All bounds are for a region ``E`` whose covering numbers satisfy
``N_E(delta) <= max(C * delta**-k, 1)``; ``k`` and ``C`` travel with the
:class:`~fracdim.geometry.RegionSpec` and are never inferred from the shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .energy import EnergyCache, s_energy, s_energy_sweep
from .geometry import PointSet, RegionSpec, distances_to_region

__all__ = [
    "BoundError",
    "BoundReport",
    "thickening_constant",
    "energy_lower_bound",
    "concentration_bound",
    "thickened_energy_lower_bound",
    "critical_thickening",
    "halved_energy_lower_bound",
    "thickened_concentration_bound",
    "count_in_thickened_region",
    "verify_energy_lower_bound",
    "verify_concentration",
    "tightest_concentration_exponent",
]

# slack when testing membership in E itself (eps = 0), relative to the unit scale
MEMBERSHIP_ATOL = 1e-12


class BoundError(ValueError):
    pass


def _check(s: float, k: float) -> None:
    if not k > 0:
        raise BoundError(f"k must be positive, got {k}")
    if not s > k:
        raise BoundError(f"the bounds need s > k, got s={s}, k={k}")


def _check_c(c: float) -> None:
    if not (c > 0 and math.isfinite(c)):
        raise BoundError(f"covering constant must be positive and finite, got {c}")


def thickening_constant(s: float, k: float) -> float:
    """``s (s+1) (s-k) / (k (s-k+1))``, the constant controlling how much thickening is tolerated."""
    _check(s, k)
    return s * (s + 1.0) * (s - k) / (k * (s - k + 1.0))


def energy_lower_bound(s: float, k: float, c: float, n: int) -> float:
    """Smallest possible ``I_s`` of ``n`` points inside a region of dimension ``k``."""
    _check(s, k)
    _check_c(c)
    if n < 1:
        raise BoundError("n must be >= 1")
    r = s / k
    return k / (s - k) * c ** (-r) * (float(n) ** (r - 1.0) - 1.0)


def concentration_bound(s: float, k: float, c: float, energy: float, n: int) -> float:
    """Largest number of the ``n`` points that can lie in the region given their ``I_s``."""
    _check(s, k)
    _check_c(c)
    if not energy >= 0:
        raise BoundError("energy must be >= 0")
    r = s / k
    return (1.0 + c ** r * (r - 1.0) * energy) ** (1.0 / (r + 1.0)) * float(n) ** (2.0 / (r + 1.0))


def critical_thickening(s: float, k: float, c: float, n: int) -> float:
    """``C**(1/k) / (2 A) * n**(-1/k)``: the thickening at which the energy bound halves."""
    _check_c(c)
    return c ** (1.0 / k) / (2.0 * thickening_constant(s, k)) * float(n) ** (-1.0 / k)


def thickened_energy_lower_bound(s: float, k: float, c: float, n: int, eps: float) -> float:
    """Energy lower bound when every point is within ``eps`` of the region."""
    _check(s, k)
    _check_c(c)
    if not eps >= 0:
        raise BoundError("eps must be >= 0")
    r = s / k
    shrink = 1.0 - eps * thickening_constant(s, k) / (c ** (1.0 / k) * float(n) ** (-1.0 / k))
    return k / (s - k) * c ** (-r) * (shrink * float(n) ** (r - 1.0) - 1.0)


def halved_energy_lower_bound(s: float, k: float, c: float, n: int) -> float:
    """``k/(s-k) C**(-s/k) (n**(s/k-1) / 2 - 1)``, valid for any thickening up to the critical one."""
    _check(s, k)
    _check_c(c)
    r = s / k
    return k / (s - k) * c ** (-r) * (0.5 * float(n) ** (r - 1.0) - 1.0)


def thickened_concentration_bound(
    s: float, k: float, c: float, energy: float, n: int
) -> tuple[float, float]:
    """Bound on the count inside the critical thickening, and that thickening."""
    r = s / k
    value = 2.0 ** (1.0 / (r + 1.0)) * concentration_bound(s, k, c, energy, n)
    return value, critical_thickening(s, k, c, n)


def count_in_thickened_region(ps: PointSet, region: RegionSpec, eps: float, atol: float = 0.0) -> int:
    """Number of points at distance ``<= eps + atol`` from the region's shape."""
    if not eps >= 0:
        raise BoundError("eps must be >= 0")
    if region.dim != ps.dim:
        raise BoundError(f"region lives in R^{region.dim}, points in R^{ps.dim}")
    return int(np.count_nonzero(distances_to_region(ps.points, region) <= eps + atol))


@dataclass(frozen=True)
class BoundReport:
    """One checked inequality ``lhs <relation> rhs``."""

    bound: str
    lhs: float
    rhs: float
    relation: str  # ">=" or "<="
    inputs: dict = field(default_factory=dict)

    @property
    def satisfied(self) -> bool:
        return self.lhs >= self.rhs if self.relation == ">=" else self.lhs <= self.rhs

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs else math.inf

    def to_json(self) -> dict:
        return {
            "bound": self.bound,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "relation": self.relation,
            "satisfied": self.satisfied,
            "inputs": dict(self.inputs),
        }


def _energy(ps: PointSet, s: float, energy, cache, threads) -> float:
    if energy is not None:
        return float(energy)
    return s_energy(ps, s, cache=cache, threads=threads).value


def verify_energy_lower_bound(
    ps: PointSet,
    region: RegionSpec,
    s: float,
    eps: float = 0.0,
    *,
    energy: float | None = None,
    cache: EnergyCache | None = None,
    threads: int | None = None,
) -> BoundReport:
    """Check ``I_s(ps)`` against the (thickened) lower bound.

    Every point must lie within ``eps`` of the region, otherwise the bound
    does not apply and :class:`BoundError` is raised.
    """
    k, c = region.k, region.covering_constant
    _check(s, k)
    far = distances_to_region(ps.points, region).max()
    if far > eps + MEMBERSHIP_ATOL:
        raise BoundError(f"a point lies {far:.3g} from the region, beyond eps={eps}")
    value = _energy(ps, s, energy, cache, threads)
    rhs = thickened_energy_lower_bound(s, k, c, ps.n, eps) if eps > 0 else energy_lower_bound(s, k, c, ps.n)
    return BoundReport(
        "energy_lower" if eps == 0 else "thickened_energy_lower",
        value,
        rhs,
        ">=",
        {"s": s, "k": k, "C_E": c, "n": ps.n, "eps": eps, "I_s": value},
    )


def verify_concentration(
    ps: PointSet,
    region: RegionSpec,
    s: float,
    eps: Union[str, float] = "exact",
    *,
    energy: float | None = None,
    cache: EnergyCache | None = None,
    threads: int | None = None,
) -> BoundReport:
    """Count the points in (a thickening of) the region and compare with the bound.

    ``eps`` is ``"exact"`` (points on the region itself), ``"auto"`` (the
    critical thickening for ``n``) or a number no larger than the critical
    thickening; the latter two use the doubled-constant thickened bound.
    """
    k, c = region.k, region.covering_constant
    _check(s, k)
    if ps.dim != region.dim:
        raise BoundError(f"region lives in R^{region.dim}, points in R^{ps.dim}")
    eps_crit = critical_thickening(s, k, c, ps.n)
    if eps == "exact":
        used = 0.0
    elif eps == "auto":
        used = eps_crit
    else:
        try:
            used = float(eps)
        except (TypeError, ValueError) as exc:
            raise BoundError(f"eps must be 'exact', 'auto' or a number, got {eps!r}") from exc
        if not used >= 0:
            raise BoundError("eps must be >= 0")
        if used > eps_crit:
            raise BoundError(f"eps={used:g} exceeds the largest thickening covered by the bound, {eps_crit:g}")
    value = _energy(ps, s, energy, cache, threads)
    count = count_in_thickened_region(ps, region, used, atol=MEMBERSHIP_ATOL)
    if eps == "exact":
        rhs = concentration_bound(s, k, c, value, ps.n)
        name = "concentration"
    else:
        rhs = thickened_concentration_bound(s, k, c, value, ps.n)[0]
        name = "thickened_concentration"
    return BoundReport(
        name,
        float(count),
        rhs,
        "<=",
        {"s": s, "k": k, "C_E": c, "n": ps.n, "eps": used, "eps_critical": eps_crit, "I_s": value},
    )


def tightest_concentration_exponent(
    ps: PointSet,
    region: RegionSpec,
    s_values: Sequence[float],
    *,
    cache: EnergyCache | None = None,
    threads: int | None = None,
) -> tuple[float, float]:
    """Grid search for the exponent ``s > k`` giving the smallest concentration bound.

    Returns ``(s, bound)``. This is a plain scan; no optimality is claimed
    beyond the supplied grid.
    """
    k, c = region.k, region.covering_constant
    grid = sorted(float(s) for s in s_values if s > k)
    if not grid:
        raise BoundError(f"no exponent in the grid exceeds k={k}")
    results = s_energy_sweep(ps, grid, cache=cache, threads=threads)
    best = min(((concentration_bound(s, k, c, r.value, ps.n), s) for s, r in zip(grid, results)))
    return best[1], best[0]
