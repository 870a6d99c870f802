"""Regenerate the numerical series behind the energy, PCA and dimension experiments.

Each experiment returns ``(payload, rows, ok)``: a JSON-ready payload, CSV
plot rows ``(x, y, series)`` and whether the experiment's built-in sanity
check held.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .dimension import cantor_product_dimension, estimate_dimension
from .energy import EnergyCache, s_energy
from .generators import CantorParams, gen_cantor, gen_cantor_product, gen_lattice
from .geometry import PointFamily
from .pca import pca_compare

__all__ = ["EXPERIMENTS", "DEFAULT_LEVELS", "ALIASES", "run_experiment"]

Rows = list[tuple[float, float, str]]

# upper level per experiment; keeps each run under roughly 1e9 pair operations
DEFAULT_LEVELS = {
    "energy-cantor-s0.5": 14,
    "energy-cantor-s0.1": 14,
    "energy-lattice-s2": 110,
    "energy-lattice-s1.5": 110,
    "pca-grid-vs-garnett": 5,
    "dim-table": 7,
}
MIN_LEVELS = {"dim-table": 5, "pca-grid-vs-garnett": 3}
ALIASES = {"energy-lattice": "energy-lattice-s2", "energy-cantor": "energy-cantor-s0.5"}


def _cantor_series(s: float, level: int, threads: int | None) -> tuple[dict, Rows, bool]:
    ks, ns, values = [], [], []
    for k in range(1, level + 1):
        ps = gen_cantor(CantorParams(2, 4, k))
        ks.append(k)
        ns.append(ps.n)
        values.append(s_energy(ps, s, threads=threads).value)
    rows = [(float(k), v, f"I_{s:g}(C_2,4^k)") for k, v in zip(ks, values)]
    payload = {"s": s, "m": 2, "n": 4, "k": ks, "points": ns, "energy": values}
    return payload, rows, all(math.isfinite(v) for v in values)


def _lattice_series(s: float, level: int, threads: int | None) -> tuple[dict, Rows, bool]:
    ks, values = [], []
    for k in range(1, level + 1):
        ks.append(k)
        values.append(s_energy(gen_lattice(2, k + 1), s, threads=threads).value)
    rows = [(float(k), v, f"I_{s:g}(lattice q=k+1)") for k, v in zip(ks, values)]
    nondecreasing = all(b >= a for a, b in zip(values, values[1:]))
    payload = {"s": s, "d": 2, "k": ks, "q": [k + 1 for k in ks], "energy": values, "nondecreasing": nondecreasing}
    return payload, rows, nondecreasing


def _pca_grid_vs_garnett(level: int, threads: int | None) -> tuple[dict, Rows, bool]:
    grid = gen_lattice(2, 33)
    garnett = gen_cantor_product([CantorParams(2, 4, level)] * 2)
    cmp = pca_compare(grid, garnett)
    ratio_gap = float(np.max(np.abs(cmp.first.explained_variance_ratio - cmp.second.explained_variance_ratio)))
    cache = EnergyCache()
    grid_family = PointFamily(tuple(gen_lattice(2, q) for q in (9, 17, 33, 65)), "grid")
    garnett_family = PointFamily(
        tuple(gen_cantor_product([CantorParams(2, 4, k)] * 2) for k in range(max(1, level - 2), level + 3)),
        "garnett",
    )
    est_grid = estimate_dimension(grid_family, threads=threads, cache=cache)
    est_garnett = estimate_dimension(garnett_family, threads=threads, cache=cache)
    payload = {
        "grid_q": 33,
        "garnett_level": level,
        "pca": cmp.to_json(),
        "explained_variance_gap": ratio_gap,
        "dimension_grid": est_grid.value,
        "dimension_garnett": est_garnett.value,
    }
    rows: Rows = []
    for name, rep in (("grid", cmp.first), ("garnett", cmp.second)):
        rows += [(float(i + 1), float(r), f"explained variance {name}") for i, r in enumerate(rep.explained_variance_ratio)]
    rows += [(1.0, est_grid.value, "dimension grid"), (1.0, est_garnett.value, "dimension garnett")]
    return payload, rows, ratio_gap <= 1e-6


def _dim_table(level: int, threads: int | None) -> tuple[dict, Rows, bool]:
    spec = [
        ("C_2,4 x C_2,4", [(2, 4), (2, 4)], range(3, level + 1)),
        ("C_2,3 x C_2,3", [(2, 3), (2, 3)], range(3, level + 1)),
        ("C_2,4 x C_2,3 x C_2,3", [(2, 4), (2, 3), (2, 3)], range(2, max(4, level - 2) + 1)),
    ]
    table, rows = [], []
    for label, factors, levels in spec:
        family = PointFamily(
            tuple(gen_cantor_product([CantorParams(m, n, k) for m, n in factors]) for k in levels), label
        )
        est = estimate_dimension(family, threads=threads)
        exact = cantor_product_dimension(factors)
        table.append(
            {
                "family": label,
                "levels": list(levels),
                "formula": exact,
                "estimate": est.value,
                "boundary": est.boundary,
                "error": est.value - exact,
            }
        )
        rows.append((exact, est.value, label))
    ok = all(abs(r["error"]) <= 0.15 for r in table)
    return {"rows": table}, rows, ok


EXPERIMENTS: dict[str, Callable[[int, int | None], tuple[dict, Rows, bool]]] = {
    "energy-cantor-s0.5": lambda lv, th: _cantor_series(0.5, lv, th),
    "energy-cantor-s0.1": lambda lv, th: _cantor_series(0.1, lv, th),
    "energy-lattice-s2": lambda lv, th: _lattice_series(2.0, lv, th),
    "energy-lattice-s1.5": lambda lv, th: _lattice_series(1.5, lv, th),
    "pca-grid-vs-garnett": _pca_grid_vs_garnett,
    "dim-table": _dim_table,
}


def run_experiment(name: str, level: int | None = None, threads: int | None = None) -> tuple[dict, Rows, bool]:
    name = ALIASES.get(name, name)
    if name not in EXPERIMENTS:
        raise KeyError(name)
    level = DEFAULT_LEVELS[name] if level is None else int(level)
    if level < MIN_LEVELS.get(name, 1):
        raise ValueError(f"{name} needs level >= {MIN_LEVELS.get(name, 1)}")
    return EXPERIMENTS[name](level, threads)
