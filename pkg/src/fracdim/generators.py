"""Synthetic point families: discrete Cantor sets and products, lattices,
densified lattices, Weierstrass graphs and general sampled graphs."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .geometry import GeometryError, PointSet

__all__ = [
    "CantorParams",
    "WeierstrassParams",
    "gen_cantor",
    "gen_cantor_product",
    "gen_lattice",
    "gen_adversarial_lattice",
    "gen_weierstrass_graph",
    "weierstrass",
    "gen_graph_from_samples",
    "grid_indices",
    "random_phases",
    "default_truncation",
    "holder_exponent",
    "from_params",
]


def _even_indices(m: int) -> tuple[int, ...]:
    return tuple(range(0, 2 * m, 2))


@dataclass(frozen=True)
class CantorParams:
    """Keep ``m`` of ``n`` subintervals, ``k`` times, with the same choice each level.

    ``kept`` defaults to the even indices ``0, 2, 4, ...`` when ``2m - 1 <= n``
    (non-adjacent intervals), else to ``0 .. m-1``.
    """

    m: int
    n: int
    k: int
    kept: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        m, n, k = int(self.m), int(self.n), int(self.k)
        if m < 1 or n < 2 or k < 1 or m >= n:
            raise GeometryError(f"need 1 <= m < n and k >= 1, got m={m}, n={n}, k={k}")
        kept = tuple(int(x) for x in self.kept) if self.kept else (
            _even_indices(m) if 2 * m - 1 <= n else tuple(range(m))
        )
        if len(kept) != m or len(set(kept)) != m or list(kept) != sorted(kept):
            raise GeometryError(f"kept must list {m} distinct increasing indices, got {kept}")
        if kept[0] < 0 or kept[-1] >= n:
            raise GeometryError(f"kept indices must lie in [0, {n}), got {kept}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "kept", kept)

    @property
    def non_adjacent(self) -> bool:
        return all(b - a >= 2 for a, b in zip(self.kept, self.kept[1:]))


def _cantor_integers(params: CantorParams) -> np.ndarray:
    """Sorted distinct endpoints in units of ``n**-k`` (exact integers)."""
    if params.n ** params.k >= 2 ** 62:
        raise GeometryError("n**k too large for exact integer endpoints")
    kept = np.asarray(params.kept, dtype=np.int64)
    lefts = np.zeros(1, dtype=np.int64)
    for _ in range(params.k):
        lefts = (lefts[:, None] * params.n + kept[None, :]).ravel()
    return np.unique(np.concatenate([lefts, lefts + 1]))


def gen_cantor(params: CantorParams) -> PointSet:
    """Endpoints of the ``m**k`` kept level-k intervals, sorted and deduplicated."""
    ints = _cantor_integers(params)
    # exact for n a power of two, else the nearest double
    return PointSet(ints.astype(np.float64) / float(params.n ** params.k))


def gen_cantor_product(factors: Sequence[CantorParams]) -> PointSet:
    """Cartesian product of discrete Cantor sets, lexicographic order."""
    factors = list(factors)
    if not factors:
        raise GeometryError("need at least one factor")
    levels = {f.k for f in factors}
    if len(levels) != 1:
        raise GeometryError(f"all factors must share the level k, got {sorted(levels)}")
    axes = [gen_cantor(f).points[:, 0] for f in factors]
    return _product(axes)


def _product(axes: Sequence[np.ndarray]) -> PointSet:
    mesh = np.meshgrid(*axes, indexing="ij")
    return PointSet(np.stack([g.ravel() for g in mesh], axis=1))


def gen_lattice(d: int, q: int) -> PointSet:
    """``{j / (q-1) : 0 <= j_i <= q-1}``: ``q**d`` points filling ``[0,1]^d``."""
    if d < 1:
        raise GeometryError("dimension must be >= 1")
    if q < 2:
        raise GeometryError("lattice needs q >= 2 points per axis")
    axis = np.arange(q, dtype=np.float64) / (q - 1)
    return _product([axis] * d)


def _sublattice(k: int, m: int) -> np.ndarray:
    """The first ``m`` points (lexicographic) of ``{j / r : 0 <= j_i < r}^k``, ``r = ceil(m**(1/k))``."""
    r = max(1, math.ceil(round(m ** (1.0 / k), 12)))
    while r ** k < m:
        r += 1
    grid = np.array(list(itertools.islice(itertools.product(range(r), repeat=k), m)), dtype=np.float64)
    return grid / r


def gen_adversarial_lattice(d: int, q: int, k: int, m: int) -> PointSet:
    """Lattice whose points on the plane ``x_1 = ... = x_{d-k} = 0`` are replaced by ``m`` points.

    The replacement is a k-dimensional sub-lattice of the plane's unit cell,
    so ``m`` much larger than ``q**k`` concentrates mass on the plane.
    """
    if not 1 <= k < d:
        raise GeometryError(f"need 1 <= k < d, got k={k}, d={d}")
    if m < 1:
        raise GeometryError("m must be >= 1")
    base = gen_lattice(d, q).points
    on_plane = np.all(base[:, : d - k] == 0.0, axis=1)
    plane = np.zeros((m, d))
    plane[:, d - k:] = _sublattice(k, m)
    return PointSet(np.concatenate([base[~on_plane], plane]))


# --------------------------------------------------------------------------- graphs


def holder_exponent(a: float, b: float) -> float:
    """``-log(a) / log(b)``, the Hölder order of the Weierstrass-type series."""
    return -math.log(a) / math.log(b)


def default_truncation(a: float) -> int:
    """Terms needed for the tail ``a**N / (1-a)`` to drop below 1e-12."""
    return max(1, math.ceil(math.log(1e-12 * (1.0 - a)) / math.log(a)))


def random_phases(count: int, seed: int) -> np.ndarray:
    """Uniform phases in ``[0, 1)`` from the counter-based Philox generator."""
    return np.random.Generator(np.random.Philox(seed)).random(count)


@dataclass(frozen=True)
class WeierstrassParams:
    """Parameters of ``f(x) = sum_{i<N} a**i cos(2 pi (b**i x + phase_i))``."""

    a: float
    b: float
    phases: tuple[float, ...] = ()
    truncation: int = 0
    seed: int | None = None

    def __post_init__(self) -> None:
        a, b = float(self.a), float(self.b)
        if not (0 < a < 1 < b):
            raise GeometryError(f"need 0 < a < 1 < b, got a={a}, b={b}")
        if a * b < 1:
            raise GeometryError(f"need a*b >= 1 so the Hölder order is <= 1, got a*b={a * b}")
        n_terms = int(self.truncation) or default_truncation(a)
        if self.phases:
            phases = tuple(float(p) for p in self.phases)
            if len(phases) < n_terms:
                raise GeometryError(f"{len(phases)} phases given for {n_terms} terms")
        elif self.seed is not None:
            phases = tuple(random_phases(n_terms, int(self.seed)).tolist())
        else:
            phases = (0.0,) * n_terms
        if any(not 0.0 <= p <= 1.0 for p in phases):
            raise GeometryError("phases must lie in [0, 1]")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "truncation", n_terms)
        object.__setattr__(self, "phases", phases[:n_terms])

    @property
    def alpha(self) -> float:
        return holder_exponent(self.a, self.b)

    @property
    def bound(self) -> float:
        """``1 / (1 - a)``, the sup-norm bound of the untruncated series."""
        return 1.0 / (1.0 - self.a)


def weierstrass(params: WeierstrassParams, j: np.ndarray, q: int) -> np.ndarray:
    """Truncated series at the grid points ``x = j / q``.

    For integer ``b`` the fractional part of ``b**i * j / q`` is computed
    exactly in integers, so high-frequency terms keep full precision.
    """
    j = np.asarray(j, dtype=np.int64)
    out = np.zeros(j.shape, dtype=np.float64)
    integer_b = float(params.b).is_integer()
    x = j.astype(np.float64) / q
    for i in range(params.truncation):
        if integer_b:
            frac = ((pow(int(params.b), i, q) * j) % q).astype(np.float64) / q
        else:
            frac = np.mod(params.b ** i * x, 1.0)
        out += params.a ** i * np.cos(2.0 * math.pi * (frac + params.phases[i]))
    return out


def grid_indices(d: int, q: int) -> np.ndarray:
    """All ``j in Z^{d-1} cap [0, q)^{d-1}`` in lexicographic order, shape ``(q**(d-1), d-1)``."""
    if d < 2:
        raise GeometryError("graphs need ambient dimension d >= 2")
    if q < 1:
        raise GeometryError("q must be >= 1")
    mesh = np.meshgrid(*([np.arange(q)] * (d - 1)), indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def gen_weierstrass_graph(params: WeierstrassParams, d: int, q: int, rescale: bool = True) -> PointSet:
    """Graph samples ``(j/q, g(j/q))`` with ``g(x) = f(x_1)``, ``n = q**(d-1)``.

    With ``rescale`` the values are mapped affinely from
    ``[-1/(1-a), 1/(1-a)]`` onto ``[0, 1]``.
    """
    if q < 2:
        raise GeometryError("q must be >= 2")
    idx = grid_indices(d, q)
    vals = weierstrass(params, idx[:, 0], q)
    if rescale:
        c = params.bound
        vals = (vals + c) / (2.0 * c)
    return PointSet(np.column_stack([idx / q, vals]))


def gen_graph_from_samples(values: Union[np.ndarray, Mapping], d: int, q: int) -> PointSet:
    """The point set graph ``{(j/q, f(j/q))}`` from samples on the grid.

    ``values`` is either an array of shape ``(q,) * (d-1)`` or a mapping from
    index tuples (ints allowed when ``d == 2``) to values.
    """
    idx = grid_indices(d, q)
    if isinstance(values, Mapping):
        out = np.empty(len(idx))
        for row, j in enumerate(idx):
            key = tuple(int(x) for x in j)
            if key in values:
                out[row] = values[key]
            elif d == 2 and key[0] in values:
                out[row] = values[key[0]]
            else:
                raise GeometryError(f"no sample for grid point {key}")
    else:
        arr = np.asarray(values, dtype=np.float64)
        if arr.shape != (q,) * (d - 1):
            raise GeometryError(f"samples must have shape {(q,) * (d - 1)}, got {arr.shape}")
        out = arr.reshape(-1)
    return PointSet(np.column_stack([idx / q, out]))


# --------------------------------------------------------------------------- parameter files


def _cantor_from(obj: Mapping) -> CantorParams:
    return CantorParams(int(obj["m"]), int(obj["n"]), int(obj["k"]), tuple(obj.get("kept", ())))


def from_params(obj: Mapping) -> PointSet:
    """Build a point set from a JSON-style parameter record.

    Recognised ``type`` values: ``cantor``, ``cantor_product``, ``lattice``,
    ``adversarial_lattice``, ``weierstrass``.
    """
    try:
        kind = obj["type"]
        if kind == "cantor":
            return gen_cantor(_cantor_from(obj))
        if kind == "cantor_product":
            return gen_cantor_product([_cantor_from(f) for f in obj["factors"]])
        if kind == "lattice":
            return gen_lattice(int(obj["d"]), int(obj["q"]))
        if kind == "adversarial_lattice":
            return gen_adversarial_lattice(int(obj["d"]), int(obj["q"]), int(obj["k"]), int(obj["m"]))
        if kind == "weierstrass":
            wp = WeierstrassParams(
                float(obj["a"]),
                float(obj["b"]),
                tuple(obj.get("phases", ())),
                int(obj.get("truncation", 0)),
                obj.get("seed"),
            )
            return gen_weierstrass_graph(wp, int(obj.get("d", 2)), int(obj["q"]), bool(obj.get("rescale", True)))
    except KeyError as exc:
        raise GeometryError(f"missing generator parameter {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, GeometryError):
            raise
        raise GeometryError(f"bad generator parameter: {exc}") from exc
    raise GeometryError(f"unknown generator type {kind!r}")
