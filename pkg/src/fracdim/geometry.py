"""Point sets, regions and the distance/normalization helpers shared by every module."""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

__all__ = [
    "GeometryError",
    "PointSet",
    "PointFamily",
    "AffineSubspace",
    "PointCloud",
    "BoxUnion",
    "RegionSpec",
    "AffineMap",
    "distance_to_region",
    "distances_to_region",
    "rescale_to_unit_cube",
    "default_covering_constant",
    "product_factors",
    "load_csv",
    "save_csv",
]


class GeometryError(ValueError):
    """Invalid point set, region or geometric request."""


class PointSet:
    """An ordered, immutable collection of ``n`` points in ``R^d``.

    Points are stored as a read-only ``(n, d)`` float64 array. A 1-D input is
    read as ``n`` points on the line.
    """

    __slots__ = ("_points", "_hash")

    def __init__(self, points: Union[np.ndarray, Sequence]) -> None:
        arr = np.array(points, dtype=np.float64, copy=True)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise GeometryError(f"points must be a 2-D array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise GeometryError("a point set needs at least one point of dimension >= 1")
        if not np.all(np.isfinite(arr)):
            raise GeometryError("coordinates must be finite")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        self._points = arr
        self._hash: str | None = None

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def n(self) -> int:
        return self._points.shape[0]

    @property
    def dim(self) -> int:
        return self._points.shape[1]

    def __len__(self) -> int:
        return self.n

    def __iter__(self):
        return iter(self._points)

    def __getitem__(self, i):
        return self._points[i]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PointSet):
            return NotImplemented
        return self._points.shape == other._points.shape and bool(
            np.array_equal(self._points, other._points)
        )

    def __hash__(self) -> int:
        return hash(self.content_hash)

    def __repr__(self) -> str:
        return f"PointSet(n={self.n}, dim={self.dim})"

    @property
    def content_hash(self) -> str:
        """SHA-256 over shape and raw coordinate bytes."""
        if self._hash is None:
            h = hashlib.sha256()
            h.update(np.asarray(self._points.shape, dtype=np.int64).tobytes())
            h.update(self._points.tobytes())
            self._hash = h.hexdigest()
        return self._hash

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self._points.min(axis=0), self._points.max(axis=0)

    def duplicates(self) -> list[tuple[int, int]]:
        """Index pairs ``(i, j)``, ``i < j``, of points with identical coordinates.

        Each duplicate is paired with the first occurrence of its value.
        """
        order = np.lexsort(self._points.T[::-1])
        srt = self._points[order]
        same = np.all(srt[1:] == srt[:-1], axis=1)
        out = []
        first = order[0]
        for pos in range(1, len(order)):
            if same[pos - 1]:
                i, j = int(first), int(order[pos])
                out.append((min(i, j), max(i, j)))
            else:
                first = order[pos]
        return sorted(out)

    def unique(self) -> "PointSet":
        """Distinct points, keeping the first occurrence order."""
        _, idx = np.unique(self._points, axis=0, return_index=True)
        return PointSet(self._points[np.sort(idx)])


@dataclass(frozen=True)
class PointFamily:
    """A sequence of point sets of strictly increasing size in a common dimension."""

    members: tuple[PointSet, ...]
    label: str = ""

    def __post_init__(self) -> None:
        members = tuple(self.members)
        object.__setattr__(self, "members", members)
        if not members:
            raise GeometryError("a family needs at least one member")
        dims = {m.dim for m in members}
        if len(dims) != 1:
            raise GeometryError(f"members have mixed dimensions {sorted(dims)}")
        sizes = [m.n for m in members]
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise GeometryError(f"member sizes must strictly increase, got {sizes}")

    @property
    def dim(self) -> int:
        return self.members[0].dim

    @property
    def sizes(self) -> list[int]:
        return [m.n for m in self.members]

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


# --------------------------------------------------------------------------- regions


@dataclass(frozen=True)
class AffineSubspace:
    """``base + sum_i t_i u_i`` with ``lo_i <= t_i <= hi_i`` and orthonormal ``u_i``."""

    base: np.ndarray
    directions: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self) -> None:
        base = np.asarray(self.base, dtype=np.float64).reshape(-1)
        dirs = np.asarray(self.directions, dtype=np.float64)
        if dirs.ndim == 1:
            dirs = dirs.reshape(1, -1)
        k = dirs.shape[0]
        lo = np.broadcast_to(np.asarray(self.lo, dtype=np.float64), (k,)).copy()
        hi = np.broadcast_to(np.asarray(self.hi, dtype=np.float64), (k,)).copy()
        if dirs.shape[1] != base.shape[0]:
            raise GeometryError("directions and base point differ in dimension")
        gram = dirs @ dirs.T
        if not np.allclose(gram, np.eye(k), atol=1e-10, rtol=0):
            raise GeometryError("spanning directions must be orthonormal")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)) and np.all(lo <= hi)):
            raise GeometryError("extent box must be finite with lo <= hi")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.base.shape[0]

    @property
    def rank(self) -> int:
        return self.directions.shape[0]

    @classmethod
    def coordinate_plane(cls, d: int, free_axes: Sequence[int], lo=0.0, hi=1.0) -> "AffineSubspace":
        """The plane through the origin spanned by the given coordinate axes."""
        dirs = np.zeros((len(free_axes), d))
        for row, ax in enumerate(free_axes):
            dirs[row, ax] = 1.0
        return cls(np.zeros(d), dirs, lo, hi)


@dataclass(frozen=True)
class PointCloud:
    points: PointSet

    @property
    def dim(self) -> int:
        return self.points.dim


@dataclass(frozen=True)
class BoxUnion:
    """Union of axis-aligned boxes; ``lo`` and ``hi`` have shape ``(m, d)``."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self) -> None:
        lo = np.atleast_2d(np.asarray(self.lo, dtype=np.float64))
        hi = np.atleast_2d(np.asarray(self.hi, dtype=np.float64))
        if lo.shape != hi.shape or lo.shape[0] < 1:
            raise GeometryError("box corner arrays must share shape (m, d), m >= 1")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)) and np.all(lo <= hi)):
            raise GeometryError("boxes must be finite with lo <= hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[1]


Shape = Union[AffineSubspace, PointCloud, BoxUnion]


@dataclass(frozen=True)
class RegionSpec:
    """A compact set ``E`` together with the covering data ``(k, C_E)``.

    ``N_E(delta) <= max(C_E * delta**-k, 1)`` is assumed, not checked.
    """

    shape: Shape
    k: float
    covering_constant: float = field(default=float("nan"))

    def __post_init__(self) -> None:
        k = float(self.k)
        if not (k > 0 and k <= self.shape.dim):
            raise GeometryError(f"covering exponent must satisfy 0 < k <= d, got k={k}")
        c = self.covering_constant
        c = default_covering_constant(k) if c is None or math.isnan(c) else float(c)
        if not c > 0:
            raise GeometryError("covering constant must be positive")
        if isinstance(self.shape, AffineSubspace) and float(k).is_integer():
            if self.shape.rank != int(k):
                raise GeometryError(
                    f"affine subspace spans {self.shape.rank} directions but k={k:g}"
                )
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "covering_constant", c)

    @property
    def dim(self) -> int:
        return self.shape.dim

    def to_json(self) -> dict:
        s = self.shape
        if isinstance(s, AffineSubspace):
            shape = {
                "kind": "affine",
                "base": s.base.tolist(),
                "directions": s.directions.tolist(),
                "lo": s.lo.tolist(),
                "hi": s.hi.tolist(),
            }
        elif isinstance(s, PointCloud):
            shape = {"kind": "points", "points": s.points.points.tolist()}
        else:
            shape = {"kind": "boxes", "lo": s.lo.tolist(), "hi": s.hi.tolist()}
        return {"shape": shape, "k": self.k, "C_E": self.covering_constant}

    @classmethod
    def from_json(cls, obj: dict) -> "RegionSpec":
        try:
            shape = obj["shape"]
            kind = shape["kind"]
            if kind == "affine":
                sh: Shape = AffineSubspace(shape["base"], shape["directions"], shape["lo"], shape["hi"])
            elif kind == "points":
                sh = PointCloud(PointSet(shape["points"]))
            elif kind == "boxes":
                sh = BoxUnion(shape["lo"], shape["hi"])
            else:
                raise GeometryError(f"unknown region kind {kind!r}")
            c = obj.get("C_E")
            return cls(sh, float(obj["k"]), float("nan") if c is None else float(c))
        except (KeyError, TypeError) as exc:
            raise GeometryError(f"malformed region description: {exc}") from exc


def default_covering_constant(k: float) -> float:
    """``(2 sqrt(k))**k``: a valid (not tight) covering constant for a unit k-cube."""
    k = float(k)
    if not k > 0:
        raise GeometryError("covering exponent must be positive")
    return (2.0 * math.sqrt(k)) ** k


def distances_to_region(pts: np.ndarray, region: RegionSpec | Shape) -> np.ndarray:
    """Euclidean distance from each row of ``pts`` to the region."""
    shape = region.shape if isinstance(region, RegionSpec) else region
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    if pts.shape[1] != shape.dim:
        raise GeometryError(f"point dimension {pts.shape[1]} != region dimension {shape.dim}")

    if isinstance(shape, AffineSubspace):
        rel = pts - shape.base
        t = np.clip(rel @ shape.directions.T, shape.lo, shape.hi)
        return np.linalg.norm(rel - t @ shape.directions, axis=1)

    if isinstance(shape, BoxUnion):
        best = np.full(pts.shape[0], np.inf)
        for lo, hi in zip(shape.lo, shape.hi):
            gap = np.maximum(np.maximum(lo - pts, pts - hi), 0.0)
            np.minimum(best, np.linalg.norm(gap, axis=1), out=best)
        return best

    if isinstance(shape, PointCloud):
        cloud = shape.points.points
        best = np.full(pts.shape[0], np.inf)
        # chunk over the cloud to bound memory at ~ 4096 x n
        for start in range(0, cloud.shape[0], 4096):
            block = cloud[start:start + 4096]
            d2 = ((pts[:, None, :] - block[None, :, :]) ** 2).sum(axis=2)
            np.minimum(best, np.sqrt(d2.min(axis=1)), out=best)
        return best

    raise GeometryError(f"unsupported region shape {type(shape).__name__}")


def distance_to_region(p, region: RegionSpec | Shape) -> float:
    """Distance from a single point ``p`` to the region."""
    p = np.asarray(p, dtype=np.float64).reshape(1, -1)
    return float(distances_to_region(p, region)[0])


# --------------------------------------------------------------------------- normalization


@dataclass(frozen=True)
class AffineMap:
    """``x -> (x - origin) / side``, the same factor on every axis."""

    side: float
    origin: tuple[float, ...]

    @property
    def scale(self) -> float:
        return 1.0 / self.side

    def apply(self, pts: np.ndarray) -> np.ndarray:
        return (np.asarray(pts, dtype=np.float64) - np.asarray(self.origin)) / self.side

    def invert(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(pts, dtype=np.float64) * self.side + np.asarray(self.origin)


def rescale_to_unit_cube(ps: PointSet) -> tuple[PointSet, AffineMap]:
    """Map the bounding box into ``[0, 1]^d`` with its longest side exactly 1."""
    if ps.n < 2:
        raise GeometryError("rescaling needs at least two points")
    lo, hi = ps.bounding_box()
    side = float(np.max(hi - lo))
    if side == 0.0:
        raise GeometryError("all points are identical (zero diameter)")
    amap = AffineMap(side, tuple(float(x) for x in lo))
    return PointSet(amap.apply(ps.points)), amap


def product_factors(ps: PointSet) -> list[np.ndarray] | None:
    """Per-axis coordinate sets if ``ps`` is exactly their Cartesian product.

    A set of distinct points is contained in the product of its coordinate
    projections, so it equals that product iff the cardinalities agree.
    Returns ``None`` otherwise (including when ``ps`` has duplicates).
    """
    axes = [np.unique(ps.points[:, i]) for i in range(ps.dim)]
    if math.prod(len(a) for a in axes) != ps.n:
        return None
    if ps.duplicates():
        return None
    return axes


# --------------------------------------------------------------------------- CSV


def save_csv(ps: PointSet, path: Union[str, Path], header: str | None = None) -> None:
    """Write one point per row using shortest round-trip decimal printing."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        if header is not None:
            fh.write("# " + header.replace("\n", " ") + "\n")
        for row in ps.points.tolist():
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def load_csv(path: Union[str, Path]) -> PointSet:
    path = Path(path)
    rows: list[list[float]] = []
    width = None
    with path.open(newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            if rec[0].lstrip().startswith("#"):
                if rows:
                    raise GeometryError(f"{path}:{lineno}: header row after data")
                continue
            try:
                vals = [float(x) for x in rec]
            except ValueError as exc:
                raise GeometryError(f"{path}:{lineno}: malformed row {rec!r}") from exc
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise GeometryError(
                    f"{path}:{lineno}: expected {width} columns, found {len(vals)}"
                )
            rows.append(vals)
    if not rows:
        raise GeometryError(f"{path}: no points")
    return PointSet(np.array(rows))


def as_pointset(obj: Union[PointSet, np.ndarray, Iterable]) -> PointSet:
    return obj if isinstance(obj, PointSet) else PointSet(obj)
