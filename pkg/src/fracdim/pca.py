"""Principal component analysis with a self-contained Jacobi eigensolver."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import PointSet

__all__ = [
    "PcaError",
    "PcaReport",
    "PcaComparison",
    "center",
    "covariance",
    "eig_sym",
    "pca",
    "pca_compare",
    "project",
]


class PcaError(ValueError):
    pass


def center(ps: PointSet) -> PointSet:
    """Subtract the per-coordinate mean."""
    pts = ps.points
    mean = np.array([math.fsum(col) / len(col) for col in pts.T.tolist()])
    return PointSet(pts - mean)


def covariance(ps: PointSet) -> np.ndarray:
    """Population covariance ``(1/n) X^T X`` of the centred points."""
    if ps.n < 2:
        raise PcaError("covariance needs at least two points")
    x = center(ps).points
    d = x.shape[1]
    cov = np.empty((d, d))
    for i in range(d):
        for j in range(i, d):
            cov[i, j] = cov[j, i] = math.fsum((x[:, i] * x[:, j]).tolist()) / ps.n
    return cov


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(off * off)))


def eig_sym(m: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and orthonormal eigenvectors (columns) of a symmetric matrix.

    Cyclic Jacobi: sweep over all off-diagonal entries, annihilating each with
    a plane rotation, until every off-diagonal magnitude is below
    ``tol * ||M||_F``. Each eigenvector is signed so that its largest-magnitude
    component is positive.
    """
    a = np.array(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise PcaError(f"need a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise PcaError("matrix has non-finite entries")
    scale = float(np.linalg.norm(a))
    if np.max(np.abs(a - a.T), initial=0.0) > 1e-8 * max(scale, 1.0):
        raise PcaError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    d = a.shape[0]
    v = np.eye(d)
    limit = tol * scale
    for _ in range(max_sweeps):
        if d < 2 or np.max(np.abs(a[~np.eye(d, dtype=bool)])) < limit or _off_norm(a) == 0.0:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(d)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                a[p, q] = a[q, p] = 0.0
                v = v @ rot
    else:
        raise PcaError("Jacobi iteration did not converge")

    vals = np.diag(a).copy()
    order = np.argsort(-vals, kind="stable")
    vals, v = vals[order], v[:, order]
    for col in range(d):
        big = np.argmax(np.abs(v[:, col]))
        if v[big, col] < 0:
            v[:, col] = -v[:, col]
    return vals, v


@dataclass(frozen=True)
class PcaReport:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    explained_variance_ratio: np.ndarray
    covariance: np.ndarray

    def to_json(self) -> dict:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "eigenvectors": self.eigenvectors.tolist(),
            "explained_variance_ratio": self.explained_variance_ratio.tolist(),
            "covariance": self.covariance.tolist(),
        }


def pca(ps: PointSet) -> PcaReport:
    cov = covariance(ps)
    vals, vecs = eig_sym(cov)
    vals = np.where(vals < 0, np.where(vals >= -1e-10, 0.0, vals), vals)
    if np.any(vals < 0):
        raise PcaError("covariance has a clearly negative eigenvalue")
    total = math.fsum(vals.tolist())
    ratio = vals / total if total > 0 else np.full(len(vals), 1.0 / len(vals))
    return PcaReport(vals, vecs, ratio, cov)


@dataclass(frozen=True)
class PcaComparison:
    first: PcaReport
    second: PcaReport
    discrepancy: float  # max_i |l_i(a)/l_1(a) - l_i(b)/l_1(b)|

    def to_json(self) -> dict:
        return {"a": self.first.to_json(), "b": self.second.to_json(), "discrepancy": self.discrepancy}


def pca_compare(a: PointSet, b: PointSet) -> PcaComparison:
    """PCA of two point sets side by side, with the largest gap between relative eigenvalues."""
    if a.dim != b.dim:
        raise PcaError(f"dimension mismatch: {a.dim} vs {b.dim}")
    ra, rb = pca(a), pca(b)

    def rel(vals: np.ndarray) -> np.ndarray:
        return vals / vals[0] if vals[0] > 0 else np.zeros_like(vals)

    gap = float(np.max(np.abs(rel(ra.eigenvalues) - rel(rb.eigenvalues))))
    return PcaComparison(ra, rb, gap)


def project(ps: PointSet, components: int, report: PcaReport | None = None) -> PointSet:
    """Coordinates of the centred points along the top ``components`` eigenvectors."""
    if not 1 <= components <= ps.dim:
        raise PcaError(f"components must lie in [1, {ps.dim}], got {components}")
    report = report if report is not None else pca(ps)
    w = report.eigenvectors[:, :components]
    return PointSet(center(ps).points @ w)
