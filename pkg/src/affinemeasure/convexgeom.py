"""Convex geometry: near-maximal determinant tuples, sandwich containments,
and convex-body volumes.

Given a finite point set containing the origin, swap ascent finds an n-tuple
at which no single replacement from the set increases the absolute
determinant.  Such a tuple wedges the symmetrized hull between a cross
polytope and a parallelepiped, giving two-sided volume bounds.  Bodies used
by the measure harness (boxes, simplices, vertex hulls, slab boxes) also
live here, with exact volumes where possible and Monte Carlo rejection
sampling for general hulls.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from .errors import EmptySetError, ShapeError


@dataclass(frozen=True)
class PointSet:
    points: np.ndarray
    contains_origin: bool = False

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        object.__setattr__(self, "points", pts)
        if self.contains_origin:
            if not np.any(np.all(np.abs(pts) < 1e-15, axis=1)):
                raise ValueError("contains_origin set but no zero point present")

    @classmethod
    def with_origin(cls, points) -> "PointSet":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if not np.any(np.all(np.abs(pts) < 1e-15, axis=1)):
            pts = np.vstack([np.zeros((1, pts.shape[1])), pts])
        return cls(pts, contains_origin=True)


@dataclass(frozen=True)
class MaxDetTuple:
    """Swap-maximal tuple: `vectors` holds the selected points (padded with
    zero rows when the set spans only an m-dimensional subspace), `abs_det`
    the achieved |det| measured inside the span."""

    vectors: np.ndarray        # (n, ambient)
    indices: tuple[int, ...]   # indices of the selected (nonzero) rows
    abs_det: float
    rank: int
    span_basis: np.ndarray     # (ambient, rank) orthonormal


def _independent_seed(coords: np.ndarray, tol: float) -> list[int]:
    """Scan points in index order, keeping each one that enlarges the span."""
    chosen: list[int] = []
    basis = np.zeros((coords.shape[1], 0))
    for i, v in enumerate(coords):
        resid = v - basis @ (basis.T @ v)
        if np.linalg.norm(resid) > tol:
            basis = np.hstack([basis, (resid / np.linalg.norm(resid))[:, None]])
            chosen.append(i)
        if len(chosen) == coords.shape[1]:
            break
    return chosen


def max_det_tuple(S: PointSet, n: int) -> MaxDetTuple:
    """Swap-ascent local maximum of |det| over n-tuples from S.  Accepts a
    swap only on strict improvement, so the returned tuple satisfies the
    Cramer coefficient bounds."""
    pts = S.points
    if len(pts) == 0:
        raise EmptySetError("point set is empty")
    if pts.shape[1] != n:
        raise ShapeError(f"points live in dimension {pts.shape[1]}, expected {n}")
    scale = float(np.max(np.abs(pts))) or 1.0
    # orthonormal basis of the span
    u, s, vt = np.linalg.svd(pts, full_matrices=False)
    rank = int(np.sum(s > 1e-12 * max(s[0] if len(s) else 0.0, scale)))
    if rank == 0:
        return MaxDetTuple(vectors=np.zeros((n, n)), indices=(),
                           abs_det=0.0, rank=0, span_basis=np.zeros((n, 0)))
    basis = vt[:rank].T                      # (n, rank)
    coords = pts @ basis                     # (N, rank)
    idx = _independent_seed(coords, 1e-9 * scale)
    m = len(idx)
    current = list(idx)
    C = coords[current]
    det = np.linalg.det(C)
    for _ in range(10_000):
        if abs(det) <= 1e-300:
            break
        ratios = coords @ np.linalg.inv(C)   # (N, m); |det after swap| factor
        p, i = np.unravel_index(int(np.argmax(np.abs(ratios))), ratios.shape)
        if abs(ratios[p, i]) <= 1.0 + 1e-12:
            break
        current[i] = int(p)
        C = coords[current]
        det = np.linalg.det(C)
    vectors = np.zeros((n, n))
    vectors[:m] = pts[current]
    return MaxDetTuple(vectors=vectors, indices=tuple(current),
                       abs_det=float(abs(det)), rank=m, span_basis=basis)


def cramer_coefficients(tup: MaxDetTuple, points) -> np.ndarray:
    """Expansion coefficients of each point over the tuple inside its span;
    shape (N, rank)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    C = tup.vectors[:tup.rank] @ tup.span_basis
    coords = pts @ tup.span_basis
    return np.linalg.solve(C.T, coords.T).T


@dataclass(frozen=True)
class SandwichReport:
    k1_in_k: bool
    k_in_kinf: bool
    max_violation: float


def _hull_halfspaces(vertices: np.ndarray):
    try:
        hull = ConvexHull(vertices)
    except QhullError:
        return None
    return hull.equations


def _points_in_hull(vertices: np.ndarray, X: np.ndarray, tol: float = 1e-9):
    """Membership of rows of X in conv(vertices); qhull halfspaces when the
    hull is full-dimensional, LP feasibility otherwise."""
    eqs = _hull_halfspaces(vertices)
    if eqs is not None:
        return np.max(X @ eqs[:, :-1].T + eqs[:, -1], axis=1) <= tol
    out = np.zeros(len(X), dtype=bool)
    k = len(vertices)
    for row, x in enumerate(X):
        A_eq = np.vstack([vertices.T, np.ones(k)])
        b_eq = np.concatenate([x, [1.0]])
        res = linprog(np.zeros(k), A_eq=A_eq, b_eq=b_eq,
                      bounds=[(0, None)] * k, method="highs")
        out[row] = res.status == 0
    return out


def _containment_scale(vertices: np.ndarray, x: np.ndarray) -> float:
    """Largest s with s*x in conv(vertices) (LP); used to quantify how far a
    point falls outside."""
    k = len(vertices)
    n = len(x)
    # variables: lambda (k), s
    A_eq = np.hstack([np.vstack([vertices.T, np.ones(k)]),
                      np.concatenate([-x, [0.0]])[:, None]])
    b_eq = np.concatenate([np.zeros(n), [1.0]])
    res = linprog(np.concatenate([np.zeros(k), [-1.0]]),
                  A_eq=A_eq, b_eq=b_eq,
                  bounds=[(0, None)] * k + [(0, None)], method="highs")
    if res.status != 0:
        return 0.0
    return float(res.x[-1])


def sandwich_certify(S: PointSet, tup: MaxDetTuple, samples: int = 2000,
                     seed: int = 0) -> SandwichReport:
    """Monte Carlo certification that, for K = conv(S u -S), the cross
    polytope on the tuple sits inside K and every point of S expands over the
    tuple with coefficients in [-1, 1]."""
    rng = np.random.default_rng(seed)
    pts = S.points
    sym = np.vstack([pts, -pts])
    m = tup.rank
    if m == 0:
        return SandwichReport(True, True, 0.0)
    # K contained in K_infinity: check every symmetrized point (exact; the
    # hull of finitely many points is inside the box iff its vertices are)
    coeff = cramer_coefficients(tup, sym)
    kinf_violation = max(0.0, float(np.max(np.abs(coeff))) - 1.0)
    # K_1 contained in K: sample the cross polytope on the tuple
    weights = rng.dirichlet(np.ones(m), size=samples)
    signs = rng.choice([-1.0, 1.0], size=(samples, m))
    sample_pts = (weights * signs) @ tup.vectors[:m]
    sym_coords = sym @ tup.span_basis
    sample_coords = sample_pts @ tup.span_basis
    inside = _points_in_hull(sym_coords, sample_coords)
    k1_violation = 0.0
    if not np.all(inside):
        for x in sample_coords[~inside]:
            s = _containment_scale(sym_coords, x)
            k1_violation = max(k1_violation, (1.0 / s - 1.0) if s > 0 else np.inf)
    return SandwichReport(
        k1_in_k=bool(np.all(inside)),
        k_in_kinf=kinf_violation <= 1e-12,
        max_violation=float(max(k1_violation, kinf_violation)))


# convex bodies ------------------------------------------------------------------


@dataclass
class ConvexBody:
    """Axis box, simplex, hull of vertices, or slab box (an axis box with
    anisotropic, typically parabolic, extents)."""

    kind: str
    bounds: np.ndarray | None = None     # (2, n): lo row, hi row
    vertices: np.ndarray | None = None   # (k, n)
    _halfspaces: np.ndarray | None = field(default=None, repr=False)
    _hull_failed: bool = field(default=False, repr=False)

    @classmethod
    def box(cls, lo, hi) -> "ConvexBody":
        return cls(kind="box", bounds=np.array([lo, hi], dtype=float))

    @classmethod
    def slab_box(cls, lo, hi) -> "ConvexBody":
        return cls(kind="slab-box", bounds=np.array([lo, hi], dtype=float))

    @classmethod
    def simplex(cls, vertices) -> "ConvexBody":
        verts = np.atleast_2d(np.asarray(vertices, dtype=float))
        if verts.shape[0] != verts.shape[1] + 1:
            raise ShapeError("a simplex in R^n needs n+1 vertices")
        return cls(kind="simplex", vertices=verts)

    @classmethod
    def vertex_hull(cls, vertices) -> "ConvexBody":
        return cls(kind="vertex-hull",
                   vertices=np.atleast_2d(np.asarray(vertices, dtype=float)))

    @property
    def dim(self) -> int:
        if self.bounds is not None:
            return self.bounds.shape[1]
        return self.vertices.shape[1]

    def bounding_box(self):
        if self.bounds is not None:
            return self.bounds[0], self.bounds[1]
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def contains(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind in ("box", "slab-box"):
            lo, hi = self.bounds
            return np.all((X >= lo - 1e-12) & (X <= hi + 1e-12), axis=1)
        if self.kind == "simplex":
            v0 = self.vertices[0]
            E = (self.vertices[1:] - v0).T   # (n, n)
            try:
                lam = np.linalg.solve(E, (X - v0).T).T
            except np.linalg.LinAlgError:
                return np.zeros(len(X), dtype=bool)
            return (np.all(lam >= -1e-12, axis=1)
                    & (lam.sum(axis=1) <= 1.0 + 1e-12))
        # vertex hull
        lo, hi = self.bounding_box()
        coarse = np.all((X >= lo - 1e-12) & (X <= hi + 1e-12), axis=1)
        out = np.zeros(len(X), dtype=bool)
        if not np.any(coarse):
            return out
        if self._halfspaces is None and not self._hull_failed:
            eqs = _hull_halfspaces(self.vertices)
            if eqs is None:
                self._hull_failed = True
            else:
                self._halfspaces = eqs
        cand = X[coarse]
        if self._halfspaces is not None:
            eqs = self._halfspaces
            ok = np.max(cand @ eqs[:, :-1].T + eqs[:, -1], axis=1) <= 1e-9
        else:
            ok = _points_in_hull(self.vertices, cand)
        out[coarse] = ok
        return out


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    standard_error: float
    degenerate: bool


def body_volume(K: ConvexBody, samples: int = 100_000, seed: int = 0) -> VolumeEstimate:
    """Volume of a body: exact for boxes, slab boxes, and simplices; Monte
    Carlo rejection sampling in the bounding box for vertex hulls."""
    if K.kind in ("box", "slab-box"):
        extents = K.bounds[1] - K.bounds[0]
        vol = float(np.prod(extents))
        return VolumeEstimate(vol, 0.0, degenerate=vol == 0.0)
    if K.kind == "simplex":
        v0 = K.vertices[0]
        det = np.linalg.det((K.vertices[1:] - v0).T)
        vol = abs(det) / factorial(K.dim)
        return VolumeEstimate(float(vol), 0.0, degenerate=vol == 0.0)
    lo, hi = K.bounding_box()
    box_vol = float(np.prod(hi - lo))
    if box_vol == 0.0:
        return VolumeEstimate(0.0, 0.0, degenerate=True)
    eqs = _hull_halfspaces(K.vertices)
    if eqs is None:
        return VolumeEstimate(0.0, 0.0, degenerate=True)
    rng = np.random.default_rng(seed)
    X = rng.uniform(lo, hi, size=(samples, K.dim))
    hits = np.max(X @ eqs[:, :-1].T + eqs[:, -1], axis=1) <= 1e-12
    p = float(np.mean(hits))
    stderr = box_vol * np.sqrt(max(p * (1.0 - p), 0.0) / samples)
    return VolumeEstimate(box_vol * p, stderr, degenerate=p == 0.0)
