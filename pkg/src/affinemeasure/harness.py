"""Empirical scaling harness for the convex-body growth condition.

A pullback measure discretizes the canonical affine measure of a polynomial
immersion over a parameter box: one density evaluation per grid cell, cell
weights equal to cell volume times density.  Experiments then sample convex
bodies (axis boxes, simplices, hulls of image points, and anisotropic slab
boxes matching parabolic scaling), compare the captured mass against a power
of the body volume, and track the worst ratio.  A separate routine drives the
slab scale to zero to exhibit super- and sub-critical behaviour, and a Monte
Carlo estimator checks the simplex-average functional against its volume
bound.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import factorial

import numpy as np

from .convexgeom import ConvexBody, VolumeEstimate, body_volume
from .curvature import DEFAULT_CAP
from .errors import EmptyPullbackError
from .minimize import DensityResult, OptimizerConfig, affine_density
from .polynomials import PolynomialMap


@dataclass
class PullbackMeasure:
    """Discrete stand-in for the affine measure of an immersion: grid points
    in the parameter box, their densities, weights, and image points."""

    f: PolynomialMap
    points: np.ndarray        # (N, d) cell centers
    weights: np.ndarray       # (N,) cell volume * density
    densities: np.ndarray     # (N,)
    image_points: np.ndarray  # (N, n)
    lo: np.ndarray
    hi: np.ndarray
    resolution: int
    cell_volume: float

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    def image_extent(self):
        return self.image_points.min(axis=0), self.image_points.max(axis=0)


def _default_pullback_config() -> OptimizerConfig:
    return OptimizerConfig(restarts=3, max_iterations=600, stall_window=20,
                           gradient_tolerance=1e-12)


def pullback_measure(f: PolynomialMap, lo, hi, resolution: int,
                     cfg: OptimizerConfig | None = None,
                     cap: int = DEFAULT_CAP) -> PullbackMeasure:
    """Evaluate the affine density at every cell center of a uniform grid.
    Consecutive cells warm-start from the previous minimizer, which keeps the
    sweep cheap without giving up the upper-bound semantics."""
    cfg = cfg if cfg is not None else _default_pullback_config()
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    d = f.d
    axes = [lo[i] + (hi[i] - lo[i]) * (np.arange(resolution) + 0.5) / resolution
            for i in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=-1)
    cellvol = float(np.prod((hi - lo) / resolution))
    densities = np.empty(len(points))
    warm_cfg = replace(cfg, restarts=1)
    warm = None
    for i, p in enumerate(points):
        if warm is None:
            res = affine_density(f, p, cfg, cap=cap)
        else:
            res = affine_density(f, p, warm_cfg, cap=cap, extra_starts=(warm,))
        densities[i] = res.density
        warm = res.minimizer if f.d > 1 else None
    image = f.evaluate(points)
    return PullbackMeasure(f=f, points=points, weights=cellvol * densities,
                           densities=densities, image_points=image,
                           lo=lo, hi=hi, resolution=resolution,
                           cell_volume=cellvol)


def mu_of_body(mu: PullbackMeasure, K: ConvexBody) -> float:
    """Mass of the cells whose image point lies in the body."""
    inside = K.contains(mu.image_points)
    return float(np.sum(mu.weights[inside]))


@dataclass(frozen=True)
class ExperimentRow:
    body_id: int
    kind: str
    volume: float
    mass: float
    ratio: float


@dataclass(frozen=True)
class ExperimentReport:
    rows: tuple
    max_ratio: float
    alpha: float
    seed: int
    resolution: int


DEFAULT_FAMILIES = ("box", "simplex", "hull", "slab")


def _body_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _random_body(kind: str, mu: PullbackMeasure, rng) -> ConvexBody:
    img = mu.image_points
    n = img.shape[1]
    lo, hi = mu.image_extent()
    extent = np.maximum(hi - lo, 1e-9)
    probs = mu.weights / mu.total_mass if mu.total_mass > 0 else None
    center = img[rng.choice(len(img), p=probs)]
    if kind == "box":
        half = extent * 10.0 ** rng.uniform(-1.3, -0.15, size=n)
        return ConvexBody.box(center - half, center + half)
    if kind == "simplex":
        scale = extent * 10.0 ** rng.uniform(-1.0, 0.0)
        dirs = rng.standard_normal((n, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        verts = np.vstack([center, center + dirs * scale])
        return ConvexBody.simplex(verts)
    if kind == "hull":
        count = max(n + 1, 2 * n)
        idx = rng.choice(len(img), size=count, p=probs)
        return ConvexBody.vertex_hull(img[idx])
    if kind == "slab":
        d = mu.f.d
        delta = 2.0 ** rng.uniform(-5.0, -1.0)
        half = np.concatenate([np.full(d, delta), np.full(n - d, delta ** 2)])
        half = half * np.concatenate([extent[:d], np.ones(n - d)])
        return ConvexBody.slab_box(center - half, center + half)
    raise ValueError(f"unknown body kind {kind!r}")


def oberlin_experiment(mu: PullbackMeasure, alpha: float,
                       families=DEFAULT_FAMILIES, trials: int = 200,
                       seed: int = 0, volume_samples: int = 20_000) -> ExperimentReport:
    """Sample bodies from the given families and report mass / volume^alpha
    ratios. Bodies are generated from per-index seed streams, so enlarging
    `trials` extends the same experiment."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    rows = []
    for i in range(trials):
        kind = families[i % len(families)]
        rng = _body_rng(seed, i)
        K = _random_body(kind, mu, rng)
        vol = body_volume(K, samples=volume_samples, seed=seed + 7919 * i).value
        mass = mu_of_body(mu, K)
        if vol > 0:
            ratio = mass / vol ** alpha
        else:
            ratio = np.inf if mass > 0 else 0.0
        rows.append(ExperimentRow(body_id=i, kind=kind, volume=vol,
                                  mass=mass, ratio=float(ratio)))
    max_ratio = max((r.ratio for r in rows), default=0.0)
    return ExperimentReport(rows=tuple(rows), max_ratio=float(max_ratio),
                            alpha=alpha, seed=seed, resolution=mu.resolution)


def supercritical_blowup(mu: PullbackMeasure, alpha: float, scales) -> list[float]:
    """Ratios on anisotropic boxes centered at the image of the parameter
    origin, with the first d half-widths delta and the remaining ones
    delta squared."""
    d, n = mu.f.d, mu.image_points.shape[1]
    center = np.asarray(mu.f.evaluate(np.zeros(d)), dtype=float)
    out = []
    for delta in scales:
        half = np.concatenate([np.full(d, delta), np.full(n - d, delta ** 2)])
        K = ConvexBody.slab_box(center - half, center + half)
        vol = body_volume(K).value
        mass = mu_of_body(mu, K)
        out.append(mass / vol ** alpha if vol > 0 else np.inf)
    return out


@dataclass(frozen=True)
class SimplexFunctionalReport:
    estimate: float
    bound: float
    pullback_mass: float
    volume: VolumeEstimate


def simplex_functional(mu: PullbackMeasure, K: ConvexBody,
                       samples: int = 100_000, seed: int = 0) -> SimplexFunctionalReport:
    """Monte Carlo estimate of the average simplex determinant over the
    pullback of a body, together with the bound n! |K| that holds for every
    sampled simplex."""
    inside = K.contains(mu.image_points)
    mass = float(np.sum(mu.weights[inside]))
    if mass <= 0:
        raise EmptyPullbackError("the body pulls back to zero mass")
    n = mu.image_points.shape[1]
    idx_pool = np.where(inside)[0]
    base = idx_pool[int(np.argmax(mu.weights[inside]))]
    probs = mu.weights[inside] / mass
    rng = np.random.default_rng(seed)
    draws = rng.choice(idx_pool, size=(samples, n), p=probs)
    diffs = mu.image_points[draws] - mu.image_points[base]
    dets = np.abs(np.linalg.det(diffs))
    vol = body_volume(K, seed=seed + 1)
    return SimplexFunctionalReport(estimate=float(np.mean(dets)),
                                   bound=factorial(n) * vol.value,
                                   pullback_mass=mass, volume=vol)
