"""Tight frames and highest-order polynomial collections.

The embedding builder concatenates all monomials below the top degree with a
collection of homogeneous top-degree polynomials of two kinds: scaled
non-pure-power monomials closed under cyclic permutation of the variables,
and up to d combinations of the pure powers weighted by the columns of a
uniform normalized tight frame.  Such collections solve the two-sided
criticality system for the derivative Gram matrices, which is what certifies
a strictly positive density for the resulting immersion.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial, sqrt

import numpy as np

from .errors import (
    ArtifactError,
    InfeasibleSizeError,
    InvalidDimensionError,
    NotHomogeneousError,
)
from .indexing import graded_key, graded_monomials, kappa_sequence, monomials_of_degree
from .polynomials import Polynomial, PolynomialMap


class FrameVerificationError(ArtifactError):
    code = "frame-verification"


@dataclass(frozen=True)
class Frame:
    """d vectors in R^{d0} forming a uniform normalized tight frame: the
    analysis operator is an isometry and every vector has squared norm
    d0/d."""

    vectors: np.ndarray   # (d, d0)
    d0: int

    @property
    def d(self) -> int:
        return self.vectors.shape[0]

    def tightness_defect(self) -> float:
        G = self.vectors.T @ self.vectors
        return float(np.max(np.abs(G - np.eye(self.d0))))

    def uniformity_defect(self) -> float:
        norms = np.sum(self.vectors ** 2, axis=1)
        return float(np.max(np.abs(norms - self.d0 / self.d)))


def harmonic_untf(d0: int, d: int) -> Frame:
    """Harmonic construction: select orthonormal rows of the real
    trigonometric character matrix so that column norms are constant, then
    read the columns as frame vectors."""
    if not 1 <= d0 <= d:
        raise InvalidDimensionError(f"need 1 <= d0 <= d, got d0={d0}, d={d}")
    j = np.arange(d)
    const = np.full(d, 1.0 / sqrt(d))
    n_pairs = (d - 1) // 2
    pairs = []
    for f in range(1, n_pairs + 1):
        ang = 2.0 * np.pi * f * j / d
        pairs.append((np.sqrt(2.0 / d) * np.cos(ang), np.sqrt(2.0 / d) * np.sin(ang)))
    alt = ((-1.0) ** j) / sqrt(d) if d % 2 == 0 else None

    rows: list[np.ndarray] = []
    if d0 == d:
        rows.append(const)
        for c, s in pairs:
            rows.extend((c, s))
        if alt is not None:
            rows.append(alt)
    elif d0 % 2 == 1:
        rows.append(const)
        for c, s in pairs[: (d0 - 1) // 2]:
            rows.extend((c, s))
    else:
        if d0 // 2 <= n_pairs:
            for c, s in pairs[: d0 // 2]:
                rows.extend((c, s))
        else:
            rows.extend((const, alt))
            for c, s in pairs[: (d0 - 2) // 2]:
                rows.extend((c, s))
    F = np.vstack(rows)
    frame = Frame(vectors=F.T.copy(), d0=d0)
    if frame.tightness_defect() > 1e-12 or frame.uniformity_defect() > 1e-12:
        raise FrameVerificationError(
            f"frame conditions violated: tight {frame.tightness_defect():g}, "
            f"uniform {frame.uniformity_defect():g}")
    return frame


def bombieri_inner(p: Polynomial, q: Polynomial, k: int) -> float:
    """Apolar pairing of degree-k homogeneous polynomials: sum over shared
    monomials of k! alpha! times the two coefficients."""
    for poly in (p, q):
        deg = poly.homogeneous_degree()
        if deg is None or (not poly.is_zero() and deg != k):
            raise NotHomogeneousError(f"expected homogeneous degree {k}")
    kfac = factorial(k)
    total = 0.0
    for alpha, c in p.coeffs.items():
        dcoef = q.coeffs.get(alpha)
        if dcoef is not None:
            afac = 1.0
            for a in alpha:
                afac *= factorial(a)
            total += kfac * afac * c * dcoef
    return total


@dataclass(frozen=True)
class PolynomialCollection:
    d: int
    kappa: int
    members: tuple
    tags: tuple       # ("monomial", alpha) or ("untf", column_index)
    frame: Frame | None
    d0: int


def _cyclic_classes(d: int, kappa: int):
    """Non-pure-power degree-kappa monomial orbits under cyclic variable
    rotation, ordered by graded-lex representative; members start at the
    representative and follow the rotation."""
    seen = set()
    classes = []
    for alpha in monomials_of_degree(d, kappa):
        if alpha in seen:
            continue
        if any(a == kappa for a in alpha):   # pure power
            seen.add(alpha)
            continue
        orbit = []
        cur = alpha
        while cur not in orbit:
            orbit.append(cur)
            cur = cur[1:] + cur[:1]
        seen.update(orbit)
        rep = min(orbit, key=graded_key)
        start = orbit.index(rep)
        classes.append(tuple(orbit[start:] + orbit[:start]))
    classes.sort(key=lambda cls: graded_key(cls[0]))
    return classes


def _alpha_factorial(alpha) -> float:
    out = 1.0
    for a in alpha:
        out *= factorial(a)
    return out


def admissible_collection(d: int, kappa: int, m: int, seed: int = 0) -> PolynomialCollection:
    """Greedy collection of m homogeneous degree-kappa polynomials: cyclic
    classes of scaled non-pure monomials while they fit, then the remainder
    as tight-frame combinations of the pure powers."""
    if d < 1 or kappa < 1:
        raise InvalidDimensionError("need d >= 1 and kappa >= 1")
    total = comb(d + kappa - 1, d - 1)
    if not 1 <= m <= total:
        raise InfeasibleSizeError(
            f"m must lie in 1..{total} for d={d}, kappa={kappa}, got {m}")
    members: list[Polynomial] = []
    tags: list[tuple] = []
    remaining = m
    for cls in _cyclic_classes(d, kappa):
        if len(cls) <= remaining:
            for alpha in cls:
                members.append(Polynomial.monomial(d, alpha, 1.0 / sqrt(_alpha_factorial(alpha))))
                tags.append(("monomial", alpha))
            remaining -= len(cls)
        if remaining == 0:
            break
    frame = None
    d0 = remaining
    if d0 > 0:
        if d0 > d:
            raise ArtifactError(
                f"impossible remainder {d0} > d={d} for m={m}")   # pragma: no cover
        frame = harmonic_untf(d0, d)
        scale = 1.0 / sqrt(factorial(kappa))
        for col in range(d0):
            coeffs = {}
            for jvar in range(d):
                alpha = tuple(kappa if i == jvar else 0 for i in range(d))
                coeffs[alpha] = scale * frame.vectors[jvar, col]
            members.append(Polynomial(d, coeffs))
            tags.append(("untf", col))
    return PolynomialCollection(d=d, kappa=kappa, members=tuple(members),
                                tags=tuple(tags), frame=frame, d0=d0)


@dataclass(frozen=True)
class CriticalReport:
    lambda1: float
    lambda2: float
    max_residual_first: float
    max_residual_second: float


def critical_check(coll: PolynomialCollection) -> CriticalReport:
    """Evaluate both derivative Gram systems of the collection.  At a genuine
    critical configuration each is a multiple of the identity; the residuals
    report the worst deviation."""
    d, kappa, members = coll.d, coll.kappa, coll.members
    m = len(members)
    partials = [[p.partial(i) for i in range(d)] for p in members]
    G1 = np.zeros((m, m))
    for a in range(m):
        for b in range(a, m):
            s = sum(bombieri_inner(partials[a][i], partials[b][i], kappa - 1)
                    for i in range(d))
            G1[a, b] = G1[b, a] = s
    G2 = np.zeros((d, d))
    for i in range(d):
        for ip in range(i, d):
            s = sum(bombieri_inner(partials[a][i], partials[a][ip], kappa - 1)
                    for a in range(m))
            G2[i, ip] = G2[ip, i] = s
    lam1 = float(np.trace(G1) / m)
    lam2 = float(np.trace(G2) / d)
    return CriticalReport(
        lambda1=lam1, lambda2=lam2,
        max_residual_first=float(np.max(np.abs(G1 - lam1 * np.eye(m)))),
        max_residual_second=float(np.max(np.abs(G2 - lam2 * np.eye(d)))))


def build_embedding(d: int, n: int, seed: int = 0) -> PolynomialMap:
    """Concatenate all monomials below the top derivative order with an
    admissible top-degree collection, giving an n-component immersion whose
    density is strictly positive at the origin."""
    if not 1 <= d < n:
        raise InvalidDimensionError(f"need 1 <= d < n, got d={d}, n={n}")
    kappa = kappa_sequence(d, n)[-1]
    n_lower = comb(d + kappa - 1, d) - 1
    m = n - n_lower
    coll = admissible_collection(d, kappa, m, seed=seed)
    comps = [Polynomial.monomial(d, alpha) for alpha in graded_monomials(d, n_lower)]
    comps.extend(coll.members)
    return PolynomialMap(d, comps)
