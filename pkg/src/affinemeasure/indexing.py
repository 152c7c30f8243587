"""Monomial index combinatorics.

Multiindices are plain tuples of nonnegative integer exponents, one entry per
variable.  This module computes the kappa sequence (how many derivatives go
into each column of the curvature determinant), the two-dimensional index
grid of (column, derivative-slot) pairs, the homogeneous dimension Q, and
graded-lexicographic monomial enumerations.  Everything here is exact integer
arithmetic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

from .errors import InvalidDimensionError


def _check_dims(d: int, n: int) -> None:
    if d < 1 or n < d:
        raise InvalidDimensionError(f"need 1 <= d <= n, got d={d}, n={n}")


def degree(alpha) -> int:
    """Total degree of a multiindex (sum of exponents)."""
    return sum(alpha)


def kappa_sequence(d: int, n: int) -> list[int]:
    """kappa_j = least k such that the space of degree-<=k polynomials in d
    variables has dimension at least j+1 (that dimension is C(d+k, d))."""
    _check_dims(d, n)
    kappas = []
    k = 1
    for j in range(1, n + 1):
        while comb(d + k, d) < j + 1:
            k += 1
        kappas.append(k)
    return kappas


def homogeneous_dimension(d: int, n: int) -> int:
    """Q = sum of the kappa sequence; equals the minimal total degree of n
    distinct nonconstant monomials in d variables."""
    return sum(kappa_sequence(d, n))


@dataclass(frozen=True)
class IndexSet:
    """The grid of (column j, slot k) pairs with 1 <= k <= kappa_j, ordered
    lexicographically (column-major, bottom-to-top within a column)."""

    d: int
    n: int
    kappa: tuple[int, ...]
    pairs: tuple[tuple[int, int], ...]
    Q: int


def index_set(d: int, n: int) -> IndexSet:
    kappas = kappa_sequence(d, n)
    pairs = tuple((j, k) for j in range(1, n + 1) for k in range(1, kappas[j - 1] + 1))
    return IndexSet(d=d, n=n, kappa=tuple(kappas), pairs=pairs, Q=len(pairs))


def monomials_of_degree(d: int, deg: int):
    """Yield exponent tuples of total degree `deg` in descending
    lexicographic order (leading variable largest first)."""
    if d == 1:
        yield (deg,)
        return
    for first in range(deg, -1, -1):
        for rest in monomials_of_degree(d - 1, deg - first):
            yield (first,) + rest


def graded_monomials(d: int, count: int) -> list[tuple[int, ...]]:
    """First `count` nonconstant monomial exponent vectors in graded
    lexicographic order."""
    out: list[tuple[int, ...]] = []
    deg = 1
    while len(out) < count:
        for alpha in monomials_of_degree(d, deg):
            out.append(alpha)
            if len(out) == count:
                return out
        deg += 1
    return out


def multiindices_upto(d: int, order: int, include_zero: bool = False):
    """All exponent tuples with 1 <= degree <= order (0 included on request),
    grouped by degree in graded-lex order."""
    out = []
    if include_zero:
        out.append((0,) * d)
    for deg in range(1, order + 1):
        out.extend(monomials_of_degree(d, deg))
    return out


def graded_key(alpha):
    """Sort key realizing graded-lex order on exponent tuples."""
    return (sum(alpha), tuple(-a for a in alpha))


def minimal_degree_sum(d: int, n: int) -> int:
    """Independent route to Q: enumerate all nonconstant monomials of degree
    up to kappa_n and sum the n smallest degrees."""
    _check_dims(d, n)
    cap = kappa_sequence(d, n)[-1]
    degs = sorted(
        degree(a) for a in itertools.chain.from_iterable(
            monomials_of_degree(d, g) for g in range(1, cap + 1)
        )
    )
    return sum(degs[:n])
