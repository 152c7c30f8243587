"""Exact multivariate polynomials, polynomial maps, and jets.

Polynomials are stored sparsely as a dict from exponent tuple to float
coefficient.  Differentiation acts on exponents and coefficients exactly;
floating point only enters when a polynomial is evaluated.  Polynomial maps
bundle n component polynomials sharing d variables and support jet
extraction (all partial derivatives at a point up to a given order).

Maps can be serialized to a plain text format, one component per line, terms
written as ``coef * x1^a1 * x2^a2`` and joined with `` + ``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidDimensionError,
    OrderExceededError,
    ParseError,
)
from .indexing import graded_key, graded_monomials, multiindices_upto


class Polynomial:
    """Sparse polynomial in ``nvars`` variables keyed by exponent tuples."""

    __slots__ = ("nvars", "coeffs")

    def __init__(self, nvars: int, coeffs=None):
        self.nvars = int(nvars)
        if self.nvars < 1:
            raise InvalidDimensionError("polynomial needs at least one variable")
        clean = {}
        if coeffs:
            for alpha, c in coeffs.items():
                alpha = tuple(int(a) for a in alpha)
                if len(alpha) != self.nvars:
                    raise DimensionMismatchError(
                        f"exponent tuple {alpha} does not have length {self.nvars}"
                    )
                if any(a < 0 for a in alpha):
                    raise ValueError(f"negative exponent in {alpha}")
                c = float(c)
                if c != 0.0:
                    clean[alpha] = clean.get(alpha, 0.0) + c
        self.coeffs = {a: c for a, c in clean.items() if c != 0.0}

    # construction helpers -------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls(nvars, {})

    @classmethod
    def constant(cls, nvars: int, value: float) -> "Polynomial":
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def monomial(cls, nvars: int, alpha, coef: float = 1.0) -> "Polynomial":
        return cls(nvars, {tuple(alpha): coef})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "Polynomial":
        alpha = [0] * nvars
        alpha[i] = 1
        return cls(nvars, {tuple(alpha): 1.0})

    # basic queries ---------------------------------------------------------

    def terms(self):
        """Terms as (alpha, coef) pairs in graded-lex order."""
        return sorted(self.coeffs.items(), key=lambda item: graded_key(item[0]))

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self.coeffs:
            return -1
        return max(sum(a) for a in self.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    def homogeneous_degree(self):
        """Common degree of all terms, or None if mixed. Zero counts as
        homogeneous of any degree."""
        degs = {sum(a) for a in self.coeffs}
        if not degs:
            return 0
        if len(degs) == 1:
            return degs.pop()
        return None

    # arithmetic ------------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.nvars, other)
        if other.nvars != self.nvars:
            raise DimensionMismatchError("variable counts differ")
        coeffs = dict(self.coeffs)
        for a, c in other.coeffs.items():
            coeffs[a] = coeffs.get(a, 0.0) + c
        return Polynomial(self.nvars, coeffs)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.nvars, {a: -c for a, c in self.coeffs.items()})

    def __sub__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.nvars, other)
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return Polynomial(self.nvars, {a: c * other for a, c in self.coeffs.items()})
        if other.nvars != self.nvars:
            raise DimensionMismatchError("variable counts differ")
        coeffs: dict = {}
        for a1, c1 in self.coeffs.items():
            for a2, c2 in other.coeffs.items():
                key = tuple(x + y for x, y in zip(a1, a2))
                coeffs[key] = coeffs.get(key, 0.0) + c1 * c2
        return Polynomial(self.nvars, coeffs)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = Polynomial.constant(self.nvars, 1.0)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.nvars == other.nvars \
            and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.nvars, tuple(sorted(self.coeffs.items()))))

    def __repr__(self):
        if not self.coeffs:
            return "Polynomial(0)"
        parts = []
        for alpha, c in self.terms():
            mono = "*".join(f"x{i + 1}^{a}" for i, a in enumerate(alpha) if a)
            parts.append(f"{c:g}{'*' + mono if mono else ''}")
        return "Polynomial(" + " + ".join(parts) + ")"

    # calculus --------------------------------------------------------------

    def partial(self, i: int) -> "Polynomial":
        """Exact partial derivative in variable i."""
        coeffs = {}
        for alpha, c in self.coeffs.items():
            a = alpha[i]
            if a == 0:
                continue
            key = alpha[:i] + (a - 1,) + alpha[i + 1:]
            coeffs[key] = coeffs.get(key, 0.0) + c * a
        return Polynomial(self.nvars, coeffs)

    def partial_multi(self, alpha) -> "Polynomial":
        out = self
        for i, a in enumerate(alpha):
            for _ in range(a):
                out = out.partial(i)
        return out

    def gradient(self) -> list["Polynomial"]:
        return [self.partial(i) for i in range(self.nvars)]

    # evaluation ------------------------------------------------------------

    def evaluate(self, point):
        """Evaluate at a point of shape (d,) or a batch of shape (..., d)."""
        pt = np.asarray(point, dtype=float)
        if pt.shape[-1] != self.nvars:
            raise DimensionMismatchError(
                f"point has {pt.shape[-1]} coordinates, polynomial has {self.nvars}"
            )
        out = np.zeros(pt.shape[:-1])
        for alpha, c in self.coeffs.items():
            term = np.full(pt.shape[:-1], c)
            for i, a in enumerate(alpha):
                if a:
                    term = term * pt[..., i] ** a
            out = out + term
        if out.shape == ():
            return float(out)
        return out

    __call__ = evaluate

    def gradient_values(self, points):
        """Gradient evaluated at a batch of points, shape (..., d)."""
        grads = self.gradient()
        pts = np.asarray(points, dtype=float)
        out = np.stack([np.asarray(g.evaluate(pts), dtype=float) for g in grads], axis=-1)
        return out

    def substitute_linear(self, L) -> "Polynomial":
        """Substitute x_i = sum_j L[i, j] * t_j, returning a polynomial in the
        t variables (L is nvars x nvars)."""
        L = np.asarray(L, dtype=float)
        if L.shape != (self.nvars, self.nvars):
            raise DimensionMismatchError("substitution matrix shape mismatch")
        lin = [Polynomial(self.nvars, {tuple(int(i == j) for j in range(self.nvars)): L[i, j]
                                       for j in range(self.nvars)})
               for i in range(self.nvars)]
        out = Polynomial.zero(self.nvars)
        for alpha, c in self.coeffs.items():
            term = Polynomial.constant(self.nvars, c)
            for i, a in enumerate(alpha):
                if a:
                    term = term * lin[i] ** a
            out = out + term
        return out


def partial_derivative(f: Polynomial, alpha) -> Polynomial:
    """Exact alpha-th partial derivative of f."""
    return f.partial_multi(alpha)


@dataclass(frozen=True)
class Jet:
    """All partial derivatives of a polynomial map at a base point, keyed by
    multiindex (1 <= degree <= order)."""

    point: np.ndarray
    order: int
    d: int
    n: int
    entries: dict

    def first_derivative_matrix(self) -> np.ndarray:
        """Jacobian columns: shape (n, d), column i = d/dt_i of the map."""
        cols = []
        for i in range(self.d):
            alpha = tuple(int(i == j) for j in range(self.d))
            cols.append(self.entries[alpha])
        return np.stack(cols, axis=1)


class PolynomialMap:
    """Polynomial immersion of d parameters into n coordinates."""

    __slots__ = ("d", "n", "components")

    def __init__(self, d: int, components):
        components = list(components)
        for comp in components:
            if not isinstance(comp, Polynomial) or comp.nvars != d:
                raise DimensionMismatchError("all components must share variable count d")
        self.d = int(d)
        self.n = len(components)
        self.components = components

    def evaluate(self, point):
        pt = np.asarray(point, dtype=float)
        vals = [np.asarray(c.evaluate(pt), dtype=float) for c in self.components]
        return np.stack(vals, axis=-1)

    __call__ = evaluate

    def compose_linear(self, L) -> "PolynomialMap":
        """The map t -> f(L t)."""
        return PolynomialMap(self.d, [c.substitute_linear(L) for c in self.components])

    def affine_image(self, T, b=None) -> "PolynomialMap":
        """The map t -> T f(t) + b for an n x n matrix T."""
        T = np.asarray(T, dtype=float)
        if T.shape != (self.n, self.n):
            raise DimensionMismatchError("affine matrix must be n x n")
        if b is None:
            b = np.zeros(self.n)
        comps = []
        for i in range(self.n):
            acc = Polynomial.constant(self.d, float(b[i]))
            for j in range(self.n):
                if T[i, j]:
                    acc = acc + self.components[j] * float(T[i, j])
            comps.append(acc)
        return PolynomialMap(self.d, comps)

    def __repr__(self):
        return f"PolynomialMap(d={self.d}, n={self.n})"


def jet(f: PolynomialMap, point, order: int) -> Jet:
    """All derivative vectors of f at `point` for multiindices of degree 1
    through `order`.  Derivatives are taken symbolically, then evaluated."""
    if order < 1:
        raise ValueError("jet order must be >= 1")
    pt = np.asarray(point, dtype=float)
    if pt.shape != (f.d,):
        raise DimensionMismatchError(f"point must have length {f.d}")
    # derive each multiindex from a predecessor to reuse symbolic work
    derivs = {(0,) * f.d: list(f.components)}
    entries = {}
    for alpha in multiindices_upto(f.d, order):
        i = next(k for k, a in enumerate(alpha) if a > 0)
        parent = alpha[:i] + (alpha[i] - 1,) + alpha[i + 1:]
        polys = [p.partial(i) for p in derivs[parent]]
        derivs[alpha] = polys
        entries[alpha] = np.array([p.evaluate(pt) for p in polys], dtype=float)
    return Jet(point=pt, order=order, d=f.d, n=f.n, entries=entries)


def directional_column(jt: Jet, directions) -> np.ndarray:
    """Iterated directional derivative for constant direction vectors: the
    symmetric contraction of the jet against u_1 (x) ... (x) u_kappa."""
    dirs = np.asarray(directions, dtype=float)
    if dirs.ndim == 1:
        dirs = dirs[None, :]
    kappa = dirs.shape[0]
    if dirs.shape[1] != jt.d:
        raise DimensionMismatchError("direction vectors must have length d")
    if kappa > jt.order:
        raise OrderExceededError(f"{kappa} directions exceed jet order {jt.order}")
    acc = np.zeros(jt.n)
    for tup in itertools.product(range(jt.d), repeat=kappa):
        coef = 1.0
        for slot, i in enumerate(tup):
            coef *= dirs[slot, i]
        if coef == 0.0:
            continue
        alpha = tuple(tup.count(i) for i in range(jt.d))
        acc += coef * jt.entries[alpha]
    return acc


def graph_embedding(phi: Polynomial) -> PolynomialMap:
    """The graph map (t_1, ..., t_d, phi(t))."""
    d = phi.nvars
    comps = [Polynomial.variable(d, i) for i in range(d)]
    comps.append(phi)
    return PolynomialMap(d, comps)


def model_embedding(d: int, n: int) -> PolynomialMap:
    """Components are the first n nonconstant monomials in graded-lex order."""
    if d < 1 or n < d:
        raise InvalidDimensionError(f"need 1 <= d <= n, got d={d}, n={n}")
    comps = [Polynomial.monomial(d, alpha) for alpha in graded_monomials(d, n)]
    return PolynomialMap(d, comps)


# text format -----------------------------------------------------------------

_VAR_RE = re.compile(r"^x(\d+)(?:\^(\d+))?$")


def map_to_text(f: PolynomialMap) -> str:
    lines = []
    for comp in f.components:
        terms = []
        for alpha, c in comp.terms():
            parts = [repr(c)]
            parts.extend(f"x{i + 1}^{a}" for i, a in enumerate(alpha) if a)
            terms.append(" * ".join(parts))
        lines.append(" + ".join(terms) if terms else "0")
    return "\n".join(lines) + "\n"


def map_from_text(text: str, d: int | None = None) -> PolynomialMap:
    """Parse the one-component-per-line format.  The variable count is the
    largest index mentioned unless `d` is given."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ParseError("no components found")
    parsed = []
    max_var = 1
    for ln in lines:
        terms = []
        for raw in ln.split(" + "):
            raw = raw.strip()
            if not raw:
                raise ParseError(f"empty term in line {ln!r}")
            coef = 1.0
            powers: dict[int, int] = {}
            saw_coef = False
            for tok in (t.strip() for t in raw.split("*")):
                m = _VAR_RE.match(tok)
                if m:
                    idx = int(m.group(1))
                    if idx < 1:
                        raise ParseError(f"bad variable index in {tok!r}")
                    exp = int(m.group(2)) if m.group(2) else 1
                    powers[idx - 1] = powers.get(idx - 1, 0) + exp
                    max_var = max(max_var, idx)
                else:
                    try:
                        value = float(tok)
                    except ValueError:
                        raise ParseError(f"cannot parse token {tok!r}") from None
                    if saw_coef:
                        coef *= value
                    else:
                        coef = value
                        saw_coef = True
            terms.append((coef, powers))
        parsed.append(terms)
    nvars = d if d is not None else max_var
    comps = []
    for terms in parsed:
        coeffs: dict = {}
        for coef, powers in terms:
            if powers and max(powers) >= nvars:
                raise ParseError("variable index exceeds declared dimension")
            alpha = tuple(powers.get(i, 0) for i in range(nvars))
            coeffs[alpha] = coeffs.get(alpha, 0.0) + coef
        comps.append(Polynomial(nvars, coeffs))
    return PolynomialMap(nvars, comps)
