"""Core subsets of discrete measures for finite function systems.

A weighted grid stands in for an absolutely continuous measure.  Given a
finite-dimensional space of functions and a subset E of the grid, the zeroth
order construction produces basis functions of unit E-average norm whose
coefficient tuple is a swap-maximal determinant on the norm's unit sphere
(refined by linear programming until the expansion constant is certified),
and a core subset E' of at least half the mass on which every function in
the span is bounded by a multiple of its E-average.

The derivative construction iterates this: it extends the function class by
first-order derivatives along constructed vector fields, picks the chart
subset whose differential wedge is within a factor two of maximal on the
largest slice of E, and takes the dual frame as the next level's fields.
Wedge densities, change-of-basis coefficients, and derivative-estimate
constants are measured, not assumed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix, hstack, vstack, eye as speye

from .convexgeom import PointSet, max_det_tuple
from .errors import (
    DegenerateNormError,
    DimensionMismatchError,
    EmptyVBetaError,
    UndefinedAtPointError,
)
from .indexing import monomials_of_degree
from .polynomials import Polynomial


@dataclass
class WeightedSampleSet:
    """Finite weighted points in a parameter domain.  `mask` selects the
    subset E; `cell_volumes` turn weights into densities when present."""

    points: np.ndarray
    weights: np.ndarray
    mask: np.ndarray
    cell_volumes: np.ndarray | None = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float)
        self.mask = np.asarray(self.mask, dtype=bool)
        if len(self.weights) != len(self.points) or len(self.mask) != len(self.points):
            raise DimensionMismatchError("weights and mask must match point count")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def mass(self, mask=None) -> float:
        m = self.mask if mask is None else mask
        return float(np.sum(self.weights[m]))

    def with_mask(self, mask) -> "WeightedSampleSet":
        return WeightedSampleSet(self.points, self.weights,
                                 np.asarray(mask, dtype=bool), self.cell_volumes)

    def densities(self) -> np.ndarray:
        if self.cell_volumes is None:
            return self.weights
        return self.weights / self.cell_volumes


def uniform_grid(lo, hi, resolution: int, density: float = 1.0) -> WeightedSampleSet:
    """Cell-centered uniform grid over a box with constant density."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    axes = [lo[i] + (hi[i] - lo[i]) * (np.arange(resolution) + 0.5) / resolution
            for i in range(len(lo))]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=-1)
    cellvol = float(np.prod((hi - lo) / resolution))
    n = len(points)
    return WeightedSampleSet(points=points,
                             weights=np.full(n, cellvol * density),
                             mask=np.ones(n, dtype=bool),
                             cell_volumes=np.full(n, cellvol))


@dataclass(frozen=True)
class FunctionSystem:
    """A finite list of polynomials on a box domain whose differentials are
    expected to span the cotangent space away from thin algebraic sets."""

    basis: tuple
    lo: np.ndarray
    hi: np.ndarray

    @property
    def d(self) -> int:
        return self.basis[0].nvars

    @property
    def k(self) -> int:
        return len(self.basis)

    def cotangent_span_fraction(self, points) -> float:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        grads = np.stack([p.gradient_values(pts) for p in self.basis], axis=1)
        gram = np.einsum("nka,nkb->nab", grads, grads)
        eig = np.linalg.eigvalsh(gram)
        return float(np.mean(eig[:, 0] > 1e-12 * (eig[:, -1] + 1e-30)))


def polynomial_system(d: int, max_degree: int, lo=0.0, hi=1.0) -> FunctionSystem:
    """All monomials of degree <= max_degree (constant included)."""
    basis = [Polynomial.constant(d, 1.0)]
    for deg in range(1, max_degree + 1):
        basis.extend(Polynomial.monomial(d, a) for a in monomials_of_degree(d, deg))
    lo = np.full(d, lo, dtype=float) if np.ndim(lo) == 0 else np.asarray(lo, float)
    hi = np.full(d, hi, dtype=float) if np.ndim(hi) == 0 else np.asarray(hi, float)
    return FunctionSystem(basis=tuple(basis), lo=lo, hi=hi)


class RationalFunction:
    """Quotient of two polynomials; gradients by the quotient rule."""

    __slots__ = ("num", "den")

    def __init__(self, num: Polynomial, den: Polynomial):
        if num.nvars != den.nvars:
            raise DimensionMismatchError("numerator and denominator variable counts differ")
        self.num = num
        self.den = den

    def evaluate(self, points):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.asarray(self.num.evaluate(points), dtype=float) \
                / np.asarray(self.den.evaluate(points), dtype=float)

    __call__ = evaluate

    def gradient_values(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        nv = np.asarray(self.num.evaluate(pts), dtype=float)
        dv = np.asarray(self.den.evaluate(pts), dtype=float)
        gn = self.num.gradient_values(pts)
        gd = self.den.gradient_values(pts)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (gn * dv[..., None] - gd * nv[..., None]) / (dv ** 2)[..., None]


def _as_rationals(members) -> list[RationalFunction]:
    out = []
    for f in members:
        if isinstance(f, RationalFunction):
            out.append(f)
        else:
            out.append(RationalFunction(f, Polynomial.constant(f.nvars, 1.0)))
    return out


def _combine(members: list[RationalFunction], coefs) -> RationalFunction:
    den = members[0].den
    num = Polynomial.zero(den.nvars)
    for c, f in zip(coefs, members):
        if f.den is not den and f.den != den:
            raise ValueError("members must share a denominator to combine")
        if c:
            num = num + f.num * float(c)
    return RationalFunction(num, den)


@dataclass(frozen=True)
class SphereBasis:
    """Unit-norm functions whose coefficient tuple is swap-maximal on the
    discretized unit sphere of the E-average norm, together with the
    certified expansion constant."""

    functions: tuple
    coefficients: np.ndarray   # (k, k) rows over `members`
    members: tuple
    eps_b: float


def _norm_operator(values: np.ndarray, u: np.ndarray):
    def norm_of(coefs):
        coefs = np.atleast_2d(np.asarray(coefs, dtype=float))
        return np.abs(coefs @ values.T) @ u
    return norm_of


def _sup_expansion_lp(values, u, objective):
    """Maximize objective . a over the unit ball of the weighted-L1 norm
    a -> sum_p u_p |values_p . a|."""
    n_pts, k = values.shape
    A = csr_matrix(values)
    I = speye(n_pts, format="csr")
    A_ub = vstack([hstack([A, -I]), hstack([-A, -I]),
                   hstack([csr_matrix((1, k)), csr_matrix(u[None, :])])], format="csr")
    b_ub = np.concatenate([np.zeros(2 * n_pts), [1.0]])
    c = np.concatenate([-np.asarray(objective, dtype=float), np.zeros(n_pts)])
    bounds = [(None, None)] * k + [(0, None)] * n_pts
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise DegenerateNormError(f"expansion LP failed with status {res.status}")
    return -res.fun, res.x[:k]


def unit_sphere_basis(members, mu: WeightedSampleSet, seed: int = 0,
                      net_factor: int = 200, tol: float = 1e-7,
                      max_rounds: int = 60) -> SphereBasis:
    """Normalize a seeded net of coefficient directions onto the unit sphere
    of the E-average norm, take a swap-maximal determinant tuple, and refine
    it by cutting planes (adding each LP maximizer whose expansion exceeds
    one) until the expansion constant is certified."""
    members = tuple(_as_rationals(members))
    k = len(members)
    pts = mu.points[mu.mask]
    w = mu.weights[mu.mask]
    mass = float(np.sum(w))
    if mass <= 0 or len(pts) == 0:
        raise DegenerateNormError("the subset E carries no mass")
    values = np.column_stack([np.asarray(f.evaluate(pts), dtype=float).ravel()
                              for f in members])
    if not np.all(np.isfinite(values)):
        raise DegenerateNormError("member values are not finite on E")
    sv = np.linalg.svd(values, compute_uv=False)
    if sv[-1] <= 1e-9 * max(sv[0], 1.0):
        raise DegenerateNormError("the E-average norm is degenerate on the span")
    u = w / mass
    norm_of = _norm_operator(values, u)
    if k == 1:
        nrm = float(norm_of(np.ones((1, 1)))[0])
        coef = np.array([[1.0 / nrm]])
        return SphereBasis(functions=(_combine(list(members), coef[0]),),
                           coefficients=coef, members=members, eps_b=0.0)
    rng = np.random.default_rng(seed)
    net = np.vstack([np.eye(k), rng.standard_normal((net_factor * k, k))])
    net = net[norm_of(net) > 1e-12]
    net = net / norm_of(net)[:, None]
    eps = np.inf
    tup = None
    for _ in range(max_rounds):
        tup = max_det_tuple(PointSet(net), k)
        if tup.rank < k:
            raise DegenerateNormError("sphere net does not span the coefficient space")
        C = tup.vectors
        Cinv = np.linalg.inv(C)
        sups, new_pts = [], []
        for i in range(k):
            sup, arg = _sup_expansion_lp(values, u, Cinv[:, i])
            sups.append(sup)
            if sup > 1.0 + tol:
                new_pts.append(arg / norm_of(arg[None, :])[0])
        eps = max(0.0, max(sups) - 1.0)
        if not new_pts:
            break
        net = np.vstack([net] + [p[None, :] for p in new_pts])
    coef = tup.vectors
    functions = tuple(_combine(list(members), coef[i]) for i in range(k))
    return SphereBasis(functions=functions, coefficients=coef,
                       members=members, eps_b=float(eps))


@dataclass(frozen=True)
class CoreSetResult:
    e_prime_mask: np.ndarray
    functions: tuple
    mass_ratio: float
    sup_constant: float      # measured on the seeded test family
    sup_bound: float         # 2k(1+eps_b), the threshold defining E'
    eps_b: float
    k: int


def _test_family(members, rng, size: int):
    k = len(members)
    coefs = np.vstack([np.eye(k), rng.standard_normal((size, k))])
    return [_combine(list(members), c) for c in coefs]


def core_subset(F, mu: WeightedSampleSet, seed: int = 0,
                family_size: int = 20) -> CoreSetResult:
    """Subset E' of at least half the mass of E on which the sum of the
    unit-norm basis functions is small, so every span member is bounded on E'
    by a constant times its E-average."""
    members = list(F.basis) if isinstance(F, FunctionSystem) else list(F)
    sb = unit_sphere_basis(members, mu, seed=seed)
    k = len(sb.functions)
    pts_all = mu.points
    abs_sum = np.zeros(len(pts_all))
    for f in sb.functions:
        abs_sum += np.abs(np.asarray(f.evaluate(pts_all), dtype=float))
    bound = 2.0 * k * (1.0 + sb.eps_b)
    e_prime = mu.mask & (abs_sum <= bound)
    mass_e = mu.mass()
    mass_ratio = mu.mass(e_prime) / mass_e
    # measured constant: worst ratio of sup on E' to average on E
    rng = np.random.default_rng(seed + 1)
    measured = 0.0
    w = mu.weights
    for f in _test_family(list(sb.members), rng, family_size):
        vals = np.abs(np.asarray(f.evaluate(pts_all), dtype=float))
        avg = float(np.sum(w[mu.mask] * vals[mu.mask])) / mass_e
        if avg <= 0:
            continue
        sup = float(np.max(vals[e_prime])) if np.any(e_prime) else 0.0
        measured = max(measured, sup / avg)
    return CoreSetResult(e_prime_mask=e_prime, functions=sb.functions,
                         mass_ratio=float(mass_ratio), sup_constant=float(measured),
                         sup_bound=float(bound), eps_b=sb.eps_b, k=k)


# derivative construction -----------------------------------------------------


@dataclass
class DualFrame:
    """Vector fields dual to the differentials of d chart functions: the
    field matrix at a point is the inverse Jacobian (columns are fields)."""

    functions: tuple

    @property
    def d(self) -> int:
        return self.functions[0].num.nvars

    def jacobian_at(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        rows = [f.gradient_values(pts) for f in self.functions]
        return np.stack(rows, axis=1)   # (N, d, d): row a = grad f_a

    def matrix_at(self, points) -> np.ndarray:
        J = self.jacobian_at(points)
        return np.linalg.inv(J)

    def apply(self, grads: np.ndarray, points) -> np.ndarray:
        """Contract gradients (N, d) of a function with the fields, giving
        the d directional derivatives at each point: (N, d)."""
        X = self.matrix_at(points)
        return np.einsum("nb,nbi->ni", grads, X)


@dataclass
class ConstantFields:
    """Constant vector fields given by a fixed column matrix (for tests and
    simple measures)."""

    matrix: np.ndarray

    def matrix_at(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.broadcast_to(self.matrix, (len(pts),) + self.matrix.shape)


def wedge_density(mu: WeightedSampleSet, fields, index: int) -> float:
    """Measure of the parallelepiped of the fields at one sample: the
    Radon-Nikodym density times |det dt_i(X_j)|."""
    X = fields.matrix_at(mu.points[index:index + 1])[0]
    det = float(np.linalg.det(X))
    if not np.isfinite(det) or det == 0.0:
        raise UndefinedAtPointError(f"fields are singular at sample {index}")
    return float(mu.densities()[index]) * abs(det)


def _sym_det(rows):
    d = len(rows)
    if d == 1:
        return rows[0][0]
    if d == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    raise ValueError("symbolic determinants implemented for d <= 2")


def _numerator_gradient(f: RationalFunction):
    """Row of numerator-level gradient polynomials: den*dnum - num*dden."""
    return [f.den * f.num.partial(b) - f.num * f.den.partial(b)
            for b in range(f.num.nvars)]


def _select_independent(funcs: list[RationalFunction], pts: np.ndarray,
                        tol: float = 1e-8) -> list[RationalFunction]:
    kept: list[RationalFunction] = []
    basis = np.zeros((len(pts), 0))
    for f in funcs:
        v = np.asarray(f.evaluate(pts), dtype=float).ravel()
        if not np.all(np.isfinite(v)):
            continue
        nv = np.linalg.norm(v)
        if nv <= 1e-14:
            continue
        resid = v - basis @ (basis.T @ v)
        if np.linalg.norm(resid) > tol * nv:
            basis = np.hstack([basis, (resid / np.linalg.norm(resid))[:, None]])
            kept.append(f)
    return kept


@dataclass
class LevelReport:
    k: int
    eps_b: float
    beta: tuple[int, ...]
    n_subsets: int
    u_mask: np.ndarray
    pigeonhole_ratio: float
    sup_constant: float       # measured: sup |X f| on U vs average on E cap U_prev
    sup_bound: float          # 2k(1+eps_b)
    wedge_bound: float        # inf over E' of wedge density, divided by mass(E)
    frame: DualFrame


@dataclass
class DerivativeCoreResult:
    levels: list[LevelReport]
    e_prime_mask: np.ndarray
    mass_ratio: float
    change_basis_max: float | None
    derivative_constant: float   # measured combined constant over the family
    per_step_bound: float        # product of the per-level 2k(1+eps) bounds


def _measure_level_constant(frame, span_members, mu, eu_mask, u_next, rng,
                            family_size: int) -> float:
    pts = mu.points
    mass_eu = mu.mass(eu_mask)
    X = frame.matrix_at(pts[u_next])
    worst = 0.0
    for g in _test_family(span_members, rng, family_size):
        gv = np.asarray(g.evaluate(pts), dtype=float)
        avg = float(np.sum(mu.weights[eu_mask] * np.abs(gv[eu_mask]))) / mass_eu
        if avg <= 0:
            continue
        grads = g.gradient_values(pts[u_next])
        xg = np.einsum("nb,nbi->ni", grads, X)
        sup = float(np.max(np.abs(xg))) if len(xg) else 0.0
        worst = max(worst, sup / avg)
    return worst


def derivative_core(F: FunctionSystem, mu: WeightedSampleSet, N: int,
                    seed: int = 0, family_size: int = 10) -> DerivativeCoreResult:
    """Iterated derivative estimates at desk scale (N <= 2, d <= 2).

    Each level normalizes a basis on E within the current open set, selects
    the chart whose differential wedge is within a factor two of maximal on
    the heaviest part of E, takes its dual frame as vector fields, and
    extends the function class by the symbolic first derivatives.  The final
    core subset is trimmed so wedge densities stay bounded below at every
    level, and all advertised constants are measured on a seeded family.
    """
    d = F.d
    if N < 1 or N > 2 or d > 2:
        raise ValueError("derivative_core supports N in {1, 2} and d <= 2")
    mass_e = mu.mass()
    if mass_e <= 0:
        raise DegenerateNormError("E carries no mass")
    rng = np.random.default_rng(seed)
    one = Polynomial.constant(d, 1.0)
    funcs = [RationalFunction(p, one) for p in F.basis]
    original = list(funcs)
    pts = mu.points
    n_pts = len(pts)
    U = np.ones(n_pts, dtype=bool)
    levels: list[LevelReport] = []
    symbolic_x: list[list[RationalFunction]] | None = None  # [i][member]
    chart_prev: tuple | None = None

    for level in range(1, N + 1):
        eu = mu.mask & U
        if mu.mass(eu) <= 0:
            raise EmptyVBetaError(f"no mass left at level {level}")
        span = _select_independent(funcs, pts[eu])
        sb = unit_sphere_basis(span, mu.with_mask(eu), seed=seed + level)
        k = len(sb.functions)
        grads = np.stack([f.gradient_values(pts) for f in sb.functions], axis=1)
        grads[~U] = 0.0
        subsets = list(itertools.combinations(range(k), d))
        wedges = np.empty((n_pts, len(subsets)))
        for s_i, beta in enumerate(subsets):
            wedges[:, s_i] = np.abs(np.linalg.det(grads[:, beta, :]))
        wedges[~U] = 0.0
        if len(subsets) == 1:
            other_max = np.zeros(n_pts)
        else:
            part = np.partition(wedges, -2, axis=1)
            m1, m2 = part[:, -1], part[:, -2]
            is_unique_max = (wedges >= m1[:, None]) & (m1[:, None] > m2[:, None])
        masses = np.empty(len(subsets))
        v_masks = []
        for s_i in range(len(subsets)):
            if len(subsets) == 1:
                others = other_max
            else:
                others = np.where(is_unique_max[:, s_i], m2, m1)
            v = U & (wedges[:, s_i] > 0.5 * others)
            v_masks.append(v)
            masses[s_i] = mu.mass(mu.mask & v)
        if np.all(masses <= 0):
            raise EmptyVBetaError(f"every candidate chart has zero mass at level {level}")
        best = int(np.argmax(masses))
        beta = subsets[best]
        positive = U & (wedges.max(axis=1) > 0)
        denom = mu.mass(mu.mask & positive) / len(subsets)
        pigeonhole = masses[best] / denom if denom > 0 else np.inf
        u_next = v_masks[best]
        frame = DualFrame(functions=tuple(sb.functions[b] for b in beta))
        sup_const = _measure_level_constant(frame, span, mu, eu, u_next,
                                            np.random.default_rng(seed + 10 + level),
                                            family_size)
        levels.append(LevelReport(
            k=k, eps_b=sb.eps_b, beta=beta, n_subsets=len(subsets),
            u_mask=u_next.copy(), pigeonhole_ratio=float(pigeonhole),
            sup_constant=float(sup_const), sup_bound=2.0 * k * (1.0 + sb.eps_b),
            wedge_bound=np.nan, frame=frame))
        U = u_next
        if level < N:
            # symbolic derivative extension: ratios of numerator-gradient
            # determinants against the chart wedge
            chart_rows = [_numerator_gradient(f) for f in frame.functions]
            wpoly = _sym_det(chart_rows)
            symbolic_x = []
            for i in range(d):
                col = []
                for f in original:
                    rows = [list(r) for r in chart_rows]
                    rows[i] = _numerator_gradient(f)
                    col.append(RationalFunction(_sym_det(rows), wpoly))
                symbolic_x.append(col)
            funcs = [RationalFunction(f.num * wpoly, wpoly) for f in original]
            for col in symbolic_x:
                funcs.extend(col)
            chart_prev = frame.functions

    # final core subset: zeroth-order trim over the surviving function class
    # on E within the last open set, then wedge density trims at every level
    eu_top = mu.mask & U
    sb_top = unit_sphere_basis(_select_independent(funcs, pts[eu_top]),
                               mu.with_mask(eu_top), seed=seed + 50)
    abs_sum = np.zeros(n_pts)
    for f in sb_top.functions:
        abs_sum += np.abs(np.asarray(f.evaluate(pts), dtype=float))
    k_top = len(sb_top.functions)
    core = eu_top & (abs_sum <= 2.0 * k_top * (1.0 + sb_top.eps_b))
    for j, lvl in enumerate(levels):
        J = lvl.frame.jacobian_at(pts[core])
        dens = mu.densities()[core] / np.abs(np.linalg.det(J))
        total = float(np.sum(mu.weights[core] / dens))
        if mu.mass(core) <= 0:
            break
        thr = 2.0 * total / mu.mass(core)
        keep = (1.0 / dens) <= thr
        idx = np.where(core)[0]
        new_core = np.zeros(n_pts, dtype=bool)
        new_core[idx[keep]] = True
        core = new_core
    # record wedge bounds on the final core
    for lvl in levels:
        if np.any(core):
            J = lvl.frame.jacobian_at(pts[core])
            dens = mu.densities()[core] / np.abs(np.linalg.det(J))
            lvl.wedge_bound = float(np.min(dens)) / mass_e
        else:
            lvl.wedge_bound = 0.0

    mass_ratio = mu.mass(core) / mass_e

    # change of basis between the last two frames
    change_max = None
    if N == 2 and chart_prev is not None and np.any(core):
        X2 = levels[1].frame.matrix_at(pts[core])
        worst = 0.0
        for g in chart_prev:
            gv = g.gradient_values(pts[core])
            cvals = np.einsum("nb,nbi->ni", gv, X2)
            worst = max(worst, float(np.max(np.abs(cvals))))
        change_max = worst

    # combined derivative-estimate constant on a seeded family of originals
    combined = 0.0
    if np.any(core):
        fam_rng = np.random.default_rng(seed + 99)
        fam_coefs = np.vstack([np.eye(len(original)),
                               fam_rng.standard_normal((family_size, len(original)))])
        w = mu.weights
        for coef in fam_coefs:
            f = _combine(original, coef)
            fv = np.abs(np.asarray(f.evaluate(pts), dtype=float))
            avg = float(np.sum(w[mu.mask] * fv[mu.mask])) / mass_e
            if avg <= 0:
                continue
            if N == 1:
                grads = f.gradient_values(pts[core])
                vals = np.einsum("nb,nbi->ni", grads, levels[0].frame.matrix_at(pts[core]))
                sup = float(np.max(np.abs(vals)))
            else:
                sup = 0.0
                X2 = levels[1].frame.matrix_at(pts[core])
                for i1 in range(d):
                    g = _combine(symbolic_x[i1], coef)
                    gv = g.gradient_values(pts[core])
                    vals = np.einsum("nb,nbi->ni", gv, X2)
                    sup = max(sup, float(np.max(np.abs(vals))))
            combined = max(combined, sup / avg)
    per_step = float(np.prod([lvl.sup_bound for lvl in levels]))
    return DerivativeCoreResult(levels=levels, e_prime_mask=core,
                                mass_ratio=float(mass_ratio),
                                change_basis_max=change_max,
                                derivative_constant=float(combined),
                                per_step_bound=per_step)
