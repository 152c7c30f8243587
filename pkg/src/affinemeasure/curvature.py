"""The affine curvature tensor and its SL-transformed norm objective.

At a point p the tensor is a Q-linear form on parameter directions: an
assignment of one direction index per (column, slot) pair evaluates to the
determinant of the n x n matrix whose j-th column is the kappa_j-fold
iterated coordinate derivative of the immersion, differentiated in the
directions assigned to column j.  The tensor is stored densely as a d^Q
array; the minimization objective contracts every mode with a unimodular
matrix M and takes the squared Frobenius norm.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, NotUnimodularError, SizeCapExceededError
from .indexing import IndexSet, index_set
from .polynomials import PolynomialMap, jet

DEFAULT_CAP = 1 << 20
_DET_CHUNK = 1 << 14


@dataclass(frozen=True)
class CurvatureTensor:
    d: int
    n: int
    Q: int
    index_set: IndexSet
    entries: np.ndarray  # shape (d,) * Q, axes in lexicographic pair order

    def norm_squared(self) -> float:
        return float(np.sum(self.entries ** 2))


def _column_table(jt, kappa_j: int) -> np.ndarray:
    """Derivative vectors for every direction tuple of one column, indexed by
    the mixed-radix value of the tuple (first slot slowest)."""
    d, n = jt.d, jt.n
    table = np.empty((d ** kappa_j, n))
    for t, tup in enumerate(itertools.product(range(d), repeat=kappa_j)):
        alpha = tuple(tup.count(i) for i in range(d))
        table[t] = jt.entries[alpha]
    return table


def assemble_tensor(f: PolynomialMap, point, idx: IndexSet | None = None,
                    cap: int = DEFAULT_CAP) -> CurvatureTensor:
    """Build the dense tensor at `point`.  Columns are computed once per
    distinct direction tuple, then determinants are taken over all column
    choices in vectorized batches."""
    idx = idx if idx is not None else index_set(f.d, f.n)
    if idx.d != f.d or idx.n != f.n:
        raise DimensionMismatchError("index set does not match the map")
    d, n, Q = f.d, f.n, idx.Q
    size = d ** Q
    if size > cap:
        raise SizeCapExceededError(f"d^Q = {size} exceeds cap {cap}")
    jt = jet(f, point, idx.kappa[-1])
    tables = [_column_table(jt, kj) for kj in idx.kappa]
    # column j owns a block of kappa_j consecutive axes; in C order the
    # leading block varies slowest, so block strides multiply from the right
    radices = [d ** kj for kj in idx.kappa]
    strides = np.empty(n, dtype=np.int64)
    acc = 1
    for j in range(n - 1, -1, -1):
        strides[j] = acc
        acc *= radices[j]
    entries = np.empty(size)
    for start in range(0, size, _DET_CHUNK):
        stop = min(start + _DET_CHUNK, size)
        flat = np.arange(start, stop, dtype=np.int64)
        mats = np.empty((stop - start, n, n))
        for j in range(n):
            sub = (flat // strides[j]) % radices[j]
            mats[:, :, j] = tables[j][sub]
        entries[start:stop] = np.linalg.det(mats)
    return CurvatureTensor(d=d, n=n, Q=Q, index_set=idx,
                           entries=entries.reshape((d,) * Q))


def tensor_entry(f: PolynomialMap, point, assignment) -> float:
    """A single determinant for one direction assignment (length Q, values in
    1..d), without assembling the full tensor."""
    idx = index_set(f.d, f.n)
    assignment = [int(a) for a in assignment]
    if len(assignment) != idx.Q:
        raise DimensionMismatchError(f"assignment must have length Q = {idx.Q}")
    if any(a < 1 or a > f.d for a in assignment):
        raise DimensionMismatchError("direction indices must lie in 1..d")
    jt = jet(f, point, idx.kappa[-1])
    cols = []
    pos = 0
    for kj in idx.kappa:
        block = assignment[pos:pos + kj]
        pos += kj
        alpha = tuple(block.count(i + 1) for i in range(f.d))
        cols.append(jt.entries[alpha])
    return float(np.linalg.det(np.stack(cols, axis=1)))


def mode_transform(entries: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Apply M to every mode of the tensor: out[j...] = sum over i... of
    prod_s M[j_s, i_s] * entries[i...]."""
    T = np.asarray(entries, dtype=float)
    M = np.asarray(M, dtype=float)
    for _ in range(T.ndim):
        T = np.tensordot(M, T, axes=(1, 0))
        T = np.moveaxis(T, 0, -1)
    return T


def _entries_of(T) -> np.ndarray:
    return T.entries if isinstance(T, CurvatureTensor) else np.asarray(T, dtype=float)


def sl_objective(tensor, M) -> float:
    """Squared Frobenius norm of the mode-transformed tensor.  M must be
    unimodular to within 1e-9."""
    entries = _entries_of(tensor)
    M = np.asarray(M, dtype=float)
    if abs(np.linalg.det(M) - 1.0) > 1e-9:
        raise NotUnimodularError(f"det M = {np.linalg.det(M)!r}")
    return float(np.sum(mode_transform(entries, M) ** 2))


def tensor_value_and_grad(tensor):
    """Return f(M) = |T x M|^2 together with its left-trivialized gradient on
    the traceless Lie algebra (the gradient is symmetric: a sum of mode
    Gram matrices)."""
    entries = _entries_of(tensor)
    d = entries.shape[0] if entries.ndim else 1
    Q = entries.ndim

    def value_and_grad(M):
        TM = mode_transform(entries, M)
        val = float(np.sum(TM ** 2))
        G = np.zeros((d, d))
        X = TM
        for _ in range(Q):
            U = X.reshape(d, -1)
            G += U @ U.T
            X = np.moveaxis(X, 0, -1)
        G *= 2.0
        G -= (np.trace(G) / d) * np.eye(d)
        return val, G

    return value_and_grad


def batch_sl_objective(tensor, Ms: np.ndarray) -> np.ndarray:
    """sl_objective evaluated at a batch of matrices, shape (N, d, d).
    Unimodularity is the caller's responsibility (used by grid searches)."""
    entries = _entries_of(tensor)
    Ms = np.asarray(Ms, dtype=float)
    N = Ms.shape[0]
    Q = entries.ndim
    d = entries.shape[0]
    X = np.broadcast_to(entries, (N,) + entries.shape).reshape(N, d, -1).copy()
    for _ in range(Q):
        X = np.matmul(Ms, X)
        X = np.moveaxis(X.reshape((N,) + entries.shape), 1, -1).reshape(N, d, -1)
    return np.sum(X.reshape(N, -1) ** 2, axis=1)
