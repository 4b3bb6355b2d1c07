"""Sparse storage, direct factorization and eigen/Rayleigh utilities.

Storage is compressed-row with strictly increasing column indices per row.
Factorization is a SuperLU decomposition (partial pivoting, COLAMD column
ordering) behind a stable interface; duplicate-triplet summation and all
iteration orders are deterministic so repeated runs are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NoConvergence, SingularMatrix


@dataclass(frozen=True)
class SparseMatrix:
    n_rows: int
    n_cols: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        for name in ("indptr", "indices", "data"):
            arr = np.ascontiguousarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @staticmethod
    def from_scipy(m) -> "SparseMatrix":
        m = sp.csr_matrix(m)
        m.sort_indices()
        return SparseMatrix(m.shape[0], m.shape[1], m.indptr.copy(), m.indices.copy(), m.data.copy())

    @staticmethod
    def from_dense(a) -> "SparseMatrix":
        return SparseMatrix.from_scipy(sp.csr_matrix(np.asarray(a, dtype=float)))

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=(self.n_rows, self.n_cols))

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    @property
    def nnz(self) -> int:
        return len(self.data)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.to_scipy() @ x

    def rmatvec(self, x: np.ndarray) -> np.ndarray:
        return self.to_scipy().T @ x

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix.from_scipy(self.to_scipy().T)


def assemble_from_triplets(triplets, shape) -> SparseMatrix:
    """Sum (row, col, value) triplets into CRS form.

    Duplicates are summed in a fixed deterministic order: sorted by row,
    then column, then insertion index (the sort is stable).
    """
    if isinstance(triplets, tuple) and len(triplets) == 3:
        rows, cols, vals = (np.asarray(a) for a in triplets)
    else:
        arr = np.asarray(list(triplets), dtype=float)
        if arr.size == 0:
            arr = arr.reshape(0, 3)
        rows, cols, vals = arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64), arr[:, 2]
    rows = rows.astype(np.int64).ravel()
    cols = cols.astype(np.int64).ravel()
    vals = np.asarray(vals, dtype=float).ravel()
    n_rows, n_cols = shape
    if len(rows) and (rows.min() < 0 or rows.max() >= n_rows or cols.min() < 0 or cols.max() >= n_cols):
        raise IndexError("triplet index out of range")

    order = np.lexsort((cols, rows))  # stable: ties keep insertion order
    rows, cols, vals = rows[order], cols[order], vals[order]
    if len(rows):
        new_group = np.empty(len(rows), dtype=bool)
        new_group[0] = True
        new_group[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        starts = np.flatnonzero(new_group)
        out_vals = np.add.reduceat(vals, starts)
        out_rows, out_cols = rows[starts], cols[starts]
    else:
        out_rows = out_cols = np.empty(0, dtype=np.int64)
        out_vals = np.empty(0)
    indptr = np.zeros(n_rows + 1, dtype=np.int64)
    np.add.at(indptr, out_rows + 1, 1)
    indptr = np.cumsum(indptr)
    return SparseMatrix(n_rows, n_cols, indptr, out_cols.astype(np.int32), out_vals)


@dataclass(frozen=True)
class Factorization:
    """LU factors with row pivoting and a fill-reducing column ordering."""

    n: int
    _lu: object

    def solve(self, b: np.ndarray) -> np.ndarray:
        return self._lu.solve(np.asarray(b, dtype=float))


def lu_factorize(a: SparseMatrix) -> Factorization:
    if a.n_rows != a.n_cols:
        raise ValueError("LU factorization needs a square matrix")
    csc = a.to_scipy().tocsc()
    try:
        lu = spla.splu(csc, permc_spec="COLAMD")
    except RuntimeError as exc:
        raise SingularMatrix(message=str(exc)) from exc
    # SuperLU reports exact singularity lazily in some paths; probe once.
    u_diag = lu.U.diagonal()
    bad = np.flatnonzero(u_diag == 0.0)
    if len(bad):
        raise SingularMatrix(pivot=int(bad[0]))
    return Factorization(a.n_rows, lu)


def lu_solve(f: Factorization, b: np.ndarray) -> np.ndarray:
    return f.solve(b)


def solve_sparse(a: SparseMatrix, b: np.ndarray) -> np.ndarray:
    return lu_solve(lu_factorize(a), b)


def smallest_singular_value(a: SparseMatrix, tol: float = 1e-10, max_iter: int = 2000) -> float:
    """Smallest singular value via inverse power iteration on A^T A.

    Stops on the symmetric eigen-residual, which stays meaningful when the
    smallest singular values are clustered.
    """
    m = a.to_scipy()
    if m.nnz == 0:
        raise ValueError("matrix is identically zero")
    c = (m.T @ m).tocsc()
    try:
        lu = spla.splu(c, permc_spec="COLAMD")
    except RuntimeError as exc:
        raise SingularMatrix(message=str(exc)) from exc
    x = np.full(c.shape[0], 1.0 / np.sqrt(c.shape[0]))
    lam_old = np.inf
    for it in range(max_iter):
        y = lu.solve(x)
        ny = np.linalg.norm(y)
        x = y / ny
        cx = c @ x
        lam = float(x @ cx)
        resid = float(np.linalg.norm(cx - lam * x))
        if resid <= tol * max(abs(lam), 1e-300) or abs(lam - lam_old) <= tol * abs(lam):
            return float(np.sqrt(max(lam, 0.0)))
        lam_old = lam
    raise NoConvergence(max_iter)


def power_iteration_generalized(a_mat, b_mat, tol: float = 1e-12, max_iter: int = 5000) -> tuple[float, np.ndarray]:
    """Largest mu of A x = mu B x, both sparse symmetric, B SPD.

    Stops on the generalized eigen-residual or on eigenvalue stagnation;
    the residual keeps the stop meaningful for degenerate dominant pairs.
    """
    a = a_mat.to_scipy() if isinstance(a_mat, SparseMatrix) else sp.csr_matrix(a_mat)
    b = b_mat.to_scipy() if isinstance(b_mat, SparseMatrix) else sp.csr_matrix(b_mat)
    bf = lu_factorize(SparseMatrix.from_scipy(b))
    x = np.full(a.shape[0], 1.0 / np.sqrt(a.shape[0]))
    mu_old = 0.0
    for it in range(max_iter):
        ax = a @ x
        y = bf.solve(ax)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0, x
        x = y / ny
        ax = a @ x
        bx = b @ x
        mu = float(x @ ax) / float(x @ bx)
        resid = float(np.linalg.norm(ax - mu * bx))
        if resid <= tol * max(float(np.linalg.norm(ax)), 1e-300) \
                or abs(mu - mu_old) <= tol * max(abs(mu), 1e-300):
            return mu, x
        mu_old = mu
    raise NoConvergence(max_iter)


def rayleigh_maximize(gram: SparseMatrix, nonlinear_norm, constraint_projector, iters: int = 300,
                      x0: np.ndarray | None = None, rng: np.random.Generator | None = None,
                      callback=None) -> tuple[float, np.ndarray]:
    """Maximize norm(v)^2 / (v^T G v) by projected gradient ascent.

    ``nonlinear_norm(v)`` must return ``(value, gradient)`` of the norm;
    ``constraint_projector`` is a linear idempotent map onto the feasible
    subspace.  The objective is nondecreasing across iterations by
    backtracking; raises NoConvergence if it fails to stabilize.
    """
    g = gram.to_scipy()
    n = g.shape[0]
    if x0 is None:
        rng = rng or np.random.default_rng(0)
        x0 = rng.standard_normal(n)
    v = constraint_projector(np.asarray(x0, dtype=float))
    d = float(v @ (g @ v))
    if d <= 0:
        raise ValueError("initial vector is annihilated by the constraints")
    v = v / np.sqrt(d)

    def objective(w):
        nw, _ = nonlinear_norm(w)
        return nw * nw / float(w @ (g @ w))

    q = objective(v)
    stable = 0
    step = 1.0
    for it in range(iters):
        nv, grad_n = nonlinear_norm(v)
        gv = g @ v
        dgv = float(v @ gv)
        grad = (2.0 * nv * grad_n * dgv - nv * nv * 2.0 * gv) / (dgv * dgv)
        grad = constraint_projector(grad)
        gnorm = np.linalg.norm(grad)
        if gnorm == 0.0:
            stable += 1
        else:
            s = step
            improved = False
            for _ in range(40):
                cand = constraint_projector(v + s * grad / gnorm)
                dc = float(cand @ (g @ cand))
                if dc > 0:
                    cand = cand / np.sqrt(dc)
                    qc = objective(cand)
                    if qc >= q:
                        improved = qc > q * (1.0 + 1e-14)
                        v, q = cand, max(qc, q)
                        step = min(s * 2.0, 1e6)
                        break
                s *= 0.5
            stable = 0 if improved else stable + 1
        if callback is not None:
            callback(q)
        if stable >= 3:
            return q, v
    raise NoConvergence(iters)
