import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pipeflow import linalg
from pipeflow.errors import SingularMatrix
from pipeflow.linalg import (
    SparseMatrix, assemble_from_triplets, lu_factorize, lu_solve,
    rayleigh_maximize, smallest_singular_value,
)


class TestTriplets:
    def test_duplicates_summed(self):
        m = assemble_from_triplets([(0, 0, 1.0), (0, 0, 2.0)], (1, 1))
        assert np.allclose(m.to_dense(), [[3.0]])
        assert m.nnz == 1

    def test_empty(self):
        m = assemble_from_triplets([], (2, 2))
        assert m.nnz == 0
        assert np.array_equal(m.to_dense(), np.zeros((2, 2)))

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            assemble_from_triplets([(2, 0, 1.0)], (2, 2))

    @given(st.integers(0, 12345))
    @settings(max_examples=25)
    def test_matches_dense_accumulation(self, seed):
        rng = np.random.default_rng(seed)
        n = 200
        rows = rng.integers(0, 7, n)
        cols = rng.integers(0, 5, n)
        vals = rng.standard_normal(n)
        dense = np.zeros((7, 5))
        for r, c, v in zip(rows, cols, vals):
            dense[r, c] += v
        m = assemble_from_triplets((rows, cols, vals), (7, 5))
        assert np.allclose(m.to_dense(), dense, atol=1e-13)

    def test_crs_invariants(self):
        rng = np.random.default_rng(0)
        m = assemble_from_triplets((rng.integers(0, 9, 300), rng.integers(0, 9, 300),
                                    rng.standard_normal(300)), (9, 9))
        assert np.all(np.diff(m.indptr) >= 0)
        for r in range(9):
            cols = m.indices[m.indptr[r]:m.indptr[r + 1]]
            assert np.all(np.diff(cols) > 0)

    def test_determinism(self):
        rng = np.random.default_rng(1)
        trip = (rng.integers(0, 50, 2000), rng.integers(0, 50, 2000), rng.standard_normal(2000))
        a = assemble_from_triplets(trip, (50, 50))
        b = assemble_from_triplets(trip, (50, 50))
        assert a.data.tobytes() == b.data.tobytes()
        assert a.indices.tobytes() == b.indices.tobytes()


def _poisson_5pt(n):
    """Standard 5-point Laplacian on an n-by-n interior grid."""
    trips = []
    def idx(i, j):
        return i * n + j
    for i in range(n):
        for j in range(n):
            trips.append((idx(i, j), idx(i, j), 4.0))
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                if 0 <= i + di < n and 0 <= j + dj < n:
                    trips.append((idx(i, j), idx(i + di, j + dj), -1.0))
    return assemble_from_triplets(trips, (n * n, n * n))


class TestLU:
    def test_scalar(self):
        m = assemble_from_triplets([(0, 0, 2.0)], (1, 1))
        assert lu_solve(lu_factorize(m), np.array([4.0])) == pytest.approx([2.0])

    def test_poisson_vs_dense(self):
        a = _poisson_5pt(4)
        rng = np.random.default_rng(2)
        b = rng.standard_normal(16)
        x = lu_solve(lu_factorize(a), b)
        assert np.max(np.abs(x - np.linalg.solve(a.to_dense(), b))) < 1e-12

    def test_residual_tolerance(self):
        a = _poisson_5pt(8)
        rng = np.random.default_rng(3)
        b = rng.standard_normal(64)
        x = lu_solve(lu_factorize(a), b)
        assert np.linalg.norm(a.matvec(x) - b) / np.linalg.norm(b) < 1e-10

    def test_singular_raises(self):
        m = assemble_from_triplets([(0, 0, 1.0), (1, 1, 0.0)], (2, 2))
        with pytest.raises(SingularMatrix):
            lu_factorize(m)

    def test_spd_vs_dense_oracle(self):
        rng = np.random.default_rng(4)
        q = rng.standard_normal((20, 20))
        spd = q @ q.T + 20 * np.eye(20)
        m = SparseMatrix.from_dense(spd)
        b = rng.standard_normal(20)
        assert np.linalg.norm(lu_solve(lu_factorize(m), b) - np.linalg.solve(spd, b)) < 1e-10

    def test_solve_determinism(self):
        a = _poisson_5pt(6)
        b = np.sin(np.arange(36.0))
        x1 = lu_solve(lu_factorize(a), b)
        x2 = lu_solve(lu_factorize(a), b)
        assert x1.tobytes() == x2.tobytes()


class TestSmallestSingularValue:
    def test_identity(self):
        m = SparseMatrix.from_dense(np.eye(3))
        assert smallest_singular_value(m) == pytest.approx(1.0, abs=1e-12)

    def test_diagonal(self):
        m = SparseMatrix.from_dense(np.diag([1.0, 2.0, 3.0]))
        assert smallest_singular_value(m) == pytest.approx(1.0, abs=1e-10)

    def test_rectangular_vs_svd(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((20, 10))
        sv = smallest_singular_value(SparseMatrix.from_dense(a), tol=1e-12)
        assert sv == pytest.approx(np.linalg.svd(a, compute_uv=False)[-1], rel=1e-8)


class TestRayleighMaximize:
    def test_toy_euclidean(self):
        # gram = identity, norm = euclidean: ratio is 1 everywhere
        gram = SparseMatrix.from_dense(np.eye(3))

        def norm(v):
            n = np.linalg.norm(v)
            return n, v / n if n > 0 else v

        q, v = rayleigh_maximize(gram, norm, lambda x: x, iters=50,
                                 x0=np.array([1.0, 2.0, -1.0]))
        assert q == pytest.approx(1.0, abs=1e-12)

    def test_monotone_objective(self):
        rng = np.random.default_rng(6)
        a = rng.standard_normal((8, 8))
        gram = SparseMatrix.from_dense(a @ a.T + 8 * np.eye(8))
        w = np.abs(rng.standard_normal(8)) + 0.5

        def norm(v):
            # weighted 4-norm as a stand-in nonquadratic functional
            val = np.sum(w * v**4) ** 0.25
            grad = w * v**3 / val**3
            return val, grad

        history = []
        rayleigh_maximize(gram, norm, lambda x: x, iters=200, x0=rng.standard_normal(8),
                          callback=history.append)
        assert all(b >= a - 1e-14 for a, b in zip(history, history[1:]))

    def test_matches_multistart(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal((6, 6))
        gram_d = a @ a.T + 6 * np.eye(6)
        gram = SparseMatrix.from_dense(gram_d)
        w = np.abs(rng.standard_normal(6)) + 0.5

        def norm(v):
            val = np.sum(w * v**4) ** 0.25
            grad = w * v**3 / val**3
            return val, grad

        def objective(v):
            return norm(v)[0] ** 2 / (v @ gram_d @ v)

        best = -np.inf
        for k in range(200):
            v = rng.standard_normal(6)
            best = max(best, objective(v))
            try:
                q, _ = rayleigh_maximize(gram, norm, lambda x: x, iters=150, x0=v)
                best = max(best, q)
            except linalg.NoConvergence:
                pass
        q0, _ = rayleigh_maximize(gram, norm, lambda x: x, iters=300,
                                  x0=np.ones(6))
        # single seeded run lands within 2% of the multistart champion
        assert q0 >= 0.98 * best
