# tests/test_ellpack_core.py

import numpy as np
import pytest

from ellbench.errors import DimensionMismatch, EllpackOverflowError
from ellbench.models.matrices import DenseMatrix
from ellbench.services import ellpack_core as ell
from ellbench.services.dense_oracle import dense_multiply


def rel_frobenius(actual, expected):
    scale = max(np.linalg.norm(expected), 1e-300)
    return np.linalg.norm(actual - expected) / scale


def test_from_dense_identity(runtime):
    a = ell.from_dense(DenseMatrix(np.eye(3)), 0.0, 3, runtime)
    assert a.row_nnz.tolist() == [1, 1, 1]
    assert a.values[a.stored_mask()].tolist() == [1.0, 1.0, 1.0]
    a.validate()


def test_from_dense_zero_matrix(runtime):
    a = ell.from_dense(DenseMatrix(np.zeros((4, 4))), 0.0, 2, runtime)
    assert a.row_nnz.tolist() == [0, 0, 0, 0]
    assert np.array_equal(ell.to_dense(a).values, np.zeros((4, 4)))


def test_round_trip_reproduces_input(runtime, rng, sparse_symmetric):
    d = sparse_symmetric(rng, 64, density=0.1)
    a = ell.from_dense(d, 0.0, 64, runtime)
    assert np.array_equal(ell.to_dense(a).values, d.values)


def test_to_dense_then_from_dense_keeps_entry_set(runtime, rng, sparse_symmetric):
    a = ell.from_dense(sparse_symmetric(rng, 40, density=0.2), 0.0, 40, runtime)
    b = ell.from_dense(ell.to_dense(a), 0.0, a.m_max, runtime)
    assert np.array_equal(a.row_nnz, b.row_nnz)
    assert np.array_equal(a.col_index[a.stored_mask()], b.col_index[b.stored_mask()])
    assert np.array_equal(a.values[a.stored_mask()], b.values[b.stored_mask()])


def test_threshold_drops_entries_at_or_below(runtime):
    d = DenseMatrix(np.array([[1.0, 0.1, -0.05], [0.1, 2.0, 0.0], [-0.05, 0.0, 0.2]]))
    a = ell.from_dense(d, 0.1, 3, runtime)
    expected = np.array([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 0.2]])
    assert np.array_equal(ell.to_dense(a).values, expected)


def test_overflow_reports_first_offending_row(runtime):
    values = np.eye(6)
    values[2, [0, 1]] = 1.0
    values[4, [0, 1]] = 1.0
    with pytest.raises(EllpackOverflowError) as excinfo:
        ell.from_dense(DenseMatrix(values), 0.0, 2, runtime)
    assert excinfo.value.row == 2
    assert excinfo.value.count == 3
    assert isinstance(excinfo.value, OverflowError)


def test_multiply_overflow(runtime):
    full = DenseMatrix(np.ones((4, 4)))
    a = ell.from_dense(full, 0.0, 4, runtime)
    with pytest.raises(EllpackOverflowError):
        ell.multiply(a, a, 0.0, m_max=3, runtime=runtime)


def test_identity_times_a_is_a(runtime, rng, sparse_symmetric):
    d = sparse_symmetric(rng, 50, density=0.15)
    a = ell.from_dense(d, 0.0, 50, runtime)
    c = ell.multiply(ell.identity(50, 1, runtime), a, 0.0, 50, runtime)
    assert np.array_equal(ell.to_dense(c).values, d.values)


def test_a_times_zero_is_empty(runtime, rng, sparse_symmetric):
    a = ell.from_dense(sparse_symmetric(rng, 20), 0.0, 20, runtime)
    c = ell.multiply(a, ell.zeros(20, 1, runtime), 0.0, 20, runtime)
    assert c.nnz == 0


def test_multiply_dimension_mismatch(runtime):
    with pytest.raises(DimensionMismatch):
        ell.multiply(ell.identity(3, 1, runtime), ell.identity(4, 1, runtime), runtime=runtime)


def test_x_squared_identity(runtime):
    x2, trace_x, trace_x2 = ell.x_squared(ell.identity(3, 1, runtime), 0.0, 3, runtime)
    assert np.array_equal(ell.to_dense(x2).values, np.eye(3))
    assert (trace_x, trace_x2) == (3.0, 3.0)


def test_x_squared_half_diagonal(runtime):
    x = ell.from_dense(DenseMatrix(np.diag([0.5, 0.5])), 0.0, 2, runtime)
    x2, trace_x, trace_x2 = ell.x_squared(x, 0.0, 2, runtime)
    assert np.array_equal(ell.to_dense(x2).values, np.diag([0.25, 0.25]))
    assert trace_x == 1.0
    assert trace_x2 == 0.5


def test_x_squared_matches_multiply(runtime, rng, sparse_symmetric):
    x = ell.from_dense(sparse_symmetric(rng, 80, density=0.05), 0.0, 80, runtime)
    x2, _, _ = ell.x_squared(x, 1e-3, 80, runtime)
    c = ell.multiply(x, x, 1e-3, 80, runtime)
    assert np.array_equal(ell.to_dense(x2).values, ell.to_dense(c).values)


def test_projector_trace_is_preserved(runtime, rng, sparse_symmetric):
    _, q = np.linalg.eigh(sparse_symmetric(rng, 30, density=0.3).values)
    p = q[:, :12] @ q[:, :12].T
    x = ell.from_dense(DenseMatrix(p), 0.0, 30, runtime)
    _, trace_x, trace_x2 = ell.x_squared(x, 0.0, 30, runtime)
    assert trace_x == pytest.approx(12.0, abs=1e-10)
    assert abs(trace_x - trace_x2) <= 1e-10


def test_add_scaled_examples(runtime, rng, sparse_symmetric):
    d = sparse_symmetric(rng, 32, density=0.2)
    a = ell.from_dense(d, 0.0, 32, runtime)
    b = ell.from_dense(sparse_symmetric(rng, 32, density=0.2), 0.0, 32, runtime)

    same = ell.add_scaled(1.0, a, 0.0, b, 0.0, 32, runtime)
    assert np.array_equal(ell.to_dense(same).values, d.values)

    cancelled = ell.add_scaled(1.0, a, -1.0, a, 0.0, 32, runtime)
    assert cancelled.nnz == 0


def test_scale(runtime):
    a = ell.from_dense(DenseMatrix(np.diag([1.0, -2.0, 4.0])), 0.0, 1, runtime)
    assert np.array_equal(ell.to_dense(ell.scale(0.5, a, runtime=runtime)).values, np.diag([0.5, -1.0, 2.0]))


def test_trace_examples(runtime, rng, sparse_symmetric):
    assert ell.trace(ell.identity(5, 1, runtime)) == 5.0
    assert ell.trace(ell.zeros(5, 1, runtime)) == 0.0
    d = sparse_symmetric(rng, 60, density=0.3)
    a = ell.from_dense(d, 0.0, 60, runtime)
    assert ell.trace(a) == float(np.sum(np.diagonal(d.values).copy()))


def test_fnorm_diff_examples(runtime, rng, sparse_symmetric):
    a = ell.from_dense(sparse_symmetric(rng, 16), 0.0, 16, runtime)
    assert ell.fnorm_diff(a, a, runtime) == 0.0
    assert ell.fnorm_diff(ell.identity(2, 1, runtime), ell.zeros(2, 1, runtime), runtime) == pytest.approx(np.sqrt(2.0))
    with pytest.raises(DimensionMismatch):
        ell.fnorm_diff(a, ell.identity(3, 1, runtime), runtime)


@pytest.mark.slow
def test_operations_match_dense_oracle(runtime, rng, sparse_symmetric):
    for _ in range(200):
        n = int(rng.integers(4, 97))
        density = float(rng.uniform(0.02, 0.3))
        da = sparse_symmetric(rng, n, density)
        db = sparse_symmetric(rng, n, density)
        a = ell.from_dense(da, 0.0, n, runtime)
        b = ell.from_dense(db, 0.0, n, runtime)

        product = ell.to_dense(ell.multiply(a, b, 0.0, n, runtime)).values
        assert rel_frobenius(product, dense_multiply(da, db).values) <= 1e-12

        alpha, beta = rng.uniform(-2.0, 2.0, 2)
        combined = ell.to_dense(ell.add_scaled(alpha, a, beta, b, 0.0, n, runtime)).values
        assert rel_frobenius(combined, alpha * da.values + beta * db.values) <= 1e-12

        assert ell.trace(a) == pytest.approx(np.trace(da.values), rel=1e-12, abs=1e-12)

        expected_norm = np.linalg.norm(da.values - db.values)
        assert ell.fnorm_diff(a, b, runtime) == pytest.approx(expected_norm, rel=1e-12, abs=1e-300)


def test_threshold_monotonicity(runtime, rng, sparse_symmetric):
    a = ell.from_dense(sparse_symmetric(rng, 70, density=0.1), 0.0, 70, runtime)
    counts = [ell.multiply(a, a, t, 70, runtime).nnz for t in (0.0, 1e-3, 1e-2, 0.1, 1.0)]
    assert counts == sorted(counts, reverse=True)


def test_x_squared_preserves_symmetry(runtime, rng, sparse_symmetric):
    a = ell.from_dense(sparse_symmetric(rng, 90, density=0.08), 0.0, 90, runtime)
    x2 = ell.to_dense(ell.x_squared(a, 0.0, 90, runtime)[0]).values
    assert np.max(np.abs(x2 - x2.T)) <= 1e-12 * max(1.0, np.max(np.abs(x2)))


def test_multiply_is_deterministic(runtime, rng, sparse_symmetric):
    a = ell.from_dense(sparse_symmetric(rng, 64, density=0.1), 0.0, 64, runtime)
    first = ell.multiply(a, a, 1e-6, 64, runtime)
    second = ell.multiply(a, a, 1e-6, 64, runtime)
    assert np.array_equal(first.values, second.values)
    assert np.array_equal(first.col_index, second.col_index)
    assert np.array_equal(first.row_nnz, second.row_nnz)


def test_results_are_valid_and_aligned(first_touch_runtime, rng, sparse_symmetric):
    a = ell.from_dense(sparse_symmetric(rng, 48, density=0.2), 0.0, 48, first_touch_runtime)
    c = ell.multiply(a, a, 0.0, 48, first_touch_runtime)
    c.validate()
    assert c.alignment == 64
    assert c.values.ctypes.data % 64 == 0


def test_from_coordinates_matches_from_dense(runtime, rng, sparse_symmetric):
    d = sparse_symmetric(rng, 30, density=0.2)
    rows, cols = np.nonzero(d.values)
    shuffle = rng.permutation(rows.size)
    rows, cols = rows[shuffle], cols[shuffle]
    built = ell.from_coordinates(30, rows, cols, d.values[rows, cols], m_max=30, runtime=runtime)
    reference = ell.from_dense(d, 0.0, 30, runtime)
    assert np.array_equal(built.values, reference.values)
    assert np.array_equal(built.col_index, reference.col_index)


def test_from_coordinates_default_width_is_longest_row(runtime):
    a = ell.from_coordinates(4, [0, 0, 0, 3], [0, 1, 2, 3], [1.0, 2.0, 3.0, 4.0], runtime=runtime)
    assert a.m_max == 3
    assert a.row_nnz.tolist() == [3, 0, 0, 1]


def test_product_width_bounds_result_rows(runtime, rng, sparse_symmetric):
    a = ell.from_dense(sparse_symmetric(rng, 40, density=0.1), 0.0, 40, runtime)
    width = ell.product_width(a, a)
    c = ell.multiply(a, a, 0.0, width, runtime)
    assert int(c.row_nnz.max()) <= width


def test_checksum_ignores_partitioning(rng, sparse_symmetric):
    from ellbench.models.perf_models import AllocPolicy
    from ellbench.services.worker_pool import Runtime, WorkerPool

    d = sparse_symmetric(rng, 50, density=0.1)
    sums = []
    for workers in (1, 4):
        with Runtime(WorkerPool(workers), AllocPolicy()) as rt:
            a = ell.from_dense(d, 0.0, 50, rt)
            sums.append(ell.checksum(ell.multiply(a, a, 0.0, 50, rt)))
    assert sums[0] == sums[1]
