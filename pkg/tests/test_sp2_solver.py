# tests/test_sp2_solver.py

import numpy as np
import pytest

from ellbench.errors import DegenerateBounds, InvalidParameters, NoConvergence
from ellbench.models.matrices import DenseMatrix
from ellbench.models.physics_models import PHASES, Branch, SP2Config
from ellbench.services import ellpack_core as ell
from ellbench.services.dense_oracle import commutator_norm, eigh, exact_density_matrix
from ellbench.services.hamiltonian_gen import generate, preset
from ellbench.services.matrix_market import write_dense
from ellbench.services.sp2_solver import PhaseTimer, gershgorin_bounds, run_proxy, sp2_basic, sp2_init


def as_ellpack(values, runtime):
    values = np.asarray(values, dtype=float)
    return ell.from_dense(DenseMatrix(values), 0.0, values.shape[0], runtime)


def test_gershgorin_examples(runtime):
    assert gershgorin_bounds(as_ellpack(np.diag([1.0, 2.0, 3.0]), runtime)) == (1.0, 3.0)
    assert gershgorin_bounds(as_ellpack([[0.0, 1.0], [1.0, 0.0]], runtime)) == (-1.0, 1.0)


def test_gershgorin_bounds_contain_spectrum(runtime, rng, sparse_symmetric):
    for _ in range(100):
        n = int(rng.integers(2, 129))
        d = sparse_symmetric(rng, n, density=float(rng.uniform(0.01, 0.5)))
        lo, hi = gershgorin_bounds(ell.from_dense(d, 0.0, n, runtime))
        eigenvalues = eigh(d).eigenvalues
        assert lo <= eigenvalues[0] + 1e-12
        assert eigenvalues[-1] <= hi + 1e-12


def test_sp2_init_examples(runtime):
    x0 = sp2_init(as_ellpack(np.diag([0.0, 1.0]), runtime), (0.0, 1.0), runtime=runtime)
    assert np.array_equal(ell.to_dense(x0).values, np.diag([1.0, 0.0]))

    x0 = sp2_init(as_ellpack(2.0 * np.eye(3), runtime), (0.0, 2.0), runtime=runtime)
    assert x0.nnz == 0


def test_sp2_init_maps_spectrum_into_unit_interval(runtime, rng, sparse_symmetric):
    d = sparse_symmetric(rng, 60, density=0.2)
    h = ell.from_dense(d, 0.0, 60, runtime)
    x0 = ell.to_dense(sp2_init(h, gershgorin_bounds(h), runtime=runtime))
    eigenvalues = eigh(x0).eigenvalues
    assert eigenvalues[0] >= -1e-12
    assert eigenvalues[-1] <= 1.0 + 1e-12


def test_sp2_init_rejects_empty_interval(runtime):
    with pytest.raises(DegenerateBounds):
        sp2_init(ell.identity(2, 1, runtime), (1.0, 1.0), runtime=runtime)


def test_three_level_system(runtime):
    h = as_ellpack(np.diag([-1.0, 0.0, 1.0]), runtime)
    density, report = sp2_basic(h, SP2Config(n_occ=1), runtime)
    assert report.converged
    assert np.allclose(ell.to_dense(density).values, np.diag([1.0, 0.0, 0.0]), rtol=0, atol=1e-6)
    assert all(record.branch is Branch.SQUARE for record in report.per_iteration)
    assert report.per_iteration[-1].idempotency_error <= 1e-6
    assert report.iterations == len(report.per_iteration)
    assert report.density is density


def test_zero_hamiltonian_does_not_converge(runtime):
    with pytest.raises(NoConvergence) as excinfo:
        sp2_basic(ell.zeros(4, 1, runtime), SP2Config(max_iterations=40), runtime)
    report = excinfo.value.report
    assert report is not None
    assert not report.converged
    assert 1 <= report.iterations <= 40
    assert report.per_iteration[0].trace_x == 2.0
    assert report.per_iteration[0].branch is Branch.EXPAND


def test_user_bounds_must_span_interval(runtime):
    with pytest.raises(DegenerateBounds):
        sp2_basic(ell.identity(2, 1, runtime), SP2Config(n_occ=1, bounds=(0.5, 0.5)), runtime)


@pytest.mark.parametrize('kwargs', [
    {'n_occ': 0},
    {'threshold': -1.0},
    {'max_iterations': 0},
    {'idempotency_tol': 0.0},
])
def test_invalid_config(kwargs):
    with pytest.raises(InvalidParameters):
        SP2Config(**kwargs)


def test_occupation_must_leave_empty_states(runtime):
    with pytest.raises(InvalidParameters):
        sp2_basic(ell.identity(4, 1, runtime), SP2Config(n_occ=4), runtime)


def assert_matches_exact_density(kind, n, runtime):
    dense = generate(n, preset(kind))
    h = ell.from_dense(dense, 0.0, n, runtime)
    density, report = sp2_basic(h, SP2Config(threshold=0.0), runtime)

    exact = exact_density_matrix(dense, n // 2).values
    got = ell.to_dense(density).values
    assert np.linalg.norm(got - exact) / np.linalg.norm(exact) <= 1e-5
    assert abs(ell.trace(density) - n // 2) <= 1e-4
    assert report.per_iteration[-1].idempotency_error <= 1e-6
    assert report.iterations <= 100


@pytest.mark.parametrize('kind', ['semiconductor', 'soft_matter'])
def test_gapped_systems_match_exact_density(kind, runtime):
    assert_matches_exact_density(kind, 128, runtime)


@pytest.mark.slow
@pytest.mark.parametrize('kind', ['semiconductor', 'soft_matter'])
def test_gapped_systems_match_exact_density_large(kind, runtime):
    assert_matches_exact_density(kind, 512, runtime)


@pytest.mark.parametrize('kind', ['semiconductor', 'soft_matter'])
def test_unthresholded_density_commutes_and_trace_settles(kind, runtime):
    n = 256
    dense = generate(n, preset(kind))
    density, report = sp2_basic(ell.from_dense(dense, 0.0, n, runtime), SP2Config(threshold=0.0), runtime)

    assert commutator_norm(ell.to_dense(density), dense) <= 1e-6 * np.linalg.norm(dense.values)
    deviations = [abs(record.trace_x - n // 2) for record in report.per_iteration[-5:]]
    assert all(later <= earlier for earlier, later in zip(deviations, deviations[1:]))


@pytest.mark.slow
def test_thresholded_semiconductor_matches_exact_density(runtime):
    n = 512
    dense = generate(n, preset('semiconductor'))
    h = ell.from_dense(dense, 1e-8, n, runtime)
    density, report = sp2_basic(h, SP2Config(threshold=1e-8), runtime)

    exact = exact_density_matrix(dense, n // 2).values
    got = ell.to_dense(density).values
    assert report.converged
    assert np.linalg.norm(got - exact) / np.linalg.norm(exact) <= 1e-4


def test_phase_timer():
    timer = PhaseTimer()
    with timer.phase('sp2_loop_x2'):
        sum(range(1000))
    assert set(timer.times) == set(PHASES)
    assert timer.times['sp2_loop_x2'] > 0.0
    assert timer.total == timer.times['sp2_loop_x2']
    with pytest.raises(KeyError):
        with timer.phase('sp2_loop_x3'):
            pass


@pytest.fixture
def semiconductor_file(tmp_path):
    path = tmp_path / 'semiconductor_256.mtx'
    write_dense(path, generate(256, preset('semiconductor')))
    return path


def test_run_proxy_attributes_time_to_phases(semiconductor_file):
    report = run_proxy(semiconductor_file, SP2Config(), threads=2)
    assert report.converged
    assert set(report.phase_times) == set(PHASES)
    assert report.phase_times['read_hamiltonian'] > 0.0
    assert report.phase_times['sp2_loop_x2'] > 0.0
    assert sum(report.phase_times.values()) >= 0.99 * report.total_seconds


def test_run_proxy_is_deterministic(semiconductor_file):
    first = run_proxy(semiconductor_file, SP2Config(threshold=1e-8), threads=2)
    second = run_proxy(semiconductor_file, SP2Config(threshold=1e-8), threads=2)
    assert np.array_equal(first.density.values, second.density.values)
    assert np.array_equal(first.density.col_index, second.density.col_index)
    assert [r.trace_x for r in first.per_iteration] == [r.trace_x for r in second.per_iteration]


@pytest.mark.slow
def test_run_proxy_converges_quickly_on_large_semiconductor(tmp_path):
    path = tmp_path / 'semiconductor_1024.mtx'
    write_dense(path, generate(1024, preset('semiconductor')))
    report = run_proxy(path, SP2Config(threshold=1e-8), threads=2)
    assert report.converged
    assert report.iterations <= 50
