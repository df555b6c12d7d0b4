# tests/test_cli.py

import json

import pytest
from click.testing import CliRunner

from config import TestingConfig
from ellbench import create_cli
from ellbench.commands import options
from ellbench.commands.options import EXIT_FAILURE
from ellbench.models.perf_models import CpuTopology, HwSubset, Placement, Variant
from ellbench.services.bench_harness import read_csv
from ellbench.services.matrix_market import read_dense


@pytest.fixture
def cli():
    return create_cli('testing')


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, cli, *args):
    return runner.invoke(cli, [str(arg) for arg in args], obj={})


def test_gen_writes_symmetric_matrix_market(runner, cli, tmp_path):
    out = tmp_path / 'semi.mtx'
    result = invoke(runner, cli, 'gen', '--system', 'semiconductor', '--size', 16, '--out', out)
    assert result.exit_code == 0, result.output
    assert result.output.strip() == str(out)
    assert out.read_text().startswith('%%MatrixMarket matrix coordinate real symmetric')
    h = read_dense(out)
    assert h.n == 16
    assert h.values[0, 1] == -2.0


def test_gen_rejects_odd_size(runner, cli, tmp_path):
    result = invoke(runner, cli, 'gen', '--system', 'metal', '--size', 7, '--out', tmp_path / 'x.mtx')
    assert result.exit_code == EXIT_FAILURE


def test_dos_writes_energy_grid(runner, cli, tmp_path):
    out = tmp_path / 'dos.csv'
    result = invoke(runner, cli, 'dos', '--system', 'softmatter', '--size', 32, '--bins', 50, '--out', out)
    assert result.exit_code == 0, result.output
    lines = out.read_text().splitlines()
    assert lines[0] == 'energy_ev,density'
    assert len(lines) == 51


def test_dos_unknown_system(runner, cli, tmp_path):
    result = invoke(runner, cli, 'dos', '--system', 'plasma', '--size', 8, '--out', tmp_path / 'dos.csv')
    assert result.exit_code == EXIT_FAILURE


def test_sp2_single_run_prints_report(runner, cli, tmp_path):
    path = tmp_path / 'soft.mtx'
    assert invoke(runner, cli, 'gen', '--system', 'softmatter', '--size', 32, '--out', path).exit_code == 0

    result = invoke(runner, cli, 'sp2', '--in', path, '--threads', 1, '--threshold', 0)
    assert result.exit_code == 0, result.output
    report = json.loads(result.output)
    assert report['converged'] is True
    assert set(report['phase_times']) == {
        'read_hamiltonian', 'init_misc', 'sp2_loop_x2', 'sp2_loop_norm', 'sp2_loop_misc',
    }
    assert report['iterations'] == len(report['per_iteration'])


def test_sp2_benchmark_mode(runner, cli, tmp_path):
    out, phases = tmp_path / 'sp2.csv', tmp_path / 'phases.csv'
    result = invoke(runner, cli, 'sp2', '--systems', 'semiconductor', '--size', 64, '--threshold', 0,
                    '--threads', 1, '--reps', 1, '--out', out, '--phase-out', phases)
    assert result.exit_code == 0, result.output
    rows = read_csv(out)
    assert [row.variant.value for row in rows] == ['baseline', 'tuned']
    assert len(phases.read_text().splitlines()) == 3


def test_micro_writes_one_row_per_variant(runner, cli, tmp_path):
    out = tmp_path / 'micro.csv'
    result = invoke(runner, cli, 'micro', '--kernel', 'ft', '--sizes', 1024, '--threads', 1,
                    '--reps', 1, '--out', out)
    assert result.exit_code == 0, result.output
    assert '2 results written' in result.output
    rows = read_csv(out)
    assert {row.experiment for row in rows} == {'micro-ft'}
    assert rows[0].checksum == rows[1].checksum == 2048.0


def test_spmm_sweep(runner, cli, tmp_path):
    out = tmp_path / 'spmm.csv'
    result = invoke(runner, cli, 'spmm', '--systems', 'metal', '--sizes', 32, '--threads', 1,
                    '--reps', 1, '--out', out)
    assert result.exit_code == 0, result.output
    assert len(read_csv(out)) == 2


def test_bad_hw_subset_fails(runner, cli, tmp_path):
    result = invoke(runner, cli, 'spmm', '--systems', 'metal', '--sizes', 32, '--hw-subset', '2x',
                    '--out', tmp_path / 'spmm.csv')
    assert result.exit_code == EXIT_FAILURE


def test_micro_single_variant(runner, cli, tmp_path):
    out = tmp_path / 'micro.csv'
    result = invoke(runner, cli, 'micro', '--kernel', 'ma', '--sizes', 1024, '--threads', 1,
                    '--reps', 1, '--variant', 'baseline', '--out', out)
    assert result.exit_code == 0, result.output
    assert [row.variant.value for row in read_csv(out)] == ['baseline']


@pytest.mark.parametrize('placement', ['compute-bound', 'memory-bound'])
def test_spmm_with_placement_preset(runner, cli, tmp_path, placement):
    out = tmp_path / 'spmm.csv'
    result = invoke(runner, cli, 'spmm', '--systems', 'metal', '--sizes', 32, '--threads', 1,
                    '--reps', 1, '--placement', placement, '--out', out)
    assert result.exit_code == 0, result.output
    assert len(read_csv(out)) == 2


def test_placement_preset_excludes_hw_subset(runner, cli, tmp_path):
    result = invoke(runner, cli, 'spmm', '--systems', 'metal', '--sizes', 32, '--hw-subset', '1s',
                    '--placement', 'memory-bound', '--out', tmp_path / 'spmm.csv')
    assert result.exit_code == EXIT_FAILURE


def test_memory_bound_preset_sizes_thread_grid(monkeypatch):
    machine = CpuTopology.synthetic(2, 24, 2)
    monkeypatch.setattr(options, 'detect_topology', lambda: machine)
    cfg = options.build_harness_config(TestingConfig(), placement='memory-bound')
    assert cfg.affinity.placement is Placement.SCATTER
    assert cfg.affinity.subset == HwSubset(2, 1, 24)
    assert cfg.thread_counts == (48,)
    assert cfg.topology is machine

    cfg = options.build_harness_config(TestingConfig(), placement='compute-bound', threads='8,96')
    assert cfg.affinity.subset is None
    assert cfg.thread_counts == (8, 96)


def test_variant_flag_restricts_harness_config():
    cfg = options.build_harness_config(TestingConfig(), variant='tuned')
    assert cfg.variants == (Variant.TUNED,)
    assert options.build_harness_config(TestingConfig()).variants == (Variant.BASELINE, Variant.TUNED)
