# ellbench/commands/sp2_commands.py

import logging

import click

from ellbench.commands.options import EXIT_FAILURE, build_harness_config, finish, harness_options, name_list
from ellbench.errors import EllBenchError
from ellbench.models.perf_models import AllocPolicy, Variant
from ellbench.models.physics_models import SP2Config
from ellbench.services.bench_harness import emit_phase_csv, run_sp2_bench
from ellbench.services.sp2_solver import run_proxy

logger = logging.getLogger(__name__)


@click.command()
@click.option('--in', 'hamiltonian_file', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Run the proxy once on this Matrix Market Hamiltonian')
@click.option('--nocc', 'n_occ', type=int, default=None, help='Occupied states (default n/2)')
@click.option('--threshold', type=float, default=None)
@click.option('--tol', type=float, default=None, help='Idempotency tolerance')
@click.option('--max-iter', type=int, default=None)
@click.option('--systems', default='semiconductor,softmatter', help='Systems for the benchmark mode')
@click.option('--size', 'n', type=int, default=None, help='Matrix size for the benchmark mode')
@click.option('--phase-out', type=click.Path(dir_okay=False), default='phases.csv')
@harness_options
@click.pass_context
def sp2(ctx, hamiltonian_file, n_occ, threshold, tol, max_iter, systems, n, phase_out,
        out, reps, threads, hw_subset, placement, variant, seed):
    """
    SP2 density-matrix proxy: one phase-timed run with --in, otherwise a baseline vs tuned benchmark
    """
    settings = ctx.obj['CONFIG']
    try:
        cfg = build_harness_config(settings, threads, reps, hw_subset, placement, seed, threshold, variant)
        cfg.n_occ = n_occ
        cfg.sp2_tol = tol or cfg.sp2_tol
        cfg.sp2_max_iter = max_iter or cfg.sp2_max_iter

        if hamiltonian_file:
            variant = Variant(variant or Variant.TUNED)
            sp2_cfg = SP2Config(n_occ=n_occ, threshold=cfg.threshold, max_iterations=cfg.sp2_max_iter,
                                idempotency_tol=cfg.sp2_tol)
            affinity = cfg.affinity if variant is Variant.TUNED else None
            report = run_proxy(hamiltonian_file, sp2_cfg, affinity, AllocPolicy.for_variant(variant),
                               threads=max(cfg.thread_counts), topology=cfg.topology)
            click.echo(report.to_json())
            return

        pairs = run_sp2_bench(name_list(systems), n or settings.SP2_SIZE, cfg)
    except (EllBenchError, ValueError) as e:
        logger.error(f"SP2 error: {e}")
        ctx.exit(EXIT_FAILURE)

    emit_phase_csv(pairs, phase_out)
    finish(ctx, [result for result, _ in pairs], out or settings.OUT)
