# ellbench/commands/spmm_commands.py

import logging

import click

from ellbench.commands.options import (
    EXIT_FAILURE,
    build_harness_config,
    finish,
    harness_options,
    int_list,
    name_list,
)
from ellbench.errors import EllBenchError
from ellbench.services.bench_harness import run_spmm_sweep

logger = logging.getLogger(__name__)


@click.command()
@click.option('--systems', default='metal,semiconductor,softmatter')
@click.option('--sizes', default=None, help='Comma separated matrix sizes')
@click.option('--threshold', type=float, default=None, help='ELLPACK pruning threshold')
@harness_options
@click.pass_context
def spmm(ctx, systems, sizes, threshold, out, reps, threads, hw_subset, placement, variant, seed):
    """
    Time ELLPACK X^2 on the model Hamiltonians, baseline vs tuned
    """
    settings = ctx.obj['CONFIG']
    try:
        cfg = build_harness_config(settings, threads, reps, hw_subset, placement, seed, threshold, variant)
        results = run_spmm_sweep(name_list(systems), int_list(sizes) or settings.SIZES, cfg)
    except (EllBenchError, ValueError, MemoryError) as e:
        logger.error(f"SpMM sweep error: {e}")
        ctx.exit(EXIT_FAILURE)
    finish(ctx, results, out or settings.OUT)
