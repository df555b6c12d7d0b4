# ellbench/commands/micro_commands.py

import logging

import click

from ellbench.commands.options import EXIT_FAILURE, build_harness_config, finish, harness_options, int_list
from ellbench.errors import EllBenchError
from ellbench.services.bench_harness import run_microbench
from ellbench.services.micro_kernels import KERNELS

logger = logging.getLogger(__name__)


@click.command()
@click.option('--kernel', type=click.Choice(sorted(KERNELS) + ['all']), default='all')
@click.option('--sizes', default=None, help='Comma separated element counts')
@harness_options
@click.pass_context
def micro(ctx, kernel, sizes, out, reps, threads, hw_subset, placement, variant, seed):
    """
    Strength reduction, first touch and memory alignment micro-kernels, baseline vs tuned
    """
    settings = ctx.obj['CONFIG']
    kernels = sorted(KERNELS) if kernel == 'all' else [kernel]
    try:
        cfg = build_harness_config(settings, threads, reps, hw_subset, placement, seed, variant=variant)
        sizes = int_list(sizes) or settings.MICRO_SIZES
        results = []
        for name in kernels:
            results.extend(run_microbench(name, sizes, cfg.thread_counts, cfg.reps, cfg))
    except EllBenchError as e:
        logger.error(f"Micro benchmark error: {e}")
        ctx.exit(EXIT_FAILURE)
    finish(ctx, results, out or settings.OUT)
