# ellbench/commands/options.py

"""Flags shared by the benchmark commands and their translation into a HarnessConfig."""

import logging

import click

from ellbench.errors import InvalidParameters
from ellbench.models.bench_models import HarnessConfig
from ellbench.models.perf_models import AFFINITY_PRESETS, AffinityPolicy, Placement, Variant
from ellbench.services.affinity import detect_topology, parse_subset, placement_order
from ellbench.services.bench_harness import check_neutrality, default_thread_counts, emit_csv

logger = logging.getLogger(__name__)

EXIT_FAILURE = 1
EXIT_CHECKSUM_MISMATCH = 2

PLACEMENT_CHOICES = [p.value for p in Placement] + list(AFFINITY_PRESETS)


def int_list(value):
    if value is None:
        return None
    try:
        return tuple(int(item) for item in str(value).split(',') if item.strip())
    except ValueError:
        raise click.BadParameter(f"expected a comma separated list of integers, got {value!r}")


def name_list(value):
    return tuple(item.strip() for item in value.split(',') if item.strip())


def harness_options(fn):
    """--out --reps --threads --hw-subset --placement --variant --seed"""
    options = [
        click.option('--out', type=click.Path(dir_okay=False), default=None, help='Result CSV path'),
        click.option('--reps', type=int, default=None, help='Timed repetitions per variant'),
        click.option('--threads', default=None, help='Comma separated thread counts'),
        click.option('--hw-subset', default=None, help='Hardware subset, e.g. 2s,1t,24c'),
        click.option('--placement', type=click.Choice(PLACEMENT_CHOICES), default=None,
                     help='compact, scatter, or a preset sized from the detected topology'),
        click.option('--variant', type=click.Choice([v.value for v in Variant]), default=None,
                     help='Run only this variant (default: both)'),
        click.option('--seed', type=int, default=None, help='Seed for inputs and variant order'),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def build_harness_config(settings, threads=None, reps=None, hw_subset=None, placement=None,
                         seed=None, threshold=None, variant=None) -> HarnessConfig:
    """Command-line values first, configuration second"""
    subset_text = hw_subset or settings.HW_SUBSET
    subset = parse_subset(subset_text) if subset_text else None
    placement = placement or settings.PLACEMENT
    topology = None

    if placement in AFFINITY_PRESETS:
        if subset is not None:
            raise InvalidParameters(f"--placement {placement} sizes its own subset; drop --hw-subset")
        topology = detect_topology()
        affinity = AffinityPolicy.preset(placement, topology)
        preset_threads = (len(placement_order(affinity, topology)),)
        thread_counts = int_list(threads) or preset_threads
    else:
        affinity = AffinityPolicy(placement, subset)
        thread_counts = int_list(threads) or settings.THREADS
        if not thread_counts:
            thread_counts = (subset.workers,) if subset else default_thread_counts()

    return HarnessConfig(
        thread_counts=tuple(thread_counts),
        reps=reps or settings.REPS,
        warmup=settings.WARMUP,
        seed=settings.SEED if seed is None else seed,
        threshold=settings.THRESHOLD if threshold is None else threshold,
        affinity=affinity,
        sp2_tol=settings.SP2_TOL,
        sp2_max_iter=settings.SP2_MAX_ITER,
        topology=topology,
        variants=(Variant(variant),) if variant else (Variant.BASELINE, Variant.TUNED),
    )


def finish(ctx, results, out):
    """Write the CSV, then exit 2 if any baseline/tuned pair disagrees"""
    emit_csv(results, out)
    mismatches = check_neutrality(results)
    if mismatches:
        logger.error(f"Checksum mismatch between variants: {mismatches}")
        ctx.exit(EXIT_CHECKSUM_MISMATCH)
    click.echo(f"{len(results)} results written to {out}")
