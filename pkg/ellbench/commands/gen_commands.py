# ellbench/commands/gen_commands.py

import logging

import click

from ellbench.commands.options import EXIT_FAILURE
from ellbench.errors import EllBenchError
from ellbench.models.physics_models import SystemKind
from ellbench.services.hamiltonian_gen import generate_ellpack, preset
from ellbench.services.matrix_market import write_ellpack

logger = logging.getLogger(__name__)


@click.command()
@click.option('--system', required=True, help='metal, semiconductor or softmatter')
@click.option('--size', 'n', type=int, required=True, help='Number of orbitals (even)')
@click.option('--seed', type=int, default=None)
@click.option('--out', type=click.Path(dir_okay=False), default=None, help='Matrix Market file')
@click.pass_context
def gen(ctx, system, n, seed, out):
    """
    Generate a model Hamiltonian and write it as Matrix Market
    """
    settings = ctx.obj['CONFIG']
    seed = settings.SEED if seed is None else seed
    try:
        kind = SystemKind.parse(system)
        out = out or f"{kind.value}_{n}.mtx"
        h = generate_ellpack(n, preset(kind).with_seed(seed))
        write_ellpack(out, h, symmetric=True)
    except (EllBenchError, ValueError) as e:
        logger.error(f"Generate error: {e}")
        ctx.exit(EXIT_FAILURE)
    click.echo(out)
