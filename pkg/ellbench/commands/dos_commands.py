# ellbench/commands/dos_commands.py

import csv
import logging

import click

from ellbench.commands.options import EXIT_FAILURE
from ellbench.errors import EllBenchError
from ellbench.services.hamiltonian_gen import dos as density_of_states
from ellbench.services.hamiltonian_gen import generate, preset

logger = logging.getLogger(__name__)


@click.command()
@click.option('--system', required=True)
@click.option('--size', 'n', type=int, required=True)
@click.option('--bins', type=int, default=1000)
@click.option('--broadening', type=float, default=0.1, help='Gaussian width in eV')
@click.option('--seed', type=int, default=None)
@click.option('--out', type=click.Path(dir_okay=False), default='dos.csv')
@click.pass_context
def dos(ctx, system, n, bins, broadening, seed, out):
    """
    Density of states of a model Hamiltonian (energies relative to a 0 eV Fermi level)
    """
    settings = ctx.obj['CONFIG']
    seed = settings.SEED if seed is None else seed
    try:
        histogram = density_of_states(generate(n, preset(system).with_seed(seed)), bins, broadening)
    except (EllBenchError, ValueError) as e:
        logger.error(f"DOS error: {e}")
        ctx.exit(EXIT_FAILURE)

    with open(out, 'w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(['energy_ev', 'density'])
        for energy, density in zip(histogram.energies, histogram.density):
            writer.writerow([repr(float(energy)), repr(float(density))])
    logger.info(f"Wrote DOS with {bins} points to {out}")
    click.echo(out)
