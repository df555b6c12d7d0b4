# ellbench/__init__.py

import logging
import sys

import click

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def configure_logging(level: str):
    logging.basicConfig(level=getattr(logging, str(level).upper(), logging.INFO),
                        format=LOG_FORMAT, stream=sys.stderr, force=True)


def create_cli(config_name=None):
    """Command-line factory: loads the named configuration and registers every command"""
    from config import config

    settings = config.get(config_name or 'default', config['default'])()
    configure_logging(settings.LOG_LEVEL)

    @click.group()
    @click.pass_context
    def cli(ctx):
        """ELLPACK kernels, SP2 proxy and baseline-vs-tuned benchmarks"""
        ctx.ensure_object(dict)
        ctx.obj['CONFIG'] = settings

    # Register commands
    from ellbench.commands.gen_commands import gen
    from ellbench.commands.micro_commands import micro
    from ellbench.commands.spmm_commands import spmm
    from ellbench.commands.sp2_commands import sp2
    from ellbench.commands.dos_commands import dos

    cli.add_command(gen)
    cli.add_command(micro)
    cli.add_command(spmm)
    cli.add_command(sp2)
    cli.add_command(dos)

    return cli
