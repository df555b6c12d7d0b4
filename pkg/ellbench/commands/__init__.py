# ellbench/commands/__init__.py

from ellbench.commands.gen_commands import gen
from ellbench.commands.micro_commands import micro
from ellbench.commands.spmm_commands import spmm
from ellbench.commands.sp2_commands import sp2
from ellbench.commands.dos_commands import dos

__all__ = ['gen', 'micro', 'spmm', 'sp2', 'dos']
