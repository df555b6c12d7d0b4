#!/usr/bin/env python3
# run.py

import os
from dotenv import load_dotenv
load_dotenv()

from ellbench import create_cli

# ELLBENCH_ENV selects development, benchmark or testing settings
config_name = os.environ.get('ELLBENCH_ENV', 'development')
cli = create_cli(config_name)

if __name__ == '__main__':
    cli(obj={})
