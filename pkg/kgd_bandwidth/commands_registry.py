# File Summary: Central registry mapping subcommand names to their modules.

"""
Commands registry for kgdbw.

Every command module exposes HELP, add_arguments(parser) and
call(args, config) -> exit code.
"""

import importlib
from typing import List

from .errors import UsageError

COMMAND_MODULES = {
    "fit": "fit",
    "compare": "compare",
    "double-descent": "double_descent",
    "verify": "verify",
}


def get_command_module(command: str):
    """Load a command module by its CLI name."""
    module_name = COMMAND_MODULES.get(command)
    if not module_name:
        raise UsageError(f"Unknown command '{command}'; choose from {', '.join(COMMAND_MODULES)}")
    return importlib.import_module(f"kgd_bandwidth.commands.{module_name}")


def list_available_commands() -> List[str]:
    """List all subcommand names in help order."""
    return list(COMMAND_MODULES.keys())
