"""Subcommand modules resolved through kgd_bandwidth.commands_registry."""
