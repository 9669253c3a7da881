"""
Lab commands.

Each module registers one command on the global ``lab`` app when imported.
"""

from entropy_lab.commands import deficit, evolve, gap, ghp, quotient, rates, region, renyi

__all__ = ["deficit", "evolve", "gap", "ghp", "quotient", "rates", "region", "renyi"]
