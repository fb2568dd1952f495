"""Proof-of-quantumness lab: folded RS codes, oracles and a dense simulator."""

__version__ = "0.1.0"
