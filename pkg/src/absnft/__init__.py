"""Simulator and solvers for NFT securitization and share repurchase games."""

__version__ = "0.1.0"
