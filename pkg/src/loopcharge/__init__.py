"""Recharge scheduling and recharger trajectory synthesis for loop-bound worker robots."""

__version__ = "0.1.0"
