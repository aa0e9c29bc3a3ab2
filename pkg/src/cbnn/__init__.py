"""Nearest-neighbour contextual bandits with polylogarithmic per-trial cost."""

__version__ = "0.1.0"
