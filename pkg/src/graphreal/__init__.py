"""Graph realizability of hyperbolic boundary systems on networks."""

__version__ = "0.1.0"
