"""Mixed Galerkin solver and verification harness for parabolic port-type systems on (0, 1)."""

__version__ = "0.1.0"
