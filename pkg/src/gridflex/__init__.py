"""Energy-flexibility simulator: dispatch generators, loads and storage
against net-load stress scenarios and report power-deficit statistics."""

__version__ = "0.1.0"
