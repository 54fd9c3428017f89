"""besovlab: simulate rough processes, estimate their local times and measure dyadic Besov regularity."""

__version__ = "0.1.0"
