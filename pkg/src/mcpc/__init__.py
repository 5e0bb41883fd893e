"""Monte Carlo certification of simulated quantum processes."""

__version__ = "0.1.0"
