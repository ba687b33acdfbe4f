"""Simulation toolkit for clique-factor hitting times in random graph and hypergraph processes."""
__version__ = "0.1.0"
