"""Grover search for MAX-CUT on small noisy devices."""

from .graph import Graph, brute_force_maxcut, cut_histogram, cut_value, named_graph

__version__ = "0.1.0"

__all__ = ["Graph", "brute_force_maxcut", "cut_histogram", "cut_value", "named_graph", "__version__"]
