"""Testing monotonicity of distributions on the hypercube with subcube conditioning."""

__version__ = "0.1.0"
