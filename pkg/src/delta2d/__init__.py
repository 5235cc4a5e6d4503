"""Two-dimensional delta symbol toolkit."""
__version__ = "0.1.0"
