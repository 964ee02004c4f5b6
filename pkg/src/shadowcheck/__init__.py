"""Classical-shadow simulation, consistency deciders, marginal-to-shadow
reduction and sketch-based dequantized decisions."""
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
