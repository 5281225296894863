"""Laboratory for pointwise and mean cancellation sequences."""

__version__ = "0.1.0"
