"""Two-player game simulations between model-backed and scripted agents."""

__version__ = "0.1.0"
