"""gensheet: a reactive grid whose formulas drive image and text generation."""

__version__ = "0.1.0"
