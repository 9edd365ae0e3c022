"""Mixed extractive-abstractive summary editing with soft-label training."""

__version__ = "0.1.0"
