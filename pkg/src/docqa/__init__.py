"""docqa: grounded question answering over structured product documentation."""

__version__ = "0.1.0"
