"""Scene-aware full-body reaching motion synthesis toolkit."""

__version__ = "0.1.0"
