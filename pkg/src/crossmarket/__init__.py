"""Agent-based simulator of a coupled stock and index-futures market."""

__version__ = "0.1.0"
