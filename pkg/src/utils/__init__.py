"""Utility functions for the top-view renderer."""

from src.utils.time import format_rate, format_time

__all__ = [
    "format_rate",
    "format_time",
]
