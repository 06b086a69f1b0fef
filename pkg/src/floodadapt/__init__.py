"""Desk-scale integrated assessment of rainfall flooding, transport impacts,
and sequential climate-adaptation planning."""

__version__ = "0.1.0"
