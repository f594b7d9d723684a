"""Dynamic pairwise and group-wise relational reasoning for trajectory prediction
and socially aware robot navigation in group-aware crowds."""

__version__ = "0.1.0"
