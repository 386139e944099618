"""Post-stall fixed-wing motion planning with direct NMPC."""

__version__ = "0.1.0"
