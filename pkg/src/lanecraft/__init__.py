"""Desk-scale lane-following / overtaking simulator with swappable perception and DRL control."""

__version__ = "0.1.0"
