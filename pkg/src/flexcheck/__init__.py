"""Coherence analysis of normative specifications written in FL."""

__version__ = "0.1.0"
