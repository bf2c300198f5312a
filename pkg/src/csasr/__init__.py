"""Toolkit for multilingual / code-switching ASR data preparation and scoring."""

__version__ = "0.1.0"
