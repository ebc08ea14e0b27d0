"""Batch renderer for shearmhd harness CSV artifacts (heatmap, trace, slopes)."""

__version__ = "0.1.0"
