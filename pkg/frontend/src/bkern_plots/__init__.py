"""Render verification report bundles into static plots and an index."""

from .render import render_report

__version__ = "0.1.0"

__all__ = ["render_report"]
