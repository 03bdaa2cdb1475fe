"""Generators package for report rendering."""
from .report_generator import histogram_table, render_report

__all__ = ['histogram_table', 'render_report']
