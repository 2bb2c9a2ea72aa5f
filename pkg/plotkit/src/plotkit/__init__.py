"""Render figures from overlap-estimation result CSVs.

Three figure kinds, each a pure function of the CSV content:

- ``scaling-curve``: shot budget against system size per method, log scale,
  with the fitted log2 slope annotated.
- ``error-histogram``: per-method absolute-error histograms with mean
  markers, one panel per system size.
- ``method-comparison``: mean absolute error against system size per method,
  with the crossing point annotated where the ordering flips.
"""

from .plots import (PlotDataError, plot_comparison, plot_histograms,
                    plot_scaling, render)

__all__ = ["render", "plot_scaling", "plot_histograms", "plot_comparison",
           "PlotDataError"]
