"""Figure generation from nfbayes experiment outputs."""

from .panels import PlotInputError, plot_acd_panel, plot_density, plot_network

__all__ = ["PlotInputError", "plot_acd_panel", "plot_density", "plot_network"]
