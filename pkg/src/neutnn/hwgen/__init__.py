"""Netlist generation and post-layout cost forecasting."""

from .netlist import (Netlist, check_connectivity, emit_netlist, iter_netlist, netlist_to_model,
                      parse_netlist, require_validated)
from .ppa import PPA_TABLE, Forecast, Pdk, PPAModel, compare_pdks, fit_line, fit_ppa, forecast

__all__ = ["Netlist", "check_connectivity", "emit_netlist", "iter_netlist", "netlist_to_model",
           "parse_netlist", "require_validated", "PPA_TABLE", "Forecast", "Pdk", "PPAModel",
           "compare_pdks", "fit_line", "fit_ppa", "forecast"]
