"""Outage, delay-limited throughput and rate selection for cooperative HARQ-CC
over time-correlated Nakagami-m fading."""

from .channel import GammaSumSpectrum, LinkModel, ModelError, SnrScale, build_correlation, spectrum_of
from .distributions import Backend, SnrCdf, cdf, cdf_partial_fraction, pdf
from .harq import HarqConfig, Links, OutageTable, dlt, outage_dest, outage_relay, outage_table
from .montecarlo import SimEstimate, estimate_dlt, estimate_outage, simulate
from .optimizer import RateResult, RateSearch, dlt_curve, optimal_rate
from .scenario import Scenario, ScenarioError, load_scenario, parse_scenario
from .specfun import ContourParams, ConvergenceError, DomainError, bromwich_cdf, invert_laplace

__all__ = [
    "Backend",
    "ContourParams",
    "ConvergenceError",
    "DomainError",
    "GammaSumSpectrum",
    "HarqConfig",
    "LinkModel",
    "Links",
    "ModelError",
    "OutageTable",
    "RateResult",
    "RateSearch",
    "Scenario",
    "ScenarioError",
    "SimEstimate",
    "SnrCdf",
    "SnrScale",
    "bromwich_cdf",
    "build_correlation",
    "cdf",
    "cdf_partial_fraction",
    "dlt",
    "dlt_curve",
    "estimate_dlt",
    "estimate_outage",
    "invert_laplace",
    "load_scenario",
    "optimal_rate",
    "outage_dest",
    "outage_relay",
    "outage_table",
    "parse_scenario",
    "pdf",
    "simulate",
    "spectrum_of",
]
