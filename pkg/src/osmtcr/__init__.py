"""Optimized Schwarz methods for two-layer heat conduction with thermal contact resistance."""
from .analysis import (
    DomainError,
    FrequencyBand,
    PhysicalParams,
    PoleError,
    RawPair,
    ScaledRobin,
    StandardRobin,
    frequency_band,
    max_rho_on_band,
    rho_general,
    rho_scaled,
    rho_standard,
    xi,
)
from .optimizer import OptimizedParameter, optimal_p_closed_form, optimize_scaled_robin, optimize_standard_robin
from .schwarz import IterationTrace, OsmConfig, run_osm, two_layer_problems

__version__ = "0.1.0"
