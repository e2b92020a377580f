"""Bilayer spatially-coupled LDPC codes for the two-source erasure relay channel."""
from .ensemble import CODE_A, CODE_B, BilayerEnsemble, bilayer_design_rate, design_rate
from .theory import (
    ChannelSet,
    CorrelationModel,
    Pentagon,
    RateBundle,
    TimeAllocation,
    achievable_region_sd,
    achievable_region_sr,
    brute_force_allocation,
    df_rate_bounds,
    optimal_allocation,
    source_entropies,
)

__version__ = "0.1.0"
