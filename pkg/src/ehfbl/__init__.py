"""Finite-blocklength achievable rates for energy-harvesting AWGN channels."""
from .bounds import (
    BoundReport,
    ChannelParams,
    MomentSet,
    Schedule,
    achievable_log_M,
    awgn_capacity,
    awgn_dispersion,
    eh_capacity,
    eh_dispersion,
    epsilon_n,
    info_density_moments,
    make_schedule,
    normal_approx_log_M,
    theorem1_closed_form,
)
from .ehmodel import HarvestModel
from .kernels import BACKEND

__version__ = "0.1.0"
