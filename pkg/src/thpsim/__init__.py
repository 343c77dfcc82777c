"""Tomlinson-Harashima precoding for multiuser MIMO downlinks with quantized CSI feedback.

Subpackages and modules:

``numerics``
    LQ factorization, adaptive quadrature and special functions.
``channel``
    System parameters, reproducible random streams and Rayleigh channels.
``quantizer``
    RVQ codebooks, direction quantization and the cell-approximation sampler.
``scheduler``
    Greedy user selection.
``thp``
    Precoder construction, the symbol-level chain and the ZFBF baseline.
``analysis``
    Closed-form SINR laws, extreme-value intervals and scaling references.
``experiments``
    Monte Carlo engine, KS validation, sweeps and the command-line tool.
"""

from . import analysis, channel, numerics, quantizer, scheduler, thp
from ._kernels import BACKEND as KERNEL_BACKEND
from .channel import RngStream, SystemParams
from .errors import (
    AccuracyError,
    CapacityError,
    ConfigError,
    DegeneracyError,
    DimensionError,
    DomainError,
    InfeasibleError,
    InsufficientUsersError,
    StatisticalPowerError,
    SupportError,
    ThpError,
)
from .quantizer import Codebook, generate_codebook, load_codebook, save_codebook
from .scheduler import Schedule, greedy_select

__version__ = "0.1.0"

__all__ = [
    "analysis",
    "channel",
    "numerics",
    "quantizer",
    "scheduler",
    "thp",
    "KERNEL_BACKEND",
    "RngStream",
    "SystemParams",
    "Codebook",
    "generate_codebook",
    "load_codebook",
    "save_codebook",
    "Schedule",
    "greedy_select",
    "AccuracyError",
    "CapacityError",
    "ConfigError",
    "DegeneracyError",
    "DimensionError",
    "DomainError",
    "InfeasibleError",
    "InsufficientUsersError",
    "StatisticalPowerError",
    "SupportError",
    "ThpError",
]
