"""Concentration bounds for weakly dependent Banach-valued sums and kernel
spectral regularization on mixing data."""

from .concentration import (
    ConcentrationParams,
    block_partition,
    bound_cor34,
    bound_thm31,
    bound_thm32,
    effective_sample_size_bound,
    effective_sample_size_exact,
    mc_deviation_check,
)
from .geometry import NormSpace, certify_constants, fd_oracle, gateaux_first, gateaux_second
from .mercer import MercerKernel, MercerSetup
from .mixing import MixingRate, chain_phitilde_exact, chain_tau_exact, seminorm_constants
from .processes import ProcessSpec, Trajectory, simulate
from .spectral import (
    FilterSpec,
    PowerLawSpectrum,
    EmpiricalSpectrum,
    certify_filter,
    effective_dimension,
    filter_eval,
    fit,
    lambda_schedule,
)

__version__ = "0.1.0"

__all__ = [
    "ConcentrationParams",
    "block_partition",
    "bound_cor34",
    "bound_thm31",
    "bound_thm32",
    "effective_sample_size_bound",
    "effective_sample_size_exact",
    "mc_deviation_check",
    "NormSpace",
    "certify_constants",
    "fd_oracle",
    "gateaux_first",
    "gateaux_second",
    "MercerKernel",
    "MercerSetup",
    "MixingRate",
    "chain_phitilde_exact",
    "chain_tau_exact",
    "seminorm_constants",
    "ProcessSpec",
    "Trajectory",
    "simulate",
    "FilterSpec",
    "PowerLawSpectrum",
    "EmpiricalSpectrum",
    "certify_filter",
    "effective_dimension",
    "filter_eval",
    "fit",
    "lambda_schedule",
]
