"""Nonclassicality witness simulations for an oscillator coupled to
thermal or squeezed bosonic reservoirs through single- or two-quantum
exchange."""

__version__ = "0.1.0"

from .bath import BathSpec, SpectralDensity, correlator, moments, spectral_density
from .config import ConfigError, ExperimentConfig, load_config
from .dynamics import Propagator, evolve, evolve_trajectory, liouvillian_apply
from .hilbert import (FockSpace, annihilation, coherent_state, creation,
                      density_matrix, fock_state, generalized_dissipator,
                      husimi_q, standard_dissipator)
from .rates import (MarkovianRates, RateTable, decay_rates, markovian_rates,
                    tabulate_rates, tcl_coefficients)
from .witness import (CoherentGridBasis, FockBasis, WitnessCurve,
                      coherent_grid, delta_witness, two_time_distribution,
                      witness, witness_sweep, witness_sweep_multi)

__all__ = [
    "BathSpec", "SpectralDensity", "correlator", "moments", "spectral_density",
    "ConfigError", "ExperimentConfig", "load_config",
    "Propagator", "evolve", "evolve_trajectory", "liouvillian_apply",
    "FockSpace", "annihilation", "coherent_state", "creation",
    "density_matrix", "fock_state", "generalized_dissipator", "husimi_q",
    "standard_dissipator",
    "MarkovianRates", "RateTable", "decay_rates", "markovian_rates",
    "tabulate_rates", "tcl_coefficients",
    "CoherentGridBasis", "FockBasis", "WitnessCurve", "coherent_grid",
    "delta_witness", "two_time_distribution", "witness", "witness_sweep",
    "witness_sweep_multi",
]
