"""Linear and semi-linear response of driven systems with sparse perturbation matrices."""

__version__ = "0.1.0"

from .averages import (
    AverageReport,
    algebraic_average,
    average_report,
    reference_averages,
    resistor_network_average,
    suppression_factor,
)
from .core import BandWindow, CouplingMatrix, LevelSet, SparsityReport, SpectralWeight, band_profile, sparsity_measures
from .models import EnsembleSpec, ModelOutput, RingSpec, build_ring, build_sparse_ensemble, drude_reference, wall_reference
from .network import (
    ConductanceNetwork,
    TwoProbeResult,
    banded_uniform_conductance,
    inverse_resistivity,
    series_conductance,
    two_probe_conductance,
)
from .response import (
    OccupationSpec,
    RateNetwork,
    ResponseResult,
    absorption,
    conductance,
    fgr_rates,
    kubo_diffusion,
    make_spectral_weight,
    slrt_diffusion,
)
