"""Numerical laboratory for conservative time discretizations.

The package links the flow of a conservative mode system to its
one-step conservative discretizations through explicit transfer kernels,
and measures uniform observability of both through Gramians on filtered
mode sets.
"""

from .spectral import (
    FrequencyOutOfSchemeDomain,
    Spectrum,
    State,
    FilterBand,
    make_transport_spectrum,
    make_wave_spectrum,
    bandpass,
    evolve_continuous,
    evolve_discrete,
    sobolev_norm,
)
from .schemes import (
    Scheme,
    midpoint,
    gauss4,
    newmark,
    exact_phase,
    parse_scheme,
    phase_inverse,
    band_dphase_range,
    uniform_threshold,
    certify,
    CheckResult,
    HypothesisReport,
)
from .gridfn import GridFunction, dft, idft, parseval_check
from .kernels import (
    Cutoff,
    AnnularCutoff,
    KernelConfig,
    kernel_config,
    band_kernel_config,
    forward_kernel,
    reverse_kernel,
    kernel_grid,
    continuous_from_discrete,
    discrete_from_continuous,
    DecayProfile,
    decay_profile,
    OperatorNormReport,
    operator_norm_check,
)
from .observability import (
    ObservationOperator,
    GramianResult,
    point_obs_transport,
    point_obs_wave,
    continuous_gramian,
    discrete_gramian,
    rayleigh_minimum,
    SweepResult,
    uniformity_sweep,
    concentrated_packet,
    packet_outside_mass,
    packet_mass_decay,
    PacketDecay,
    InghamBounds,
    ingham_bounds,
    weak_star_norm,
    LiouvilleReport,
    liouville_check,
    weak_obs_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "FrequencyOutOfSchemeDomain",
    "Spectrum",
    "State",
    "FilterBand",
    "make_transport_spectrum",
    "make_wave_spectrum",
    "bandpass",
    "evolve_continuous",
    "evolve_discrete",
    "sobolev_norm",
    "Scheme",
    "midpoint",
    "gauss4",
    "newmark",
    "exact_phase",
    "parse_scheme",
    "phase_inverse",
    "band_dphase_range",
    "uniform_threshold",
    "certify",
    "CheckResult",
    "HypothesisReport",
    "GridFunction",
    "dft",
    "idft",
    "parseval_check",
    "Cutoff",
    "AnnularCutoff",
    "KernelConfig",
    "kernel_config",
    "band_kernel_config",
    "forward_kernel",
    "reverse_kernel",
    "kernel_grid",
    "continuous_from_discrete",
    "discrete_from_continuous",
    "DecayProfile",
    "decay_profile",
    "OperatorNormReport",
    "operator_norm_check",
    "ObservationOperator",
    "GramianResult",
    "point_obs_transport",
    "point_obs_wave",
    "continuous_gramian",
    "discrete_gramian",
    "rayleigh_minimum",
    "SweepResult",
    "uniformity_sweep",
    "concentrated_packet",
    "packet_outside_mass",
    "packet_mass_decay",
    "PacketDecay",
    "InghamBounds",
    "ingham_bounds",
    "weak_star_norm",
    "LiouvilleReport",
    "liouville_check",
    "weak_obs_sweep",
    "__version__",
]
