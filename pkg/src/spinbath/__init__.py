"""Collective-spin dephasing in a quasi-1D dipolar condensate reservoir.

The package goes from dimensionless reservoir parameters to dephasing kernels
to exact Dicke-basis density-matrix evolution to the metrology payload (spin
squeezing, quantum Fisher information, cat-state fidelity), plus a batch CLI
that reproduces the reference parameter sweeps.

Numerical hot paths live in a compiled extension with a pure-numpy fallback;
see ``spinbath.backend`` for the selection rules.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ExtremumSingularityError,
    MeanSpinError,
    QuadratureError,
    SpinbathError,
    StabilityError,
)
from .reservoir import (
    KernelTable,
    LabParams,
    ReservoirParams,
    StabilityReport,
    bogoliubov_energy,
    bogoliubov_uv,
    build_kernel_table,
    clear_caches,
    coupling_weight,
    delta_infinity,
    delta_kernel,
    dipole_form_factor,
    effective_epsilon_dd,
    gamma_kernel,
    incomplete_gamma0,
    lab_units_to_dimensionless,
    spectral_density,
    stability_scan,
)
from .spin_dynamics import (
    DickeState,
    EvolutionInputs,
    cat_state,
    collective_operator,
    css_general,
    css_plus_x,
    evolve,
)
from .metrology import (
    LossyMoments,
    SqueezingResult,
    cat_fidelity,
    lossy_moments_oracle,
    optimal_time,
    qfi_matrix,
    qfi_max,
    qfi_n2_analytic,
    squeezing_closed_form,
    squeezing_parameter,
)
from .config import ScenarioConfig, TimeGrid, figure_preset, load_config, parse_config
from .runner import QfiSummary, qfi_amplification_summary, run_scenario

__all__ = [
    "ConfigError",
    "ExtremumSingularityError",
    "MeanSpinError",
    "QuadratureError",
    "SpinbathError",
    "StabilityError",
    "KernelTable",
    "LabParams",
    "ReservoirParams",
    "StabilityReport",
    "bogoliubov_energy",
    "bogoliubov_uv",
    "build_kernel_table",
    "clear_caches",
    "coupling_weight",
    "delta_infinity",
    "delta_kernel",
    "dipole_form_factor",
    "effective_epsilon_dd",
    "gamma_kernel",
    "incomplete_gamma0",
    "lab_units_to_dimensionless",
    "spectral_density",
    "stability_scan",
    "DickeState",
    "EvolutionInputs",
    "cat_state",
    "collective_operator",
    "css_general",
    "css_plus_x",
    "evolve",
    "LossyMoments",
    "SqueezingResult",
    "cat_fidelity",
    "lossy_moments_oracle",
    "optimal_time",
    "qfi_matrix",
    "qfi_max",
    "qfi_n2_analytic",
    "squeezing_closed_form",
    "squeezing_parameter",
    "ScenarioConfig",
    "TimeGrid",
    "figure_preset",
    "load_config",
    "parse_config",
    "QfiSummary",
    "qfi_amplification_summary",
    "run_scenario",
    "__version__",
]
