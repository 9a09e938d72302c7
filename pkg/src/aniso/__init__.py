"""Pseudo-spectral toolkit for 2D Boussinesq flows with direction-selective
dissipation: exact-multiplier spectral operators, three regularized
right-hand sides, exponential-integrator time stepping, and a diagnostics
layer for energy budgets, small-data stability bounds and decay rates."""

from .spectral import (
    Grid2D,
    SpectralField,
    VectorField2,
    apply_multiplier,
    bessel_potential,
    dealias,
    derivative,
    fourier_truncate,
    fractional_laplacian,
    leray_project,
    mollify,
    riesz_double,
    to_physical,
    to_spectral,
)
from .model import (
    DissipationConfig,
    RegularityRecipe,
    SimulationState,
    advect,
    preset_config,
    rhs_full,
    rhs_mollified,
    rhs_truncated,
    synthesize_divfree_velocity,
    synthesize_field,
)
from .integrate import (
    BlowUpError,
    IntegratorConfig,
    PropagatorSymbol,
    RhsVariant,
    linear_propagator,
    run,
    step,
)
from .norms import (
    BesovParams,
    LPBlockSet,
    besov_norm,
    inequality_probe,
    lp_decompose,
    lp_norm,
    sobolev_norm,
    sqrtL_norm,
)
from .diagnostics import (
    DecaySeries,
    EnergyReport,
    bootstrap_monitor,
    decay_fit,
    decay_series,
    energy_budget,
    sample_state,
)
from .snapshots import read_snapshot, write_snapshot

__version__ = "0.1.0"
