"""Compressed sensing of approximately sparse signals: G-AMP solver, state
evolution, replica phase diagram, and seeded measurement matrices."""

from .errors import ConfigError, LayoutError, NumericalDivergenceError
from .measure import (
    BlockLayout,
    BlockMatrix,
    CouplingMatrix,
    SeedingProfile,
    coupling_matrix,
    homogeneous_matrix,
    load_matrix,
    measure,
    save_matrix,
    seeded_matrix,
    total_rate,
)
from .prior import (
    DenoiserInput,
    SignalModel,
    posterior_mean,
    posterior_second_moment,
    posterior_variance,
    prior_variance,
    sample_signal,
)
from .quadrature import QuadratureRule, gauss_hermite, gauss_panels
from .sevo import (
    SeTrace,
    channel_mmse,
    convergence_time,
    se_block_run,
    se_block_step,
    se_run,
    se_step,
)

__version__ = "0.1.0"

from .gamp import (  # noqa: E402
    GampOptions,
    GampResult,
    GampState,
    gamp_init,
    gamp_run,
    gamp_sweep,
    mse,
)
from .replica import (  # noqa: E402
    PhaseBoundary,
    PotentialLandscape,
    alpha_bp,
    alpha_opt,
    alpha_s,
    landscape,
    optimal_mse,
    phase_diagram,
    potential,
    transitions,
)
