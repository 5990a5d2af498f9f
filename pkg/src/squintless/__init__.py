"""Antenna-position optimization for wideband near-field analog beamforming.

Movable antennas on a square aperture are placed to maximize the worst
subcarrier gain of a single phase-only beam steered at the band center.
"""

from .alg_sgda import InnerStop, SgdaParams, run_alg2, sgda_inner
from .alg_sv import InfeasibleInit, RunState, StoppingRule, run_alg1
from .baselines import NoFeasibleParticle, NonSquareM, PsoParams, fpa_layout, run_pso
from .calculus import (
    grad_h,
    grad_k_wrt_f,
    hess_h,
    hessian_lower_bound,
    spacing_linearization,
    surrogate_h,
)
from .channel import (
    SPEED_OF_LIGHT,
    ArrayConfig,
    FrequencyGrid,
    InfeasibleLayout,
    UserGeometry,
    array_gain,
    check_layout,
    excess_distance,
    gain_sq,
    gain_sq_closed_form,
    gain_sq_grid,
    is_feasible,
    min_gain_sq,
    random_layout,
    steering_vector,
)
from .config import ConfigError, ExperimentConfig
from .subsolvers import ConvexCell2D, project_p6, solve_p4, spacing_cell

__version__ = "0.1.0"
