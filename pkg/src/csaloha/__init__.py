"""Coded slotted ALOHA with successive interference cancelation: asymptotic
analysis (density evolution, MAP bound, load bound) and finite-length Monte
Carlo simulation, for block frames and spatially-coupled super-frames."""

from .core import (
    CoupledTopology,
    DeResult,
    LoadPoint,
    SchemeParams,
    ThresholdResult,
    build_circulant_topology,
    build_topology,
    rng_stream,
)
from .de_block import (
    BlockDeConfig,
    ThresholdBracketError,
    block_threshold,
    block_threshold_grid,
    de_block_run,
    efficiency,
    rho_poisson,
    solve_load_bound,
)
from .de_coupled import (
    CoupledDeState,
    coupled_threshold,
    de_coupled_run,
    de_coupled_step,
    termination_adjusted_load,
)
from .map_bound import (
    AreaSolutionError,
    ExtrinsicCurve,
    adaptive_simpson,
    extrinsic_p,
    locate_it_epsilon,
    map_epsilon_bound,
    map_load_bound,
    sample_extrinsic_curve,
)
from .sim import (
    DecodeReport,
    FrameGraph,
    SimReport,
    frame_from_text,
    frame_to_text,
    gje_decode,
    peel,
    run_trials,
    sample_block_frame,
    sample_coupled_frame,
)

__version__ = "0.1.0"
