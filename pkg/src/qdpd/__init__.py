"""Deterministic simulator and analysis toolkit for a distributed primal-dual
flow with finite-bit quantized communication over an undirected graph."""

__version__ = "0.1.0"

from .analysis import (
    DiagnosticSample,
    Envelope,
    RateUndetermined,
    diagnose,
    dual_reference,
    envelopes,
    fit_rate,
    kkt_residual,
    lyapunov,
    tracking_errors,
)
from .codec import (
    DesynchronizationError,
    EncoderSaturationError,
    Frame,
    LengthSchedule,
    RangeState,
    bandwidth_per_step,
    decode,
    encode,
    pack_bits,
    unpack_bits,
)
from .dynamics import (
    DivergenceError,
    IntegratorConfig,
    TrajectoryRecord,
    integrate_interval,
    rhs,
    run,
    run_exact,
)
from .graph import (
    DisconnectedGraphError,
    NetworkGraph,
    TopologyError,
    apply_laplacian,
    build_complete,
    build_ring,
    from_edges,
)
from .harness import ConfigError, RunConfig, export, load_config, run_experiment
from .objective import (
    CentralSolution,
    GlobalProblem,
    PiecewiseQuadCost,
    QuadraticCost,
    solve_centralized,
    table1_problem,
)
from .params import (
    BandwidthReport,
    InfeasibleParametersError,
    ParameterSet,
    bandwidth_relation,
    derive_parameters,
    manual_mode,
)
from .quantizer import (
    CodecError,
    Interval,
    QuantizerSpec,
    SaturationError,
    dequantize,
    dequantize_vector,
    quantize,
    quantize_vector,
)
