"""Covert MISO beamforming: designs, covertness calculus, and a small conic solver.

Submodules
----------
cxmat           complex linear algebra helpers (outer products, projectors,
                Hermitian eigendecomposition, real embedding)
conic           dense SDP/SOCP interior-point solver and feasibility oracle
channel         scenario parameters, Rayleigh sampling, CSI-error ellipsoid
covert_metrics  rates, KL divergences, Pinsker bound, optimal energy detector
designs         perfect-knowledge covert and zero-forcing beamformers
robust          S-procedure robust design under ellipsoidal CSI error
harness         seeded Monte-Carlo sweeps, detector simulation, result files
"""

from . import channel, cli, conic, covert_metrics, cxmat, designs, harness, robust
from .channel import (
    ChannelSet,
    CoverBeam,
    CsiErrorEllipsoid,
    ScenarioParams,
    apply_error,
    make_cover_beam,
    sample_channels,
    sample_error,
    to_db,
    to_linear,
)
from .conic import (
    ConicProblem,
    ConicSolution,
    FeasibilityResult,
    SocpProblem,
    TraceConstraint,
    check_feasible,
    solve_sdp,
    solve_socp,
)
from .covert_metrics import (
    DetectionStats,
    KlInterval,
    LikelihoodParams,
    detector,
    kl_01,
    kl_10,
    kl_interval,
    lambdas,
    rate_bob,
    rate_carol_h0,
    rate_carol_h1,
    total_variation,
)
from .designs import (
    BeamformerSolution,
    BisectionConfig,
    covert_design,
    multiplexing_gain_probe,
    r_upper_bound,
    rank_one_recover,
    zf_design,
)
from .exceptions import (
    CovertBeamError,
    DegenerateGeometryError,
    InfeasibleScenarioError,
    InvalidInputError,
    OutputError,
    RecoveryFailedError,
)
from .harness import SweepSpec, emit_results, run_detector_mc, run_sweep
from .robust import (
    LmiPair,
    RobustProblemSpec,
    WorstCaseReport,
    build_lmis,
    nonrobust_baseline,
    robust_design,
    verify_worst_case,
)

__version__ = "0.1.0"
