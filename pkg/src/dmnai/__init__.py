"""Stance dissemination on directed social graphs with adjacent and
non-adjacent influence, an Independent Cascade baseline and scoring."""

from .baselines import ICConfig, ic_traces, run_ic
from .engine import (
    AttitudeState,
    SimulationConfig,
    SimulationResult,
    TrackingSets,
    derive_replica_rng,
    nadj_phase,
    run_simulation,
)
from .graph import SeedAssignment, SocialGraph, generate_synthetic, load_edge_list, load_seeds
from .kernel import KernelParams, attitude_similarity, influence_probability, stance_factor, transfer_weight
from .metrics import ReferenceTrace, curve_extract, range_accuracy, stance_accuracy
from .trace import RoundTrace

__version__ = "0.1.0"
