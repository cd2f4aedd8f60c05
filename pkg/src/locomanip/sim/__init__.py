from .gait import GaitState, GaitSynthParams, gait_synthesize
from .harness import RunMetrics, SimulationNaNError, StepLog, export_log, load_log, run_scenario
from .rewards import RewardContext, RewardParams, eval_rewards
from .scenario import PiecewiseProfile, ProfileSegment, Scenario
from .tracker import BaseTrackerParams, base_tracker_step

__all__ = [
    "BaseTrackerParams",
    "GaitState",
    "GaitSynthParams",
    "PiecewiseProfile",
    "ProfileSegment",
    "RewardContext",
    "RewardParams",
    "RunMetrics",
    "Scenario",
    "SimulationNaNError",
    "StepLog",
    "base_tracker_step",
    "eval_rewards",
    "export_log",
    "gait_synthesize",
    "load_log",
    "run_scenario",
]
