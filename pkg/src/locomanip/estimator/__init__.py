from .filter import (
    EstimatorState,
    LegMeasurement,
    NoiseParams,
    RigidBodyParams,
    dynamics_jacobian,
    feature_vector,
    kf_predict,
    kf_update,
    leg_odometry,
    low_pass,
    reduced_dynamics,
    sample_observation_noise,
)
from .network import ModelErrorNet, TrainConfig, TrainingDivergedError, train_model_error_net

__all__ = [
    "EstimatorState",
    "LegMeasurement",
    "NoiseParams",
    "RigidBodyParams",
    "ModelErrorNet",
    "TrainConfig",
    "TrainingDivergedError",
    "dynamics_jacobian",
    "feature_vector",
    "kf_predict",
    "kf_update",
    "leg_odometry",
    "low_pass",
    "reduced_dynamics",
    "sample_observation_noise",
    "train_model_error_net",
]
