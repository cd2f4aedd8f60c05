from .constraints import AxisConstraints, ConstraintSet, GridSpec
from .kdtree import KDTree
from .moas import (
    AdmissibleSet,
    InfeasibleConstraintsError,
    MoasBuildReport,
    build_moas,
    build_moas_axis,
    simulate_admissible,
)
from .query import GovernorQuery, GovernorResult, query_governor
from .serial import MoasFormatError, load_sets, save_sets

__all__ = [
    "AdmissibleSet",
    "AxisConstraints",
    "ConstraintSet",
    "GovernorQuery",
    "GovernorResult",
    "GridSpec",
    "InfeasibleConstraintsError",
    "KDTree",
    "MoasBuildReport",
    "MoasFormatError",
    "build_moas",
    "build_moas_axis",
    "load_sets",
    "query_governor",
    "save_sets",
    "simulate_admissible",
]
