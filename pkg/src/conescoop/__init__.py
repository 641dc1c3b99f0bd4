"""Reconfigurable conical-sheet scooping: cone design math and a 2D granular simulator."""

from .capture import CoverageModel, effective_width, lateral_coverage, scoop_fraction
from .cone import (
    ConeConfig,
    ConeDomainError,
    InsertabilityVerdict,
    bottom_diameter,
    design_table,
    insertability,
    min_insertion_angle,
    min_practical_diameter,
    vertex_angle,
)
from .config import ConfigError, RunConfig, load_config
from .engine import ParticleWorld, fill_and_settle, measure, step
from .harness import ScoopTrialResult, experiment_configs, run_sweep, run_trial
from .scene import ContainerSpec, GranularSpec, SheetSpec, container_sdf
from .sheet import SheetState, build_sheet, solve_deformation_step
from .trajectory import PlanningError, TrajectoryParams, TrajectoryPlan, plan_scoop, pose_at

__all__ = [
    "ConeConfig",
    "ConeDomainError",
    "ConfigError",
    "ContainerSpec",
    "CoverageModel",
    "GranularSpec",
    "InsertabilityVerdict",
    "ParticleWorld",
    "PlanningError",
    "RunConfig",
    "ScoopTrialResult",
    "SheetSpec",
    "SheetState",
    "TrajectoryParams",
    "TrajectoryPlan",
    "bottom_diameter",
    "build_sheet",
    "container_sdf",
    "design_table",
    "effective_width",
    "experiment_configs",
    "fill_and_settle",
    "insertability",
    "lateral_coverage",
    "load_config",
    "measure",
    "min_insertion_angle",
    "min_practical_diameter",
    "plan_scoop",
    "pose_at",
    "run_sweep",
    "run_trial",
    "scoop_fraction",
    "solve_deformation_step",
    "step",
    "vertex_angle",
]
