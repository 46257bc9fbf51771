"""Evolving CPG gaits for a simulated quadruped: open-loop phase coupling
versus ground-reaction-force feedback."""

from .cmaes import CMAES, CmaConfig
from .config import SimSettings, load_sim_settings
from .cpg import ControllerParams, CpgNetwork, GlobalParams, LegParams, Mode, network_step
from .errors import (ConfigurationError, GaitEvoError, GenomeParseError, InvalidTraceError,
                     NumericalDegeneracy, ParameterError, SensorError, SimulationDiverged)
from .experiment import ExperimentConfig, RunArchive, evolve, reevaluate
from .fitness import FitnessRecord, evaluate_trace
from .genome import GENOME_LENGTH, decode
from .kernel import BACKEND
from .physics import GroundModel, RobotConfig
from .sim import run_evaluation
from .stats import mann_whitney_u, summarize
from .trace import EvalTrace

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CMAES", "CmaConfig", "ConfigurationError", "ControllerParams", "CpgNetwork",
    "EvalTrace", "ExperimentConfig", "FitnessRecord", "GENOME_LENGTH", "GaitEvoError",
    "GenomeParseError", "GlobalParams", "GroundModel", "InvalidTraceError", "LegParams", "Mode",
    "NumericalDegeneracy", "ParameterError", "RobotConfig", "RunArchive", "SensorError",
    "SimSettings", "SimulationDiverged", "decode", "evaluate_trace", "evolve", "load_sim_settings",
    "mann_whitney_u", "network_step", "reevaluate", "run_evaluation", "summarize",
]
