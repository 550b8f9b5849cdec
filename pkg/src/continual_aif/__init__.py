"""Discrete-time active inference with Dirichlet likelihood learning under regime shifts."""

from .agent import HierarchicalAgent, TrialRecord
from .config import ScenarioConfig, builtin_scenarios, load_config, load_shipped
from .environment import ChangeEvent, Environment, GroundTruth
from .inference import BeliefState, EfeBreakdown, infer_states, expected_free_energy, select_policy
from .learning import LearningEvent, learn_trial, update_concentrations
from .model import GenerativeModel, build_paper_model, refresh_A_from_a
from .runner import RunResult, paper_protocol, run_experiment, write_results
from .scoring import ScoreReport, pair_score, total_score

__version__ = "0.1.0"
