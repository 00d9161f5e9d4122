"""Benchmark harness: configs, seeded environments, trial suites and reports."""

from .config import EXPERIMENTS, SOLVERS, builtin_configs, load_config
from .environment import EnvironmentSpec, sample_environment, trial_rng
from .report import SummaryTable, summarize
from .trials import TrialResult, run_suite, run_trial
