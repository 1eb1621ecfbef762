"""Evolutionary architecture search for recurrent NARX process models."""

from .config import ConfigError, NasConfig, load_config, preset, table_defaults
from .experiment import exhaustive_search, run_calls, summarize, verify
from .fitness import FitnessWeights, evaluate_genome, fitness, mean_error
from .genome import Genome, StructureError, init_genome, random_genome, simulate_closed_loop
from .hybrid import run_dnas4
from .plant import Dataset, bundled_dataset, generate_dataset, load_csv, save_csv
from .search import evolve, run_dnas1, run_dnas2, run_dnas3
from .training import TrainerKind, TrainSpec, train

__all__ = [
    "ConfigError", "NasConfig", "load_config", "preset", "table_defaults",
    "exhaustive_search", "run_calls", "summarize", "verify",
    "FitnessWeights", "evaluate_genome", "fitness", "mean_error",
    "Genome", "StructureError", "init_genome", "random_genome", "simulate_closed_loop",
    "run_dnas4", "Dataset", "bundled_dataset", "generate_dataset", "load_csv", "save_csv",
    "evolve", "run_dnas1", "run_dnas2", "run_dnas3", "TrainerKind", "TrainSpec", "train",
]
