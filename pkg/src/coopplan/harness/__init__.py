"""Episode orchestration, benchmarks, ablations, replay and reporting."""

from .benchmark import AblationReport, EpisodeSummary, MetricsReport, aggregate, run_ablation, run_benchmark, summarize
from .config import CommSettings, ConfigError, RunConfig, config_from_dict, load_config, save_config
from .episode import run_episode
from .records import EpisodeRecord, SchemaVersionMismatch, loads_record, read_record
from .replay import Verdict, replay
