"""Navigation metrics, dataset ingestion, evaluation suite, plots and the CLI."""
from .ethucy import (DATA_ENV, DatasetBundle, DatasetFormatError, load_ethucy_dir, load_ethucy_text,
                     parse_ethucy_text, resample, track_windows)
from .nav_metrics import (METRIC_NAMES, EpisodeMetrics, MetricError, MetricsRecord, aggregate,
                          compute_nav_metrics, entered_group, episode_metrics, intrusion_steps)
from .suite import METHODS, SuiteConfig, evaluate_method, metrics_csv, metrics_table, run_eval_suite

__all__ = [
    "DATA_ENV", "DatasetBundle", "DatasetFormatError", "load_ethucy_dir", "load_ethucy_text",
    "parse_ethucy_text", "resample", "track_windows", "METRIC_NAMES", "EpisodeMetrics", "MetricError",
    "MetricsRecord", "aggregate", "compute_nav_metrics", "entered_group", "episode_metrics",
    "intrusion_steps", "METHODS", "SuiteConfig", "evaluate_method", "metrics_csv", "metrics_table",
    "run_eval_suite",
]
