"""Dataset construction, splitting, statistics and scoring."""

from .dataset import (
    DEFAULT_RATIOS,
    RECORD_KEYS,
    AlreadySplit,
    DatasetRecord,
    EmptyAfterStripping,
    InvalidDataset,
    build_dataset,
    check_dataset,
    read_records,
    split_dataset,
    split_sizes,
    write_records,
)
from .io import MalformedJsonl, dumps_jsonl, read_jsonl, write_json, write_jsonl
from .metrics import MetricReport, SingleClassAUC, rank_auc, score
from .stats import DatasetStats, EmptyDataset, compute_stats, format_stats
from .strip import strip_comments

__all__ = [
    "DEFAULT_RATIOS",
    "RECORD_KEYS",
    "AlreadySplit",
    "DatasetRecord",
    "DatasetStats",
    "EmptyAfterStripping",
    "EmptyDataset",
    "InvalidDataset",
    "MalformedJsonl",
    "dumps_jsonl",
    "MetricReport",
    "SingleClassAUC",
    "build_dataset",
    "check_dataset",
    "compute_stats",
    "format_stats",
    "rank_auc",
    "read_jsonl",
    "read_records",
    "score",
    "split_dataset",
    "split_sizes",
    "strip_comments",
    "write_json",
    "write_jsonl",
    "write_records",
]
