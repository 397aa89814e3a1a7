from .batch import LogWriter, read_log, run_batch
from .classify import FailureClass, classify_failure
from .render import render_trajectory
from .report import ReportTable, aggregate

__all__ = [
    "FailureClass",
    "LogWriter",
    "ReportTable",
    "aggregate",
    "classify_failure",
    "read_log",
    "render_trajectory",
    "run_batch",
]
