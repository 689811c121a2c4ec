"""
Core pipeline functionality.

This package wires the domain algorithms of `sdg` into the command line:
- args: Argument parsing and configuration
- pipeline: Subcommand workflows and the command registry
- worker: Worker state and task processing
- parallel: Parallel execution orchestration
- utils: File helpers and logging setup
"""

from .args import RunConfig, create_argument_parser, parse_args
from .parallel import ExecutionResults, ParallelExecutor
from .pipeline import COMMANDS
from .utils import check_distinct_paths, emit, load_id_list, setup_logging
from .worker import WorkerState, init_worker, process_query_task, process_training_task

__all__ = [
    # args
    "RunConfig",
    "create_argument_parser",
    "parse_args",
    # pipeline
    "COMMANDS",
    # worker
    "WorkerState",
    "init_worker",
    "process_query_task",
    "process_training_task",
    # parallel
    "ParallelExecutor",
    "ExecutionResults",
    # utils
    "check_distinct_paths",
    "emit",
    "load_id_list",
    "setup_logging",
]
