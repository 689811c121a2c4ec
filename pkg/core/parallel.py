"""
Parallel execution orchestration.

This module runs query-bank entries and per-SDG model fits either in the
current process or on a worker pool, with progress tracking. Results are
merged in task order, so outputs never depend on scheduling.
"""

from __future__ import annotations

import logging
import multiprocessing as mp
import time
from dataclasses import dataclass
from typing import Any, Callable, Sequence

from sdg.classifier import (
    BinaryModel,
    Hyperparams,
    LogRegModel,
    TfidfModel,
    TrainingSets,
    collect_models,
)
from sdg.common import SdgMapping
from sdg.corpus import Corpus, InvertedIndex
from sdg.query_dsl import QueryBank
from sdg.query_engine import mapping_from_hits

from .worker import init_worker, process_query_task, process_training_task

log = logging.getLogger(__name__)


@dataclass
class ExecutionResults:
    """
    Results from one batch of tasks.

    Attributes:
        results: Task results, in task order
        elapsed_time: Total execution time in seconds
    """

    results: list[Any]
    elapsed_time: float


class ParallelExecutor:
    """
    Orchestrates execution of independent tasks.

    Handles both single-process and multi-process execution modes,
    with progress tracking and result collection.
    """

    def __init__(self, workers: int = 1, progress_every: int = 10):
        """
        Args:
            workers: Number of worker processes (<= 1 runs in-process)
            progress_every: Log progress every N completed tasks (0 = never)
        """
        self.workers = workers
        self.progress_every = progress_every

    def _progress(self, i: int, total: int, t0: float) -> None:
        if self.progress_every and i % self.progress_every == 0:
            dt = max(1e-9, time.time() - t0)
            log.info("[progress] tasks=%d/%d rate=%.1f/s", i, total, i / dt)

    def run_single_process(
        self, tasks: Sequence, fn: Callable, initargs: tuple
    ) -> ExecutionResults:
        # Initialize worker state in main process
        init_worker(*initargs)

        t0 = time.time()
        results = []
        for i, task in enumerate(tasks, start=1):
            results.append(fn(task))
            self._progress(i, len(tasks), t0)
        return ExecutionResults(results, time.time() - t0)

    def run_multiprocess(
        self, tasks: Sequence, fn: Callable, initargs: tuple
    ) -> ExecutionResults:
        t0 = time.time()
        order = {task: k for k, task in enumerate(tasks)}
        results: list[Any] = []
        with mp.Pool(
            processes=self.workers,
            initializer=init_worker,
            initargs=initargs,
        ) as pool:
            for i, result in enumerate(pool.imap_unordered(fn, tasks, chunksize=1), start=1):
                results.append(result)
                self._progress(i, len(tasks), t0)
        results.sort(key=lambda r: order[r[0]])
        return ExecutionResults(results, time.time() - t0)

    def execute(self, tasks: Sequence, fn: Callable, initargs: tuple) -> ExecutionResults:
        """
        Run `fn` over every task (single or multi-process).

        `fn` must return a tuple whose first element is its task.
        """
        if self.workers <= 1 or len(tasks) <= 1:
            return self.run_single_process(tasks, fn, initargs)
        return self.run_multiprocess(tasks, fn, initargs)

    def run_query_bank(self, bank: QueryBank, target: InvertedIndex | Corpus) -> SdgMapping:
        """Parallel counterpart of `sdg.query_engine.run_query_bank`."""
        run = self.execute(list(range(len(bank))), process_query_task, (target, bank))
        mapping = mapping_from_hits(bank, [ids for _, ids in run.results])
        log.info(
            "[map] queries=%d records=%d assignments=%d time=%.2fs",
            len(bank),
            len(mapping),
            len(mapping.pairs()),
            run.elapsed_time,
        )
        return mapping

    def train_models(
        self,
        tfidf: TfidfModel,
        corpus: Corpus,
        training_sets: TrainingSets,
        hp: Hyperparams,
    ) -> LogRegModel:
        """Parallel counterpart of `sdg.classifier.train`."""
        features = tfidf.transform(corpus)
        row_of = {rid: i for i, rid in enumerate(corpus.ids)}
        sdgs = sorted(training_sets.sets)
        run = self.execute(
            sdgs,
            process_training_task,
            (None, None, features, row_of, training_sets, hp),
        )
        fitted: dict[int, BinaryModel] = dict(run.results)
        return collect_models(tfidf, training_sets, fitted, hp)
