"""
Worker state and task processing.

This module handles the multiprocessing worker state and the two task
kinds: running one query-bank entry and fitting one per-SDG model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from scipy import sparse

from sdg.classifier import BinaryModel, Hyperparams, TrainingSets, fit_sdg
from sdg.corpus import Corpus, InvertedIndex
from sdg.query_dsl import QueryBank
from sdg.query_engine import evaluate_entry


@dataclass
class WorkerState:
    """
    State maintained by each worker process.

    Attributes:
        target: Index (or corpus, for the naive scan) queries run against
        bank: Query bank whose entries are addressed by task index
        features: TF-IDF matrix of the whole corpus
        row_of: record id -> row of `features`
        training_sets: Labelled sets addressed by SDG
        hyperparams: Optimisation settings
    """

    target: InvertedIndex | Corpus | None = None
    bank: QueryBank | None = None
    features: sparse.csr_matrix | None = None
    row_of: Mapping[str, int] = field(default_factory=dict)
    training_sets: TrainingSets | None = None
    hyperparams: Hyperparams | None = None


# Global worker state (set by init_worker)
_WORKER_STATE: WorkerState | None = None


def init_worker(
    target: InvertedIndex | Corpus | None = None,
    bank: QueryBank | None = None,
    features: sparse.csr_matrix | None = None,
    row_of: Mapping[str, int] | None = None,
    training_sets: TrainingSets | None = None,
    hyperparams: Hyperparams | None = None,
) -> None:
    """
    Initialize worker process state.

    This is called once per worker process when the multiprocessing
    pool is created, and once in-process for single-process runs.
    """
    global _WORKER_STATE

    _WORKER_STATE = WorkerState(
        target=target,
        bank=bank,
        features=features,
        row_of=dict(row_of or {}),
        training_sets=training_sets,
        hyperparams=hyperparams,
    )


def process_query_task(i: int) -> tuple[int, list[str]]:
    """
    Run bank entry `i`.

    Returns:
        (i, sorted ids of matched records)
    """
    assert _WORKER_STATE is not None, "Worker not initialized"
    state = _WORKER_STATE
    assert state.bank is not None and state.target is not None

    entry = state.bank.entries[i]
    return i, sorted(evaluate_entry(entry.query, state.target))


def process_training_task(sdg: int) -> tuple[int, BinaryModel]:
    """Fit the binary model of one SDG."""
    assert _WORKER_STATE is not None, "Worker not initialized"
    state = _WORKER_STATE
    assert state.training_sets is not None and state.features is not None

    labeled = state.training_sets.sets[sdg]
    hp = state.hyperparams or Hyperparams()
    return sdg, fit_sdg(sdg, state.features, state.row_of, labeled, hp)
