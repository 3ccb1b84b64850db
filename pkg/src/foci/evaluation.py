"""Ranking metrics, baselines and the alpha/beta sweep harness."""

from __future__ import annotations

import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from .data import QAInstance, Question
from .errors import ContractError, EvaluationError, FociError, OutOfVocabularyError
from .rank import RankedList, rank_answerers, rank_by_scores, similarity
from .solver import HyperParams, fit

__all__ = [
    "EvalReport",
    "SweepGrid",
    "reciprocal_rank",
    "average_precision_at_k",
    "ndcg_at_k",
    "evaluate",
    "baseline_random",
    "random_ranker",
    "model_ranker",
    "baseline_shared_foci",
    "sweep",
    "DEFAULT_ALPHAS",
    "DEFAULT_BETAS",
]

DEFAULT_ALPHAS = (0.1, 1.0, 10.0)
DEFAULT_BETAS = (0.0, 0.1, 1.0, 10.0)

Ranker = Callable[[Question], RankedList]


def _check_accepted(accepted):
    if not accepted:
        raise ContractError("accepted set must be non-empty")


def _hits(ranked, accepted):
    users = ranked.users if isinstance(ranked, RankedList) else list(ranked)
    return [u in accepted for u in users]


def reciprocal_rank(ranked, accepted) -> float:
    _check_accepted(accepted)
    for i, hit in enumerate(_hits(ranked, accepted), start=1):
        if hit:
            return 1.0 / i
    return 0.0


def average_precision_at_k(ranked, accepted, k_cutoff: int) -> float:
    """Sum of precision@i over hits in the top ``k_cutoff``, over ``min(k_cutoff, |accepted|)``."""
    _check_accepted(accepted)
    if k_cutoff < 1:
        raise ContractError("k_cutoff must be >= 1")
    found = 0
    total = 0.0
    for i, hit in enumerate(_hits(ranked, accepted)[:k_cutoff], start=1):
        if hit:
            found += 1
            total += found / i
    return total / min(k_cutoff, len(accepted))


def ndcg_at_k(ranked, accepted, k_cutoff: int) -> float:
    """Binary-gain NDCG with a ``1 / log2(i + 1)`` discount."""
    _check_accepted(accepted)
    if k_cutoff < 1:
        raise ContractError("k_cutoff must be >= 1")
    dcg = sum(
        1.0 / math.log2(i + 1)
        for i, hit in enumerate(_hits(ranked, accepted)[:k_cutoff], start=1)
        if hit
    )
    ideal = sum(1.0 / math.log2(i + 1) for i in range(1, min(k_cutoff, len(accepted)) + 1))
    return dcg / ideal


@dataclass
class EvalReport:
    method: str
    mrr: float
    map_at_k: float
    ndcg_at_k: float
    k_cutoff: int
    questions_evaluated: int
    questions_skipped: int = 0

    def to_dict(self):
        return {
            "method": self.method,
            "mrr": self.mrr,
            "map_at_k": self.map_at_k,
            "ndcg_at_k": self.ndcg_at_k,
            "k_cutoff": self.k_cutoff,
            "questions_evaluated": self.questions_evaluated,
            "questions_skipped": self.questions_skipped,
        }


def evaluate(instance, ranker: Ranker, k_cutoff: int = 5, method: str = "model") -> EvalReport:
    """Macro-average RR, AP@k and NDCG@k over the instance's questions.

    ``instance`` is a :class:`QAInstance` or any iterable of questions.
    Questions the ranker rejects as out-of-vocabulary are skipped and counted.
    Questions are visited in id order, so the result does not depend on file order.
    """
    questions = instance.questions if isinstance(instance, QAInstance) else list(instance)
    rr, ap, nd = [], [], []
    skipped = 0
    for q in sorted(questions, key=lambda q: q.id):
        try:
            ranked = ranker(q)
        except OutOfVocabularyError:
            skipped += 1
            continue
        rr.append(reciprocal_rank(ranked, q.accepted))
        ap.append(average_precision_at_k(ranked, q.accepted, k_cutoff))
        nd.append(ndcg_at_k(ranked, q.accepted, k_cutoff))
    if not rr:
        raise EvaluationError(f"{method}: no evaluable questions ({skipped} skipped)")
    return EvalReport(
        method,
        float(np.mean(rr)),
        float(np.mean(ap)),
        float(np.mean(nd)),
        k_cutoff,
        len(rr),
        skipped,
    )


def baseline_random(question: Question, m: int, trials: int = 100, seed: int = 0) -> RankedList:
    """Order candidates by their mean position over ``trials`` uniform shuffles.

    The score of a candidate is its negated mean (1-based) position.
    """
    if m < 1:
        raise ContractError("need at least one candidate")
    if trials < 1:
        raise ContractError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    perms = np.argsort(rng.random((trials, m)), axis=1)
    positions = np.empty_like(perms)
    rows = np.arange(trials)[:, None]
    positions[rows, perms] = np.arange(1, m + 1)
    mean_pos = positions.mean(axis=0)
    return rank_by_scores(range(1, m + 1), -mean_pos)


def random_ranker(m: int, trials: int = 100, seed: int = 0) -> Ranker:
    """Random baseline with an independent, id-derived stream per question."""

    def ranker(q):
        stream = np.random.SeedSequence([seed, zlib.crc32(q.id.encode("utf-8"))])
        return baseline_random(q, m, trials, stream)

    return ranker


def model_ranker(instance: QAInstance, H: HyperParams, metric, factors=None) -> Ranker:
    """Fit (unless ``factors`` is given) and rank each question in its domain."""
    if factors is None:
        factors, _ = fit(instance.content, instance.network, H)

    def ranker(q):
        return rank_answerers(q, factors, instance.vocabulary, metric)

    return ranker


def baseline_shared_foci(instance: QAInstance, mode: str, H: HyperParams, metric) -> Ranker:
    """Question-blind ranking by similarity of full membership rows.

    ``mode="network"`` fits with alpha=0, ``mode="content"`` with beta=0.
    """
    if mode == "network":
        h = H.with_(alpha=0.0, beta=H.beta or 1.0)
    elif mode == "content":
        h = H.with_(beta=0.0, alpha=H.alpha or 1.0)
    else:
        raise ContractError(f"mode must be 'network' or 'content', got {mode!r}")
    factors, _ = fit(instance.content, instance.network, h)
    u = factors.U
    ranked = rank_by_scores(range(1, u.shape[0]), [similarity(u[0], row, metric) for row in u[1:]])
    return lambda q: ranked


@dataclass
class SweepGrid:
    alphas: list
    betas: list
    k_cutoff: int
    metric: str
    cells: dict = field(default_factory=dict)  # (alpha, beta) -> metrics dict or {"error": ...}

    def to_dict(self):
        return {
            "method": f"foci-{self.metric}",
            "k_cutoff": self.k_cutoff,
            "alphas": list(self.alphas),
            "betas": list(self.betas),
            "cells": [
                {"alpha": a, "beta": b, "metrics": self.cells[(a, b)]}
                for a in self.alphas
                for b in self.betas
            ],
        }


def _sweep_cell(instance, a, b, H, metric, k_cutoff):
    try:
        h = H.with_(alpha=a, beta=b)
        report = evaluate(instance, model_ranker(instance, h, metric), k_cutoff, f"alpha={a},beta={b}")
    except FociError as exc:
        return {"error": f"{type(exc).__name__}: {exc}"}
    d = report.to_dict()
    del d["method"], d["k_cutoff"]
    return d


def sweep(
    instance: QAInstance,
    alphas: Iterable[float],
    betas: Iterable[float],
    H: HyperParams,
    metric,
    k_cutoff: int = 5,
    jobs: int = 1,
) -> SweepGrid:
    """Fit and evaluate every (alpha, beta) cell with the same seed.

    A failing cell records its error instead of aborting the sweep.
    """
    alphas = [float(a) for a in alphas]
    betas = [float(b) for b in betas]
    if not alphas or not betas:
        raise ContractError("sweep grids must be non-empty")
    pairs = [(a, b) for a in alphas for b in betas]
    run = lambda ab: _sweep_cell(instance, ab[0], ab[1], H, metric, k_cutoff)  # noqa: E731
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, pairs))
    else:
        results = [run(ab) for ab in pairs]
    metric_name = getattr(metric, "value", metric)
    return SweepGrid(alphas, betas, k_cutoff, metric_name, dict(zip(pairs, results)))
