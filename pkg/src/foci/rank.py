"""Score the asker's connections by shared foci inside a question's domain."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, OutOfVocabularyError

__all__ = [
    "SimilarityMetric",
    "RankedList",
    "question_domain",
    "project_membership",
    "similarity",
    "rank_by_scores",
    "rank_answerers",
]


class SimilarityMetric(str, enum.Enum):
    COSINE = "cosine"
    PCC = "pcc"
    EUCLIDEAN = "euclidean"


@dataclass(frozen=True)
class RankedList:
    """Candidates ``(user, score)`` sorted by descending score, ties by ascending id."""

    entries: tuple

    @property
    def users(self):
        return [u for u, _ in self.entries]

    @property
    def scores(self):
        return [s for _, s in self.entries]

    def __len__(self):
        return len(self.entries)

    def position(self, user):
        """1-based rank of ``user``."""
        return self.users.index(user) + 1

    def to_tsv(self):
        return "".join(
            f"{rank}\t{user}\t{score:.9g}\n" for rank, (user, score) in enumerate(self.entries, 1)
        )


def rank_by_scores(users, scores) -> RankedList:
    order = sorted(zip(users, scores), key=lambda us: (-us[1], us[0]))
    return RankedList(tuple((int(u), float(s)) for u, s in order))


def question_domain(P, vocab, words) -> np.ndarray:
    """Sum of P's rows for the in-vocabulary question words (repeats count twice)."""
    P = np.asarray(P, dtype=np.float64)
    if P.shape[0] != len(vocab):
        raise ContractError(f"P has {P.shape[0]} rows but vocabulary has {len(vocab)} words")
    rows = [vocab.index[w] for w in words if w in vocab.index]
    if not rows:
        raise OutOfVocabularyError(f"no question word in vocabulary: {list(words)!r}")
    return P[rows].sum(axis=0)


def project_membership(u_row, d) -> np.ndarray:
    u_row = np.asarray(u_row, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if u_row.shape != d.shape:
        raise ContractError(f"length mismatch: {u_row.shape} vs {d.shape}")
    return u_row * d


def similarity(a, b, metric) -> float:
    """Larger is more similar. Degenerate inputs (zero norm / zero variance) score 0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ContractError(f"length mismatch: {a.shape} vs {b.shape}")
    metric = SimilarityMetric(metric)
    if metric is SimilarityMetric.EUCLIDEAN:
        return float(1.0 / (1.0 + np.linalg.norm(a - b)))
    if metric is SimilarityMetric.PCC:
        a = a - a.mean()
        b = b - b.mean()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def rank_answerers(question, F, vocab, metric) -> RankedList:
    """Rank users ``1..m`` by ``sim(U_0 * d_q, U_f * d_q)``."""
    d = question_domain(F.P, vocab, question.words)
    projected = np.asarray(F.U) * d
    users = range(1, F.U.shape[0])
    return rank_by_scores(users, [similarity(projected[0], g, metric) for g in projected[1:]])
