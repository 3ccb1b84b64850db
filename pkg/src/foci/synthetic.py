"""Planted-foci benchmark instances.

Users are split into equal communities, user 0 (the asker) belonging to
community 0. Edges follow a directed planted-partition model and each
community owns a disjoint block of topic words.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .data import (
    EgoNetwork,
    Question,
    UserWordMatrix,
    Vocabulary,
    build_user_word_matrix,
    load_ego_network,
)
from .errors import ContractError, GenerationError

__all__ = ["SyntheticSpec", "SyntheticInstance", "generate_synthetic", "community_of", "topic_word"]


@dataclass(frozen=True)
class SyntheticSpec:
    communities: int = 5
    community_size: int = 20
    p_in: float = 0.3
    p_out: float = 0.02
    topic_words: int = 20
    in_rate: float = 2.0
    off_rate: float = 0.1
    questions_per_topic: int = 4
    question_length: int = 4
    # False: every word drawn at the pooled mean rate, so content carries no community signal
    informative_content: bool = True
    min_df: int = 2
    max_retries: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.communities < 2:
            raise ContractError("need at least 2 communities")
        if self.community_size < 1 or self.topic_words < 1:
            raise ContractError("community_size and topic_words must be >= 1")
        if not (0 <= self.p_out < self.p_in <= 1):
            raise ContractError("need 0 <= p_out < p_in <= 1")
        if not (0 < self.off_rate < self.in_rate):
            raise ContractError("need 0 < off_rate < in_rate")
        if self.questions_per_topic < 0 or self.question_length < 1:
            raise ContractError("bad question settings")
        if self.question_length > self.topic_words:
            raise ContractError("question_length cannot exceed topic_words")

    @property
    def n_users(self):
        return self.communities * self.community_size

    def to_dict(self):
        return asdict(self)


class SyntheticInstance(NamedTuple):
    network: EgoNetwork
    content: UserWordMatrix
    vocabulary: Vocabulary
    questions: list
    counts: dict


def community_of(user, spec: SyntheticSpec):
    return user // spec.community_size


def topic_word(topic, j):
    return f"t{topic}w{j:03d}"


def _draw_edges(rng, labels, p_in, p_out):
    n = len(labels)
    same = labels[:, None] == labels[None, :]
    prob = np.where(same, p_in, p_out)
    adj = rng.random((n, n)) < prob
    np.fill_diagonal(adj, False)
    dst, src = np.nonzero(adj)
    return list(zip(src.tolist(), dst.tolist()))


def _draw_counts(rng, labels, spec):
    c, t = spec.communities, spec.topic_words
    word_topic = np.repeat(np.arange(c), t)
    if spec.informative_content:
        rates = np.where(labels[:, None] == word_topic[None, :], spec.in_rate, spec.off_rate)
    else:
        mean = (spec.in_rate + (c - 1) * spec.off_rate) / c
        rates = np.full((len(labels), c * t), mean)
    draws = rng.poisson(rates)
    counts = {}
    for user in range(len(labels)):
        cols = np.nonzero(draws[user])[0]
        if len(cols):
            counts[user] = {topic_word(word_topic[j], j % t): int(draws[user, j]) for j in cols}
    return counts


def generate_synthetic(spec: SyntheticSpec) -> SyntheticInstance:
    """Draw a planted-foci instance; a pure function of ``spec`` (including its seed).

    Every question takes its words from one topic block and accepts the
    asker's community members that link to the asker. A draw in which that
    set is empty is discarded and redrawn, at most ``spec.max_retries`` times.
    """
    rng = np.random.default_rng(spec.seed)
    labels = np.arange(spec.n_users) // spec.community_size
    for _ in range(spec.max_retries + 1):
        edges = _draw_edges(rng, labels, spec.p_in, spec.p_out)
        network = load_ego_network(edges, spec.n_users - 1)
        accepted = frozenset(
            f for f in range(1, spec.community_size) if network.has_edge(f, 0)
        )
        counts = _draw_counts(rng, labels, spec)
        if not accepted and spec.questions_per_topic:
            continue
        content, vocab = build_user_word_matrix(counts, spec.n_users, spec.min_df)
        questions = []
        for topic in range(spec.communities):
            for qi in range(spec.questions_per_topic):
                picks = rng.choice(spec.topic_words, size=spec.question_length, replace=False)
                words = tuple(topic_word(topic, int(j)) for j in sorted(picks))
                questions.append(Question(f"q{topic}-{qi}", words, accepted))
        return SyntheticInstance(network, content, vocab, questions, counts)
    raise GenerationError(
        f"no candidate answerers after {spec.max_retries} retries (seed {spec.seed})"
    )
