"""In-memory and on-disk data model: ego networks, user-word content, questions.

File formats
------------
network  TSV ``from_id<TAB>to_id``; ``#`` lines are comments.
content  TSV ``user_id<TAB>word<TAB>count``.
questions  JSON lines with ``id``, ``words`` and ``accepted``.

User 0 is always the asker; users ``1..m`` are the asker's connections.
"""

from __future__ import annotations

import json
import math
import re
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Optional

import numpy as np

from .errors import InputError
from .linalg import SparseMatrix

__all__ = [
    "EgoNetwork",
    "Vocabulary",
    "UserWordMatrix",
    "Question",
    "QAInstance",
    "preprocess_text",
    "smoothed_idf",
    "load_ego_network",
    "build_user_word_matrix",
    "read_network",
    "read_content",
    "read_questions",
    "write_network",
    "write_content",
    "write_questions",
    "load_instance",
]

DEFAULT_MIN_DF = 2

_TOKEN = re.compile(r"[^\W_]+")


def preprocess_text(raw: str, stopwords: Iterable[str] = (), stemmer: Optional[Callable[[str], str]] = None):
    """Lowercase, split on non-alphanumerics, drop stopwords and 1-char tokens.

    ``stemmer`` is applied to surviving tokens when given; stemming is off by
    default.
    """
    stop = {w.lower() for w in stopwords}
    tokens = []
    for tok in _TOKEN.findall(raw.lower()):
        if tok in stop or len(tok) < 2:
            continue
        if stemmer is not None:
            tok = stemmer(tok)
            if len(tok) < 2:
                continue
        tokens.append(tok)
    return tokens


@dataclass(frozen=True, eq=False)
class EgoNetwork:
    """Binary directed adjacency: entry (i, j) means an edge from user j to user i."""

    matrix: SparseMatrix

    def __post_init__(self):
        n = self.matrix
        if n.shape[0] != n.shape[1]:
            raise InputError(f"ego network must be square, got {n.shape}")
        if n.nnz and not np.all(n.data == 1.0):
            raise InputError("ego network entries must all be 1")
        if n.nnz and np.any(n.row_ids() == n.indices):
            raise InputError("ego network must not contain self-loops")

    @property
    def size(self):
        return self.matrix.shape[0]

    @property
    def m(self):
        return self.size - 1

    def edges(self):
        """Sorted list of ``(from_id, to_id)`` records."""
        return sorted(zip(self.matrix.indices.tolist(), self.matrix.row_ids().tolist()))

    def has_edge(self, src, dst):
        row = slice(self.matrix.indptr[dst], self.matrix.indptr[dst + 1])
        return bool(np.any(self.matrix.indices[row] == src))


def load_ego_network(edge_records, m: int) -> EgoNetwork:
    """Build the ``(m+1) x (m+1)`` adjacency from ``(from, to)`` records.

    Duplicates collapse to one entry and self-loops are dropped.
    """
    size = m + 1
    rows, cols = [], []
    for rec in edge_records:
        src, dst = rec
        if not (0 <= src < size and 0 <= dst < size):
            raise InputError(f"edge record (from {src}, to {dst}) out of range for m={m}")
        if src == dst:
            continue
        rows.append(dst)
        cols.append(src)
    mat = SparseMatrix.from_entries(rows, cols, np.ones(len(rows)), (size, size), duplicates="max")
    return EgoNetwork(mat)


@dataclass(frozen=True, eq=False)
class Vocabulary:
    words: tuple
    df: tuple

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        object.__setattr__(self, "df", tuple(int(d) for d in self.df))
        if len(self.words) != len(self.df):
            raise InputError("words and df lengths differ")
        if len(set(self.words)) != len(self.words):
            raise InputError("vocabulary words must be distinct")
        if any(d < 1 for d in self.df):
            raise InputError("document frequencies must be >= 1")

    @cached_property
    def index(self) -> dict:
        return {w: i for i, w in enumerate(self.words)}

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.words == other.words and self.df == other.df

    def __hash__(self):
        return hash((self.words, self.df))

    def dumps(self):
        return "".join(f"{w}\t{d}\n" for w, d in zip(self.words, self.df))

    @classmethod
    def loads(cls, text):
        words, df = [], []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                w, d = line.split("\t")
                words.append(w)
                df.append(int(d))
            except ValueError as exc:
                raise InputError(f"vocabulary line {lineno}: {line!r}") from exc
        return cls(tuple(words), tuple(df))


@dataclass(frozen=True, eq=False)
class UserWordMatrix:
    """Count x idf weighted user-word matrix plus the raw counts it came from."""

    matrix: SparseMatrix
    counts: SparseMatrix

    @property
    def shape(self):
        return self.matrix.shape


def smoothed_idf(df, n_users):
    """``ln((1 + n_users) / (1 + df)) + 1``; equals 1 when every user has the word."""
    return math.log((1 + n_users) / (1 + df)) + 1.0


def build_user_word_matrix(
    per_user_counts: Mapping[int, Mapping[str, int]],
    n_users: Optional[int] = None,
    min_df: int = DEFAULT_MIN_DF,
):
    """Weight counts by smoothed idf over the ``n_users = m + 1`` users.

    Returns ``(UserWordMatrix, Vocabulary)`` with lexicographic column order.
    Users without retained words get all-zero rows.
    """
    if n_users is None:
        n_users = max(per_user_counts, default=-1) + 1
    df = defaultdict(int)
    for user, counts in per_user_counts.items():
        if not 0 <= user < n_users:
            raise InputError(f"user id {user} out of range for {n_users} users")
        for word, c in counts.items():
            if not (isinstance(c, (int, np.integer)) and c > 0):
                raise InputError(f"count for user {user}, word {word!r} must be a positive integer")
            df[word] += 1
    words = sorted(w for w, d in df.items() if d >= min_df)
    if not words:
        raise InputError(f"empty vocabulary after min_df={min_df} filtering")
    vocab = Vocabulary(tuple(words), tuple(df[w] for w in words))
    idf = np.array([smoothed_idf(d, n_users) for d in vocab.df])
    rows, cols, vals = [], [], []
    index = vocab.index
    for user in sorted(per_user_counts):
        for word, c in per_user_counts[user].items():
            j = index.get(word)
            if j is not None:
                rows.append(user)
                cols.append(j)
                vals.append(float(c))
    shape = (n_users, len(vocab))
    counts = SparseMatrix.from_entries(rows, cols, vals, shape)
    weighted = SparseMatrix(shape, counts.indptr, counts.indices, counts.data * idf[counts.indices])
    return UserWordMatrix(weighted, counts), vocab


@dataclass(frozen=True)
class Question:
    id: str
    words: tuple
    accepted: frozenset = field(default_factory=frozenset)
    asker: int = 0

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        object.__setattr__(self, "accepted", frozenset(int(a) for a in self.accepted))
        if not self.words:
            raise InputError(f"question {self.id!r} has no words")
        if 0 in self.accepted:
            raise InputError(f"question {self.id!r}: the asker cannot be an accepted answerer")

    def to_json(self):
        return json.dumps(
            {"id": self.id, "words": list(self.words), "accepted": sorted(self.accepted)},
            ensure_ascii=False,
        )


@dataclass(frozen=True, eq=False)
class QAInstance:
    """Everything one evaluation run consumes for a single asker."""

    network: EgoNetwork
    content: UserWordMatrix
    vocabulary: Vocabulary
    questions: tuple

    def __post_init__(self):
        object.__setattr__(self, "questions", tuple(self.questions))
        if self.content.shape[0] != self.network.size:
            raise InputError("content and network disagree on the number of users")
        for q in self.questions:
            if not q.accepted:
                raise InputError(f"question {q.id!r} has no accepted answerers")
            if max(q.accepted) > self.m:
                raise InputError(f"question {q.id!r} accepts a user outside 1..{self.m}")

    @property
    def m(self):
        return self.network.m


# ---------------------------------------------------------------- file io


def _data_lines(fp, path):
    for lineno, line in enumerate(fp, start=1):
        line = line.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield lineno, line


def _parse_int(tok, path, lineno):
    try:
        return int(tok)
    except ValueError:
        raise InputError(f"{path}:{lineno}: expected an integer, got {tok!r}") from None


def read_network(path):
    """Return the list of ``(from_id, to_id)`` records in a network TSV."""
    records = []
    with open(path, encoding="utf-8") as fp:
        for lineno, line in _data_lines(fp, path):
            parts = line.split("\t")
            if len(parts) != 2:
                raise InputError(f"{path}:{lineno}: expected 2 tab-separated fields")
            src, dst = (_parse_int(t.strip(), path, lineno) for t in parts)
            if src < 0 or dst < 0:
                raise InputError(f"{path}:{lineno}: negative user id")
            records.append((src, dst))
    return records


def read_content(path):
    """Return ``{user_id: {word: count}}`` from a content TSV."""
    counts = defaultdict(dict)
    with open(path, encoding="utf-8") as fp:
        for lineno, line in _data_lines(fp, path):
            parts = line.split("\t")
            if len(parts) != 3:
                raise InputError(f"{path}:{lineno}: expected 3 tab-separated fields")
            user = _parse_int(parts[0].strip(), path, lineno)
            count = _parse_int(parts[2].strip(), path, lineno)
            if user < 0 or count <= 0:
                raise InputError(f"{path}:{lineno}: user id must be >= 0 and count > 0")
            word = parts[1]
            counts[user][word] = counts[user].get(word, 0) + count
    return dict(counts)


def read_questions(path):
    questions = []
    with open(path, encoding="utf-8") as fp:
        for lineno, line in enumerate(fp, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                q = Question(str(obj["id"]), tuple(obj["words"]), frozenset(obj["accepted"]))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise InputError(f"{path}:{lineno}: bad question record ({exc})") from None
            except InputError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
            questions.append(q)
    return questions


def write_network(path, network: EgoNetwork):
    with open(path, "w", encoding="utf-8", newline="\n") as fp:
        fp.write("# from_id\tto_id\n")
        for src, dst in network.edges():
            fp.write(f"{src}\t{dst}\n")


def write_content(path, per_user_counts: Mapping[int, Mapping[str, int]]):
    with open(path, "w", encoding="utf-8", newline="\n") as fp:
        for user in sorted(per_user_counts):
            for word in sorted(per_user_counts[user]):
                fp.write(f"{user}\t{word}\t{per_user_counts[user][word]}\n")


def write_questions(path, questions):
    with open(path, "w", encoding="utf-8", newline="\n") as fp:
        for q in questions:
            fp.write(q.to_json() + "\n")


def load_instance(network_path, content_path, questions_path=None, min_df=DEFAULT_MIN_DF, n_users=None):
    """Read the three instance files into a :class:`QAInstance`.

    The user count defaults to one more than the largest id mentioned in any
    of the files.
    """
    records = read_network(network_path)
    counts = read_content(content_path)
    questions = read_questions(questions_path) if questions_path else []
    if n_users is None:
        ids = [max(r) for r in records] + list(counts)
        ids += [max(q.accepted) for q in questions if q.accepted]
        n_users = max(ids, default=0) + 1
    network = load_ego_network(records, n_users - 1)
    content, vocab = build_user_word_matrix(counts, n_users, min_df)
    return QAInstance(network, content, vocab, tuple(questions))
