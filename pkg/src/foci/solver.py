"""Joint content/network factorization with square-root multiplicative updates.

The model approximates the user-word matrix ``S ~ U P^T`` and the ego network
``N ~ U V U^T`` with shared non-negative memberships ``U``::

    J = alpha ||S - U P^T||^2 + beta ||N - U V U^T||^2
        + gamma (||U||^2 + ||V||^2 + ||P||^2)

One update sweep rescales U, then V and P against the new U.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import ContractError, InputError, NumericError
from .linalg import (
    SparseMatrix,
    as_sparse,
    frobenius_norm_sq,
    gram,
    grouped_tri_products,
    spmm,
    spmm_t,
)

__all__ = [
    "HyperParams",
    "FactorSet",
    "FitTrace",
    "ObjectiveParts",
    "init_factors",
    "objective_parts",
    "objective",
    "gradients",
    "update_step",
    "fit",
    "dump_factors",
    "load_factors",
]

INIT_LOW = 0.01
INIT_HIGH = 1.01


@dataclass(frozen=True)
class HyperParams:
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 0.01
    k: int = 50
    max_iters: int = 300
    tol: float = 1e-6
    eps: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ContractError("alpha and beta must be >= 0")
        if self.alpha == 0 and self.beta == 0:
            raise ContractError("alpha and beta cannot both be 0")
        if not self.gamma > 0:
            raise ContractError("gamma must be > 0")
        if self.k < 1 or self.max_iters < 1:
            raise ContractError("k and max_iters must be >= 1")
        if not self.tol > 0 or not self.eps > 0:
            raise ContractError("tol and eps must be > 0")

    def with_(self, **changes) -> "HyperParams":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class FactorSet:
    """Non-negative latent factors: U is (m+1) x k, V is k x k, P is w x k."""

    U: np.ndarray
    V: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        mats = [np.array(x, dtype=np.float64) for x in (self.U, self.V, self.P)]
        u, v, p = mats
        if u.ndim != 2 or v.ndim != 2 or p.ndim != 2:
            raise ContractError("factors must be 2-d")
        k = u.shape[1]
        if v.shape != (k, k) or p.shape[1] != k:
            raise ContractError(f"inconsistent factor shapes {u.shape}, {v.shape}, {p.shape}")
        for name, x in zip("UVP", mats):
            x.flags.writeable = False
            object.__setattr__(self, name, x)

    @property
    def k(self):
        return self.U.shape[1]

    @property
    def n_users(self):
        return self.U.shape[0]

    @property
    def n_words(self):
        return self.P.shape[0]

    def is_nonnegative(self):
        return bool((self.U >= 0).all() and (self.V >= 0).all() and (self.P >= 0).all())

    def equals(self, other: "FactorSet") -> bool:
        return all(np.array_equal(a, b) for a, b in zip(self.arrays(), other.arrays()))

    def arrays(self):
        return self.U, self.V, self.P


@dataclass
class FitTrace:
    objective: list = field(default_factory=list)
    iterations: int = 0
    stop_reason: str = "max_iters"

    def to_dict(self):
        return {
            "objective": list(self.objective),
            "iterations": self.iterations,
            "stop_reason": self.stop_reason,
        }


class ObjectiveParts(NamedTuple):
    content: float  # ||S - U P^T||^2
    network: float  # ||N - U V U^T||^2
    regularizer: float  # ||U||^2 + ||V||^2 + ||P||^2

    def combine(self, h: HyperParams) -> float:
        return h.alpha * self.content + h.beta * self.network + h.gamma * self.regularizer


def init_factors(n_users, n_words, k, seed) -> FactorSet:
    """Draw U, V, P (in that order) i.i.d. uniform on (0.01, 1.01)."""
    rng = np.random.default_rng(seed)
    u = rng.uniform(INIT_LOW, INIT_HIGH, size=(n_users, k))
    v = rng.uniform(INIT_LOW, INIT_HIGH, size=(k, k))
    p = rng.uniform(INIT_LOW, INIT_HIGH, size=(n_words, k))
    return FactorSet(u, v, p)


def _check_dims(s: SparseMatrix, n: SparseMatrix, f: FactorSet):
    users = n.shape[0]
    if n.shape != (users, users):
        raise ContractError(f"N must be square, got {n.shape}")
    if s.shape[0] != users:
        raise ContractError(f"S has {s.shape[0]} rows but N has {users}")
    if f.U.shape[0] != users:
        raise ContractError(f"U has {f.U.shape[0]} rows, expected {users}")
    if f.P.shape[0] != s.shape[1]:
        raise ContractError(f"P has {f.P.shape[0]} rows, expected {s.shape[1]}")


def objective_parts(S, N, F: FactorSet) -> ObjectiveParts:
    """Unweighted content, network, and regularizer terms.

    The data terms are expanded around the stored entries, e.g.
    ``||S - U P^T||^2 = ||S||^2 - 2 <S, U P^T> + <U^T U, P^T P>``, so neither
    ``S`` nor ``N`` is ever densified.
    """
    s, n = as_sparse(S), as_sparse(N)
    _check_dims(s, n, F)
    u, v, p = F.arrays()
    g = gram(u)
    cross_s = float(np.sum(spmm(s, p) * u))
    content = frobenius_norm_sq(s) - 2.0 * cross_s + float(np.sum(g * gram(p)))
    cross_n = float(np.sum(spmm(n, u @ v.T) * u))
    network = frobenius_norm_sq(n) - 2.0 * cross_n + float(np.sum((g @ v @ g) * v))
    reg = frobenius_norm_sq(u) + frobenius_norm_sq(v) + frobenius_norm_sq(p)
    # cancellation can leave a tiny negative residual at an exact fit
    return ObjectiveParts(max(content, 0.0), max(network, 0.0), reg)


def objective(S, N, F: FactorSet, H: HyperParams) -> float:
    return objective_parts(S, N, F).combine(H)


def gradients(S, N, F: FactorSet, H: HyperParams):
    """Gradients of the objective with respect to U, V, P."""
    s, n = as_sparse(S), as_sparse(N)
    _check_dims(s, n, F)
    u, v, p = F.arrays()
    a, b, c = H.alpha, H.beta, H.gamma
    tri = grouped_tri_products(n, u, v)
    g = gram(u)
    du = 2.0 * (
        a * (-spmm(s, p) + u @ gram(p))
        + b * (-tri.nt_u_v - tri.n_u_vt + tri.u_v_g_vt + tri.u_vt_g_v)
        + c * u
    )
    dv = 2.0 * (b * (-tri.ut_n_u + tri.g_v_g) + c * v)
    dp = 2.0 * (a * (-spmm_t(s, u) + p @ g) + c * p)
    return du, dv, dp


def _scale(x, num, den, eps):
    return x * np.sqrt(num / np.maximum(den, eps))


def update_step(S, N, F: FactorSet, H: HyperParams) -> FactorSet:
    """One square-root multiplicative sweep: U, then V, then P.

    V and P are rescaled against the already-updated U. Updating all three
    from the sweep-start values overshoots on network-dominated problems.
    """
    s, n = as_sparse(S), as_sparse(N)
    _check_dims(s, n, F)
    if not F.is_nonnegative():
        raise ContractError("update_step requires non-negative factors")
    u, v, p = F.arrays()
    a, b, c = H.alpha, H.beta, H.gamma

    tri = grouped_tri_products(n, u, v)
    num_u = b * (tri.nt_u_v + tri.n_u_vt)
    den_u = b * (tri.u_v_g_vt + tri.u_vt_g_v) + c * u
    if a:
        num_u = num_u + a * spmm(s, p)
        den_u = den_u + a * (u @ gram(p))
    u = _scale(u, num_u, den_u, H.eps)

    if b:
        g = gram(u)
        v = _scale(v, b * (u.T @ spmm(n, u)), b * (g @ v @ g) + c * v, H.eps)
    if a:
        p = _scale(p, a * spmm_t(s, u), a * (p @ gram(u)) + c * p, H.eps)
    return FactorSet(u, v, p)


def fit(
    S,
    N,
    H: HyperParams,
    init: Optional[FactorSet] = None,
    callback: Optional[Callable[[int, FactorSet, FactorSet], None]] = None,
):
    """Run multiplicative updates until the relative objective change drops below ``H.tol``.

    Parameters
    ----------
    S, N : SparseMatrix or coercible
        User-word matrix ``(m+1) x w`` and ego network ``(m+1) x (m+1)``.
    H : HyperParams
    init : FactorSet, optional
        Starting factors; drawn from :func:`init_factors` with ``H.seed`` when absent.
    callback : callable, optional
        Called as ``callback(iteration, before, after)`` after every update.

    Returns
    -------
    (FactorSet, FitTrace)
    """
    s, n = as_sparse(S), as_sparse(N)
    f = init if init is not None else init_factors(s.shape[0], s.shape[1], H.k, H.seed)
    _check_dims(s, n, f)
    trace = FitTrace()
    with np.errstate(over="ignore", invalid="ignore"):
        prev = objective(s, n, f, H)
    if not math.isfinite(prev):
        raise NumericError("non-finite objective at initialization", 0)
    trace.objective.append(prev)
    for it in range(1, H.max_iters + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            nxt = update_step(s, n, f, H)
            cur = objective(s, n, nxt, H)
        if not math.isfinite(cur) or not all(np.isfinite(x).all() for x in nxt.arrays()):
            raise NumericError(f"non-finite objective at iteration {it}", it)
        if callback is not None:
            callback(it, f, nxt)
        f = nxt
        trace.objective.append(cur)
        trace.iterations = it
        if abs(cur - prev) / max(prev, H.eps) < H.tol:
            trace.stop_reason = "converged"
            break
        prev = cur
    return f, trace


def _write_block(out, x):
    for row in x:
        out.write(" ".join(repr(float(val)) for val in row))
        out.write("\n")


def dump_factors(F: FactorSet, fp=None):
    """Serialize as a ``k m w`` header followed by U, V, P rows.

    ``m`` is the number of connections, so U has ``m + 1`` rows. Values use
    Python's shortest round-trip float repr. Returns the text when ``fp`` is None.
    """
    out = io.StringIO() if fp is None else fp
    out.write(f"{F.k} {F.n_users - 1} {F.n_words}\n")
    for x in F.arrays():
        _write_block(out, x)
    if fp is None:
        return out.getvalue()


def load_factors(text_or_fp) -> FactorSet:
    text = text_or_fp if isinstance(text_or_fp, str) else text_or_fp.read()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InputError("empty factor file")
    try:
        k, m, w = (int(t) for t in lines[0].split())
    except ValueError as exc:
        raise InputError(f"line 1: bad factor header {lines[0]!r}") from exc
    expected = (m + 1) + k + w
    if len(lines) - 1 != expected:
        raise InputError(f"factor file has {len(lines) - 1} rows, expected {expected}")
    rows = []
    for lineno, ln in enumerate(lines[1:], start=2):
        vals = ln.split()
        if len(vals) != k:
            raise InputError(f"line {lineno}: expected {k} values, got {len(vals)}")
        try:
            rows.append([float(t) for t in vals])
        except ValueError as exc:
            raise InputError(f"line {lineno}: {exc}") from exc
    arr = np.array(rows, dtype=np.float64).reshape(expected, k)
    return FactorSet(arr[: m + 1], arr[m + 1 : m + 1 + k], arr[m + 1 + k :])
