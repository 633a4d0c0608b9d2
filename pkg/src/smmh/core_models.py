"""Item banks, priors, response patterns and the log-densities built on them.

Item response functions are logistic, ``F_i(eta) = logistic(a_i * eta + b_i)``
with discrimination ``a_i > 0`` and easiness ``b_i``. A prior is either
logistic (slope ``a0``, intercept ``b0``, i.e. location ``-b0/a0`` and scale
``1/a0``) or normal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np
from scipy import special

from . import _kernels as K


def log_expit(t):
    """log(logistic(t)), elementwise and overflow-safe."""
    return -np.logaddexp(0.0, -np.asarray(t, dtype=float))


def log_expit_complement(t):
    """log(1 - logistic(t))."""
    return -np.logaddexp(0.0, np.asarray(t, dtype=float))


def logit(u):
    u = np.asarray(u, dtype=float)
    return np.log(u) - np.log1p(-u)


@dataclass(frozen=True)
class ItemParams:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError(f"item parameters must be finite, got a={self.a}, b={self.b}")
        if self.a <= 0:
            raise ValueError(f"discrimination must be positive, got a={self.a}")


class ItemBank:
    """Fixed-length collection of logistic items.

    Parameters are stored as read-only float arrays ``a`` and ``b``; item
    ``i`` of the bank (0-based here) is item ``i + 1`` in the usual 1-based
    notation where slot 0 belongs to the prior.
    """

    def __init__(self, items: Sequence[ItemParams]):
        items = list(items)
        if not items:
            raise ValueError("an item bank needs at least one item")
        a = np.array([it.a for it in items], dtype=float)
        b = np.array([it.b for it in items], dtype=float)
        a.setflags(write=False)
        b.setflags(write=False)
        self.a = a
        self.b = b

    @classmethod
    def from_arrays(cls, a, b) -> "ItemBank":
        a = np.atleast_1d(np.asarray(a, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("a and b must be 1-d arrays of equal length")
        return cls([ItemParams(float(ai), float(bi)) for ai, bi in zip(a, b)])

    def __len__(self) -> int:
        return self.a.size

    def __getitem__(self, i: int) -> ItemParams:
        return ItemParams(float(self.a[i]), float(self.b[i]))

    def subset(self, n: int) -> "ItemBank":
        """The first ``n`` items."""
        return ItemBank.from_arrays(self.a[:n], self.b[:n])

    def __repr__(self):
        return f"ItemBank(n={len(self)})"


@dataclass(frozen=True)
class LogisticPrior:
    a0: float = 1.0
    b0: float = 0.0
    kind: int = field(default=K.LOGISTIC, init=False, repr=False)

    def __post_init__(self):
        if not self.a0 > 0:
            raise ValueError(f"logistic prior needs a0 > 0, got {self.a0}")

    @property
    def mean(self) -> float:
        return -self.b0 / self.a0

    @property
    def sd(self) -> float:
        return math.pi / (math.sqrt(3.0) * self.a0)

    @property
    def params(self) -> tuple[float, float]:
        return self.a0, self.b0

    def logpdf(self, eta):
        t = self.a0 * np.asarray(eta, dtype=float) + self.b0
        return math.log(self.a0) + t - 2.0 * np.logaddexp(0.0, t)

    def logcdf(self, eta):
        return log_expit(self.a0 * np.asarray(eta, dtype=float) + self.b0)

    def logsf(self, eta):
        return log_expit_complement(self.a0 * np.asarray(eta, dtype=float) + self.b0)

    def ppf(self, u):
        return (logit(u) - self.b0) / self.a0

    def sample(self, rng, size=None):
        return rng.logistic(self.mean, 1.0 / self.a0, size=size)


@dataclass(frozen=True)
class NormalPrior:
    mu: float = 0.0
    sigma: float = 1.0
    kind: int = field(default=K.NORMAL, init=False, repr=False)

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"normal prior needs sigma > 0, got {self.sigma}")

    @property
    def mean(self) -> float:
        return self.mu

    @property
    def sd(self) -> float:
        return self.sigma

    @property
    def params(self) -> tuple[float, float]:
        return self.mu, self.sigma

    def logpdf(self, eta):
        z = (np.asarray(eta, dtype=float) - self.mu) / self.sigma
        return -0.5 * z * z - math.log(self.sigma) - 0.5 * math.log(2.0 * math.pi)

    def logcdf(self, eta):
        return special.log_ndtr((np.asarray(eta, dtype=float) - self.mu) / self.sigma)

    def logsf(self, eta):
        return special.log_ndtr(-(np.asarray(eta, dtype=float) - self.mu) / self.sigma)

    def ppf(self, u):
        return self.mu + self.sigma * special.ndtri(u)

    def sample(self, rng, size=None):
        return rng.normal(self.mu, self.sigma, size=size)


Prior = Union[LogisticPrior, NormalPrior]


class ResponsePattern:
    """A binary response vector."""

    def __init__(self, bits):
        bits = np.asarray(bits)
        if bits.ndim != 1:
            raise ValueError("a response pattern is a 1-d vector")
        if bits.size and not np.isin(bits, (0, 1)).all():
            raise ValueError("responses must be 0 or 1")
        bits = bits.astype(np.int64)
        bits.setflags(write=False)
        self.bits = bits

    def __len__(self) -> int:
        return self.bits.size

    @cached_property
    def raw_sum(self) -> int:
        return int(self.bits.sum())

    def weighted_sum(self, bank: ItemBank) -> float:
        return weighted_sum(self, bank)

    def __eq__(self, other):
        return isinstance(other, ResponsePattern) and np.array_equal(self.bits, other.bits)

    def __repr__(self):
        return f"ResponsePattern({self.bits.tolist()})"


def _check_lengths(x: ResponsePattern, bank: ItemBank):
    if len(x) != len(bank):
        raise ValueError(f"pattern has {len(x)} responses but the bank has {len(bank)} items")


def irf_cdf(item: ItemParams, eta: float) -> float:
    """P(X = 1 | eta) for one item."""
    t = item.a * eta + item.b
    if t >= 0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def irf_probs(bank: ItemBank, eta: float) -> np.ndarray:
    """All item response probabilities at ``eta``."""
    return special.expit(bank.a * eta + bank.b)


def weighted_sum(x: ResponsePattern, bank: ItemBank) -> float:
    _check_lengths(x, bank)
    return float(np.dot(bank.a, x.bits))


def log_joint_target(eta: float, x: ResponsePattern, bank: ItemBank, prior: Prior) -> float:
    """log f(eta, x): Bernoulli log-likelihood of ``x`` plus the prior log-density."""
    _check_lengths(x, bank)
    t = bank.a * eta + bank.b
    loglik = np.where(x.bits == 1, log_expit(t), log_expit_complement(t)).sum()
    return float(loglik + prior.logpdf(eta))


def log_joint_proposal(eta: float, j: int, y, bank: ItemBank, prior: Prior) -> float:
    """Joint log-density of auxiliary ``z_j = eta`` and its generated pattern.

    ``y`` has ``n + 1`` entries indexed by auxiliary slot (0 is the prior);
    ``y[j]`` is ignored. For ``j = 0`` this is ``log_joint_target`` with the
    pattern ``y[1:]``. For ``j >= 1`` item ``j`` contributes its logistic
    density and the prior cdf takes the place of its response function.
    """
    n = len(bank)
    if not 0 <= j <= n:
        raise IndexError(f"slot index {j} outside 0..{n}")
    y = np.asarray(y)
    if y.shape != (n + 1,):
        raise ValueError(f"y must have {n + 1} entries, got shape {y.shape}")
    t = bank.a * eta + bank.b
    item_terms = np.where(y[1:] == 1, log_expit(t), log_expit_complement(t))
    if j == 0:
        return float(item_terms.sum() + prior.logpdf(eta))
    item_terms[j - 1] = 0.0
    tj = t[j - 1]
    log_fj = math.log(bank.a[j - 1]) + tj - 2.0 * np.logaddexp(0.0, tj)
    prior_term = prior.logcdf(eta) if y[0] == 1 else prior.logsf(eta)
    return float(item_terms.sum() + prior_term + log_fj)


def item_auxiliaries(bank: ItemBank, u) -> np.ndarray:
    """Logistic auxiliaries ``z_i`` (location -b_i/a_i, scale 1/a_i) from uniforms."""
    return (logit(u) - bank.b) / bank.a


def simulate_response(eta: float, bank: ItemBank, rng: np.random.Generator) -> ResponsePattern:
    """Draw a response pattern at ability ``eta`` via item auxiliaries.

    ``x_i = (z_i <= eta)`` with ``z_i`` logistic, which is a Bernoulli draw
    with success probability ``F_i(eta)``.
    """
    z = item_auxiliaries(bank, rng.random(len(bank)))
    return ResponsePattern((z <= eta).astype(np.int64))


def simulate_responses(etas, bank: ItemBank, rng: np.random.Generator) -> np.ndarray:
    """Response matrix for many persons, one row per entry of ``etas``."""
    etas = np.asarray(etas, dtype=float)
    u = rng.random((etas.size, len(bank)))
    z = item_auxiliaries(bank, u)
    return (z <= etas[:, None]).astype(np.int64)
