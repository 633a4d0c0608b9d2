"""Sum-matched proposals (SM-AB) and the Metropolis-Hastings kernel (SM-MH).

An SM-AB draw samples one auxiliary variable per item plus one from the
prior and returns the (x_+ + 1)th smallest of them. The slot it came from
decides which proposal density generated it; the SM-MH step corrects for
that with a closed-form acceptance ratio that only needs the selected slot
``j``, the weighted sum of the generated responses and, for ``j != 0``,
whether the prior auxiliary fell below the selected value.

Random-number use per step: ``n + 2`` uniforms from the chain's auxiliary
stream (items, then prior, then the accept uniform), pivots from a
separate stream. An initial SM-AB draw uses ``n + 1`` uniforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .core_models import ItemBank, Prior, ResponsePattern
from .selection import pivot_seed
from .streams import SeedLike, chain_streams

# rows of uniforms generated per block in run_chain
_BLOCK_DOUBLES = 1 << 22


@dataclass(frozen=True)
class ProposalDraw:
    eta_star: float
    j: int
    s_weighted: float
    y0: int
    x_j: int


@dataclass
class ChainSample:
    values: np.ndarray
    accept_count: int
    total_steps: int

    def __eq__(self, other):
        return (
            isinstance(other, ChainSample)
            and np.array_equal(self.values, other.values)
            and self.accept_count == other.accept_count
            and self.total_steps == other.total_steps
        )

    @property
    def acceptance_rate(self) -> float:
        return self.accept_count / self.total_steps


def _check(x: ResponsePattern, bank: ItemBank):
    if len(x) != len(bank):
        raise ValueError(f"pattern has {len(x)} responses but the bank has {len(bank)} items")


def sm_ab_draw(x: ResponsePattern, bank: ItemBank, prior: Prior, rng, pivot_rng=None) -> ProposalDraw:
    """One SM-AB proposal for the pattern ``x``."""
    _check(x, bank)
    n = len(bank)
    u = rng.random(n + 1)
    z0 = float(prior.ppf(u[n]))
    j, eta_star, s, y0, count, _, _ = K.propose(x.bits, bank.a, bank.b, u, z0, pivot_seed(pivot_rng))
    assert count == x.raw_sum, "sum-match violated"
    x_j = int(x.bits[j - 1]) if j else 0
    return ProposalDraw(float(eta_star), int(j), float(s), int(y0), x_j)


def log_acceptance_ratio(
    eta_current: float, draw: ProposalDraw, x: ResponsePattern, bank: ItemBank, prior: Prior
) -> float:
    """log alpha for moving from ``eta_current`` to ``draw.eta_star``."""
    wx = float(np.dot(bank.a, x.bits.astype(float)))
    p0, p1 = prior.params
    if draw.j == 0:
        return float(K.log_alpha(eta_current, draw.eta_star, 0, draw.s_weighted, 0, 0, 0.0, 0.0, wx, prior.kind, p0, p1))
    i = draw.j - 1
    return float(
        K.log_alpha(
            eta_current, draw.eta_star, draw.j, draw.s_weighted, draw.y0,
            int(x.bits[i]), float(bank.a[i]), float(bank.b[i]), wx, prior.kind, p0, p1,
        )
    )


def sm_mh_step(
    eta_current: float, x: ResponsePattern, bank: ItemBank, prior: Prior, rng, pivot_rng=None
) -> tuple[float, int]:
    """Propose with SM-AB and accept with probability min(1, alpha).

    Returns ``(eta_next, accepted)``. When ``log alpha >= 0`` the move is
    accepted outright; the accept uniform is drawn either way.
    """
    n = len(bank)
    if n != len(x):
        _check(x, bank)
    u = rng.random(n + 2)
    p0, p1 = prior.params
    eta, acc, _ = K.mh_step(
        float(eta_current), x.bits, bank.a, bank.b, prior.kind, p0, p1, u, float(prior.ppf(u[n])), pivot_seed(pivot_rng)
    )
    return float(eta), int(acc)


def run_chain(
    x: ResponsePattern,
    bank: ItemBank,
    prior: Prior,
    n_iter: int,
    burn_in: int,
    seed: SeedLike,
    init: float | None = None,
) -> ChainSample:
    """Run ``n_iter`` SM-MH steps and keep those after ``burn_in``.

    Without ``init`` the chain starts from one SM-AB draw. Acceptance
    statistics cover the retained steps only.
    """
    if not (isinstance(n_iter, (int, np.integer)) and isinstance(burn_in, (int, np.integer))):
        raise TypeError("n_iter and burn_in must be integers")
    if burn_in < 0 or n_iter <= burn_in:
        raise ValueError(f"need n_iter > burn_in >= 0, got n_iter={n_iter}, burn_in={burn_in}")
    _check(x, bank)
    aux, piv = chain_streams(seed)
    state = pivot_seed(piv)
    n = len(bank)
    p0, p1 = prior.params
    if init is None:
        u = aux.random(n + 1)
        _, eta, _, _, _, _, state = K.propose(x.bits, bank.a, bank.b, u, float(prior.ppf(u[n])), state)
        state = np.uint64(state)
    else:
        eta = float(init)
        if not np.isfinite(eta):
            raise ValueError("init must be finite")

    values = np.empty(n_iter)
    accepted = np.empty(n_iter, dtype=np.bool_)
    rows = max(1, _BLOCK_DOUBLES // (n + 2))
    for start in range(0, n_iter, rows):
        stop = min(start + rows, n_iter)
        U = aux.random((stop - start, n + 2))
        Z0 = np.asarray(prior.ppf(U[:, n]), dtype=float)
        eta, state = K.run_steps(
            eta, x.bits, bank.a, bank.b, prior.kind, p0, p1, U, Z0, state,
            values[start:stop], accepted[start:stop],
        )
        state = np.uint64(state)
    return ChainSample(values[burn_in:].copy(), int(accepted[burn_in:].sum()), int(n_iter - burn_in))


def canonicalize(a, b, X):
    """Rewrite signed slopes so every kept entry has ``a > 0``.

    For ``a < 0`` the response is flipped and ``(a, b)`` negated, using
    ``1 - logistic(t) = logistic(-t)``. Entries with ``a == 0`` do not
    depend on the latent value and are dropped. ``X`` may be a vector or a
    matrix whose last axis runs over entries.
    """
    a = np.asarray(a, dtype=float)
    b = np.broadcast_to(np.asarray(b, dtype=float), a.shape)
    X = np.asarray(X, dtype=np.int64)
    neg = a < 0
    keep = a != 0
    if neg.any():
        X = np.where(neg, 1 - X, X)
    return (
        np.ascontiguousarray(np.abs(a)[keep]),
        np.ascontiguousarray(np.where(neg, -b, b)[keep]),
        np.ascontiguousarray(X[..., keep]),
    )


def mh_step_arrays(eta_current: float, x, a, b, prior: Prior, rng, seed) -> tuple[float, bool]:
    """SM-MH step for raw parameter arrays whose slopes may be negative or zero."""
    a, b, x = canonicalize(a, b, x)
    n = a.size
    u = rng.random(n + 2)
    p0, p1 = prior.params
    eta, acc, _ = K.mh_step(float(eta_current), x, a, b, prior.kind, p0, p1, u, float(prior.ppf(u[n])), np.uint64(seed))
    return float(eta), bool(acc)


def mh_step_rows(eta, X, a, b, prior: Prior, rngs, seeds) -> tuple[np.ndarray, np.ndarray]:
    """One SM-MH step per row of ``X``, all rows sharing the bank ``(a, b)``.

    Row ``r`` draws its uniforms from ``rngs[r]``, so the result for a row
    does not depend on which other rows are present or their order.
    """
    a, b, X = canonicalize(a, b, X)
    n = a.size
    eta = np.ascontiguousarray(eta, dtype=float)
    if X.shape[0] != eta.size or len(rngs) != eta.size:
        raise ValueError("one row, one current value and one stream per unit")
    U = np.empty((eta.size, n + 2))
    for r, g in enumerate(rngs):
        U[r] = g.random(n + 2)
    Z0 = np.asarray(prior.ppf(U[:, n]), dtype=float)
    out = np.empty(eta.size)
    accepted = np.empty(eta.size, dtype=np.bool_)
    p0, p1 = prior.params
    K.mh_rows(eta, X, a, b, prior.kind, p0, p1, U, Z0, np.asarray(seeds, dtype=np.uint64), out, accepted)
    return out, accepted
