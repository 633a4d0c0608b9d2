"""Chain diagnostics, Hoeffding bands and a grid-quadrature posterior.

The quadrature posterior is deliberately independent of the samplers: it
evaluates the target log-density on a grid and integrates with the
trapezoid rule, which makes it usable as a ground truth in KS checks.
"""

from __future__ import annotations

import builtins
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .core_models import ItemBank, Prior, ResponsePattern
from .sm_sampler import ChainSample


class RootFindingError(RuntimeError):
    pass


class QuadratureRangeError(ValueError):
    pass


def autocorrelation(chain, max_lag: int) -> np.ndarray:
    """Sample autocorrelations at lags ``1..max_lag``.

    Uses the biased estimator: lag-k autocovariance divided by ``N``, then
    normalized by the lag-0 variance.
    """
    x = np.asarray(chain, dtype=float)
    if max_lag < 1 or x.size <= max_lag:
        raise ValueError(f"need len(chain) > max_lag >= 1, got {x.size} and {max_lag}")
    x = x - x.mean()
    c0 = np.dot(x, x)
    if not c0 > 0:
        raise ValueError("chain is constant; autocorrelation undefined")
    return np.array([np.dot(x[:-k], x[k:]) / c0 for k in range(1, max_lag + 1)])


def effective_sample_size(chain, max_lag: int = 200) -> float:
    """N / (1 + 2 * sum of autocorrelations up to the first non-positive one)."""
    x = np.asarray(chain, dtype=float)
    rho = autocorrelation(x, min(max_lag, x.size - 1))
    stop = np.flatnonzero(rho <= 0)
    rho = rho[: stop[0]] if stop.size else rho
    return x.size / (1.0 + 2.0 * rho.sum())


def acceptance_rate(sample: ChainSample) -> float:
    if sample.total_steps <= 0:
        raise ValueError("no steps recorded")
    return sample.accept_count / sample.total_steps


def hoeffding_epsilon(n: int, alpha_level: float) -> float:
    """Half-width ``eps`` solving ``2 exp(-2 n eps^2) = alpha_level``."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if not 0.0 < alpha_level < 1.0:
        raise ValueError(f"alpha_level must lie in (0, 1), got {alpha_level}")
    return math.sqrt(math.log(2.0 / alpha_level) / (2.0 * n))


def expected_mean(eta: float, bank: ItemBank) -> float:
    """Expected proportion correct at ``eta``: the average of the IRFs."""
    return float(special.expit(bank.a * eta + bank.b).mean())


def invert_expected_mean(target: float, bank: ItemBank, tol: float = 1e-10, max_iter: int = 200) -> float:
    """Solve ``expected_mean(eta) = target`` by false position.

    The bracket starts at [-1, 1] and doubles outward until it contains the
    root. The Illinois rule halves the retained endpoint's value when the
    same side is kept twice, which keeps the method from stalling.
    """
    if not 0.0 < target < 1.0:
        raise ValueError(f"target must lie strictly inside (0, 1), got {target}")

    def f(eta):
        return expected_mean(eta, bank) - target

    lo, hi = -1.0, 1.0
    flo, fhi = f(lo), f(hi)
    for _ in range(64):
        if flo <= 0 <= fhi:
            break
        if flo > 0:
            lo *= 2.0
            flo = f(lo)
        if fhi < 0:
            hi *= 2.0
            fhi = f(hi)
    else:
        raise RootFindingError(
            f"could not bracket target {target}: f({lo})={flo}, f({hi})={fhi}"
        )
    if abs(flo) <= tol:
        return lo
    if abs(fhi) <= tol:
        return hi

    side = 0
    c = lo
    for _ in range(max_iter):
        c = hi - fhi * (hi - lo) / (fhi - flo)
        fc = f(c)
        if abs(fc) <= tol:
            return c
        if fc < 0:
            lo, flo = c, fc
            if side == -1:
                fhi *= 0.5
            side = -1
        else:
            hi, fhi = c, fc
            if side == 1:
                flo *= 0.5
            side = 1
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(c)):
            return c
    raise RootFindingError(
        f"false position did not reach tol={tol} in {max_iter} iterations "
        f"(bracket [{lo}, {hi}], last residual {fc})"
    )


@dataclass(frozen=True)
class BandResult:
    lo: float
    hi: float
    epsilon: float

    def contains(self, eta: float) -> bool:
        return self.lo <= eta <= self.hi


def confidence_band(xbar: float, n: int, alpha_level: float, bank: ItemBank, tol: float = 1e-10) -> BandResult:
    """Ability interval implied by a Hoeffding band around the mean response.

    Band edges are clipped to ``[1/(2n), 1 - 1/(2n)]`` before inversion.
    """
    eps = hoeffding_epsilon(n, alpha_level)
    edge = 1.0 / (2.0 * n)
    lo_t = min(max(xbar - eps, edge), 1.0 - edge)
    hi_t = min(max(xbar + eps, edge), 1.0 - edge)
    return BandResult(invert_expected_mean(lo_t, bank, tol), invert_expected_mean(hi_t, bank, tol), eps)


@dataclass
class Quadrature:
    grid: np.ndarray
    log_density: np.ndarray
    log_weights: np.ndarray
    range: tuple[float, float]

    def __post_init__(self):
        w = np.exp(self.log_weights)
        self._cum = np.concatenate([[0.0], np.cumsum(0.5 * (np.exp(self.log_density[1:]) + np.exp(self.log_density[:-1])) * np.diff(self.grid))])
        self._weights = w

    @property
    def total_mass(self) -> float:
        return float(self._weights.sum())

    def cdf(self, t):
        return np.interp(t, self.grid, self._cum, left=0.0, right=1.0)

    def quantile(self, q):
        return np.interp(q, self._cum, self.grid)

    def mean(self) -> float:
        return float(np.dot(self._weights, self.grid))

    def sd(self) -> float:
        m = self.mean()
        return float(np.sqrt(np.dot(self._weights, (self.grid - m) ** 2)))

    def ks_distance(self, sample) -> float:
        """Kolmogorov-Smirnov distance between ``sample`` and this posterior."""
        s = np.sort(np.asarray(sample, dtype=float))
        n = s.size
        F = self.cdf(s)
        i = np.arange(1, n + 1)
        return float(max((i / n - F).max(), (F - (i - 1) / n).max()))


def _log_target_grid(grid, x: ResponsePattern, bank: ItemBank, prior: Prior, chunk: int = 256):
    # sum_i x_i t_i - softplus(t_i), t_i = a_i eta + b_i
    wx = np.dot(bank.a, x.bits)
    bx = np.dot(bank.b, x.bits)
    out = np.empty(grid.size)
    for s in range(0, grid.size, chunk):
        g = grid[s : s + chunk]
        t = np.outer(g, bank.a) + bank.b
        out[s : s + chunk] = g * wx + bx - np.logaddexp(0.0, t).sum(axis=1)
    return out + prior.logpdf(grid)


def _tail_masses(grid, logp):
    """Upper bounds on the mass beyond each end (valid for log-concave densities)."""
    dx = grid[1] - grid[0]
    m = logp.max()
    p = np.exp(logp - m)
    z = np.trapezoid(p, grid)
    slope_lo = (logp[1] - logp[0]) / dx
    slope_hi = (logp[-1] - logp[-2]) / dx
    lo = p[0] / z / slope_lo if slope_lo > 0 else np.inf
    hi = p[-1] / z / -slope_hi if slope_hi < 0 else np.inf
    return lo, hi


def quadrature_posterior(
    x: ResponsePattern,
    bank: ItemBank,
    prior: Prior,
    n_points: int = 4096,
    range: tuple[float, float] | None = None,
    tail_tol: float = 1e-6,
) -> Quadrature:
    """Trapezoid-rule posterior of ``eta`` given ``x`` on an equally spaced grid.

    Without ``range`` the grid starts at the prior mean +/- 10 prior SDs,
    widens until both tails are negligible, then zooms onto the region
    holding the posterior mass.
    """
    if len(x) != len(bank):
        raise ValueError("pattern and bank lengths differ")
    if range is not None:
        lo, hi = map(float, range)
        if not lo < hi:
            raise ValueError("range must satisfy lo < hi")
    else:
        lo, hi = prior.mean - 10 * prior.sd, prior.mean + 10 * prior.sd
        for _ in builtins.range(60):
            grid = np.linspace(lo, hi, n_points)
            logp = _log_target_grid(grid, x, bank, prior)
            t_lo, t_hi = _tail_masses(grid, logp)
            if t_lo <= 1e-12 and t_hi <= 1e-12:
                break
            width = hi - lo
            if t_lo > 1e-12:
                lo -= width
            if t_hi > 1e-12:
                hi += width
        keep = np.flatnonzero(logp > logp.max() - 40.0)
        i0, i1 = max(keep[0] - 1, 0), min(keep[-1] + 1, grid.size - 1)
        lo, hi = grid[i0], grid[i1]

    grid = np.linspace(lo, hi, n_points)
    logp = _log_target_grid(grid, x, bank, prior)
    t_lo, t_hi = _tail_masses(grid, logp)
    if t_lo > tail_tol or t_hi > tail_tol:
        raise QuadratureRangeError(
            f"range [{lo}, {hi}] leaves tail mass {t_lo:.2e} / {t_hi:.2e} (limit {tail_tol:.0e})"
        )
    w = np.full(n_points, grid[1] - grid[0])
    w[0] = w[-1] = 0.5 * w[0]
    log_z = special.logsumexp(logp, b=w)
    log_density = logp - log_z
    return Quadrature(grid, log_density, log_density + np.log(w), (float(lo), float(hi)))

