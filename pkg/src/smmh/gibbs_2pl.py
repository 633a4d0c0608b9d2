"""Gibbs sampler for the two-parameter logistic model.

Every full conditional has the logistic form the SM-MH kernel targets, so
each block is one SM-MH step per unit:

* ability ``theta_p``: row ``p`` against items ``(a=disc, b=easi)``,
  prior Normal(mu_th, sigma_th);
* easiness ``easi_i``: column ``i`` against persons ``(a=1, b=disc_i*theta)``,
  prior Normal(easi_prior_mu, easi_prior_sigma);
* discrimination ``disc_i``: column ``i`` against persons
  ``(a=theta, b=easi_i)``, prior Normal(mu_al, sigma_al).

Persons with negative ability enter the discrimination update with their
response flipped (see ``sm_sampler.canonicalize``); persons at exactly zero
drop out of it.

After the three blocks the state is rescaled so that abilities have unit
sample SD and easiness sums to zero, then the hyper-means are redrawn.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .core_models import NormalPrior
from .sm_sampler import mh_step_arrays, mh_step_rows
from .streams import SeedLike, generator


class DegenerateStateError(ValueError):
    pass


@dataclass
class GibbsState:
    theta: np.ndarray
    disc: np.ndarray
    easi: np.ndarray
    mu_th: float = 0.0
    mu_al: float = 1.0

    def copy(self) -> "GibbsState":
        return GibbsState(self.theta.copy(), self.disc.copy(), self.easi.copy(), self.mu_th, self.mu_al)

    def linear_predictor(self) -> np.ndarray:
        return np.outer(self.theta, self.disc) + self.easi


@dataclass
class GibbsConfig:
    sigma_th: float = 1.0
    sigma_al: float = 1.0
    easi_prior_mu: float = 0.0
    easi_prior_sigma: float = 2.0
    n_iter: int = 1000
    burn_in: int = 200
    thin: int = 1
    seed: int = 0

    def __post_init__(self):
        for name in ("sigma_th", "sigma_al", "easi_prior_sigma"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.burn_in < 0 or self.n_iter <= self.burn_in:
            raise ValueError("need n_iter > burn_in >= 0")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class GibbsStreams:
    """Per-unit random streams.

    Unit ``k`` of phase ``name`` draws from ``seed / "gibbs" / name / k``;
    the same unit always sees the same stream whatever the processing order.
    """

    persons: list
    easi: list
    disc: list
    hyper: np.random.Generator
    pivot: np.random.Generator

    @classmethod
    def from_seed(cls, seed: SeedLike, n_persons: int, n_items: int) -> "GibbsStreams":
        return cls(
            persons=[generator(seed, "gibbs", "theta", p) for p in range(n_persons)],
            easi=[generator(seed, "gibbs", "easi", i) for i in range(n_items)],
            disc=[generator(seed, "gibbs", "disc", i) for i in range(n_items)],
            hyper=generator(seed, "gibbs", "hyper"),
            pivot=generator(seed, "gibbs", "pivot"),
        )

    def pivot_seeds(self, size: int) -> np.ndarray:
        return self.pivot.integers(0, 2**63, size=size).astype(np.uint64)


def _check_data(data: np.ndarray, state: GibbsState):
    data = np.asarray(data)
    if data.ndim != 2:
        raise ValueError("data must be a persons x items matrix")
    n_p, n_i = data.shape
    if state.theta.shape != (n_p,) or state.disc.shape != (n_i,) or state.easi.shape != (n_i,):
        raise ValueError(
            f"state dimensions {state.theta.shape}, {state.disc.shape}, {state.easi.shape} "
            f"do not match data {data.shape}"
        )
    return data


def update_thetas(data, state: GibbsState, config: GibbsConfig, streams: GibbsStreams):
    """Returns (new abilities, accepted flags)."""
    data = _check_data(data, state)
    prior = NormalPrior(state.mu_th, config.sigma_th)
    seeds = streams.pivot_seeds(data.shape[0])
    return mh_step_rows(state.theta, data, state.disc, state.easi, prior, streams.persons, seeds)


def update_easiness(data, state: GibbsState, config: GibbsConfig, streams: GibbsStreams):
    """Returns (new easiness values, accepted flags)."""
    data = _check_data(data, state)
    prior = NormalPrior(config.easi_prior_mu, config.easi_prior_sigma)
    ones = np.ones(data.shape[0])
    seeds = streams.pivot_seeds(data.shape[1])
    out = np.empty(data.shape[1])
    acc = np.empty(data.shape[1], dtype=bool)
    for i in range(data.shape[1]):
        out[i], acc[i] = mh_step_arrays(
            state.easi[i], data[:, i], ones, state.disc[i] * state.theta, prior, streams.easi[i], seeds[i]
        )
    return out, acc


def update_discriminations(data, state: GibbsState, config: GibbsConfig, streams: GibbsStreams):
    """Returns (new discriminations, accepted flags)."""
    data = _check_data(data, state)
    prior = NormalPrior(state.mu_al, config.sigma_al)
    seeds = streams.pivot_seeds(data.shape[1])
    out = np.empty(data.shape[1])
    acc = np.empty(data.shape[1], dtype=bool)
    for i in range(data.shape[1]):
        out[i], acc[i] = mh_step_arrays(
            state.disc[i], data[:, i], state.theta, state.easi[i], prior, streams.disc[i], seeds[i]
        )
    return out, acc


def identification_rescale(state: GibbsState) -> GibbsState:
    """Shift and scale to unit ability SD and zero easiness sum.

    With ``s = sum(easi) / sum(disc)`` and ``m = 1 / sd(theta)``:
    ``easi - s*disc``, ``m*(theta + s)``, ``disc / m``. The products
    ``disc_i * theta_p + easi_i`` are unchanged.
    """
    total_disc = state.disc.sum()
    if total_disc == 0:
        raise DegenerateStateError("sum of discriminations is zero")
    sd = state.theta.std(ddof=1) if state.theta.size > 1 else 0.0
    if not sd > 0:
        raise DegenerateStateError("abilities have zero spread")
    s = state.easi.sum() / total_disc
    m = 1.0 / sd
    return GibbsState(
        theta=m * (state.theta + s),
        disc=state.disc / m,
        easi=state.easi - s * state.disc,
        mu_th=state.mu_th,
        mu_al=state.mu_al,
    )


def update_hyperparams(state: GibbsState, config: GibbsConfig, rng: np.random.Generator) -> tuple[float, float]:
    # conjugate draws under flat hyperpriors
    mu_th = rng.normal(state.theta.mean(), config.sigma_th / np.sqrt(state.theta.size))
    mu_al = rng.normal(state.disc.mean(), config.sigma_al / np.sqrt(state.disc.size))
    return float(mu_th), float(mu_al)


def gibbs_iteration(data, state: GibbsState, config: GibbsConfig, streams: GibbsStreams):
    """One sweep. Returns the new state and per-block acceptance fractions."""
    state = state.copy()
    state.theta, acc_th = update_thetas(data, state, config, streams)
    state.easi, acc_easi = update_easiness(data, state, config, streams)
    state.disc, acc_disc = update_discriminations(data, state, config, streams)
    state = identification_rescale(state)
    state.mu_th, state.mu_al = update_hyperparams(state, config, streams.hyper)
    rates = {"theta": float(acc_th.mean()), "easi": float(acc_easi.mean()), "disc": float(acc_disc.mean())}
    return state, rates


def initial_state(data) -> GibbsState:
    """Starting values from observed proportions, already identified."""
    data = np.asarray(data, dtype=float)
    n_p, n_i = data.shape
    row = data.mean(axis=1)
    sd = row.std(ddof=1) if n_p > 1 else 0.0
    theta = (row - row.mean()) / sd if sd > 0 else np.linspace(-1.0, 1.0, n_p)
    col = np.clip(data.mean(axis=0), 0.5 / n_p, 1 - 0.5 / n_p)
    easi = np.log(col) - np.log1p(-col)
    state = GibbsState(theta=theta, disc=np.ones(n_i), easi=easi, mu_th=0.0, mu_al=1.0)
    if n_p > 1:
        state = identification_rescale(state)
    return state


@dataclass
class GibbsResult:
    iterations: np.ndarray
    theta: np.ndarray
    disc: np.ndarray
    easi: np.ndarray
    mu_th: np.ndarray
    mu_al: np.ndarray
    acceptance: dict = field(default_factory=dict)
    wall_time: dict = field(default_factory=dict)
    final_state: GibbsState | None = None

    def posterior_means(self) -> dict:
        return {k: getattr(self, k).mean(axis=0) for k in ("theta", "disc", "easi")}


def run_gibbs(data, config: GibbsConfig, init: GibbsState | None = None, streams: GibbsStreams | None = None) -> GibbsResult:
    """Run the sampler and keep every ``thin``th post-burn-in state."""
    data = np.asarray(data, dtype=np.int64)
    if data.ndim != 2 or not np.isin(data, (0, 1)).all():
        raise ValueError("data must be a binary persons x items matrix")
    n_p, n_i = data.shape
    state = initial_state(data) if init is None else init.copy()
    _check_data(data, state)
    if streams is None:
        streams = GibbsStreams.from_seed(config.seed, n_p, n_i)

    keep = list(range(config.burn_in, config.n_iter, config.thin))
    out = {
        "theta": np.empty((len(keep), n_p)),
        "disc": np.empty((len(keep), n_i)),
        "easi": np.empty((len(keep), n_i)),
        "mu_th": np.empty(len(keep)),
        "mu_al": np.empty(len(keep)),
    }
    totals = {"theta": 0.0, "easi": 0.0, "disc": 0.0}
    t0 = time.perf_counter()
    k = 0
    for it in range(config.n_iter):
        if it == config.burn_in:
            t_burn = time.perf_counter()
        state, rates = gibbs_iteration(data, state, config, streams)
        for name in totals:
            totals[name] += rates[name]
        if k < len(keep) and it == keep[k]:
            for name in out:
                out[name][k] = getattr(state, name)
            k += 1
    t1 = time.perf_counter()
    return GibbsResult(
        iterations=np.asarray(keep),
        acceptance={name: v / config.n_iter for name, v in totals.items()},
        wall_time={"burn_in": t_burn - t0, "sampling": t1 - t_burn, "total": t1 - t0},
        final_state=state,
        **out,
    )
