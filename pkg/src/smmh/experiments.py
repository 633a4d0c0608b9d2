"""Simulation studies: autocorrelation scenarios, timing, proposal convergence.

Each driver takes one integer seed and derives its streams by name, so a
scenario can be rerun piecewise (one n, one person) with identical draws.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core_models import ItemBank, LogisticPrior, NormalPrior, Prior, ResponsePattern, simulate_response
from .diagnostics import autocorrelation, confidence_band, expected_mean
from .sm_sampler import run_chain, sm_ab_draw, sm_mh_step
from .streams import generator, seed_sequence

A_DISTS = ("fixed", "uniform")


def make_bank(n: int, a_dist: str, rng: np.random.Generator) -> ItemBank:
    """Items with ``b ~ U(-1, 2)`` and ``a = 1`` or ``a ~ U(0.1, 2.1)``."""
    if a_dist == "fixed":
        a = np.ones(n)
    elif a_dist == "uniform":
        a = rng.uniform(0.1, 2.1, n)
    else:
        raise ValueError(f"a_dist must be one of {A_DISTS}, got {a_dist!r}")
    return ItemBank.from_arrays(a, rng.uniform(-1.0, 2.0, n))


@dataclass
class AutocorrResult:
    n: int
    a_dist: str
    acf: np.ndarray
    acceptance_rate: float
    person_acf1: list = field(default_factory=list)
    person_acceptance: list = field(default_factory=list)


def autocorr_scenario(
    n: int,
    a_dist: str,
    chain_length: int,
    seed: int,
    n_persons: int = 1,
    prior: Prior | None = None,
    burn_in: int = 1000,
    max_lag: int = 30,
) -> AutocorrResult:
    """SM-MH chains for simulated persons on one random bank.

    Abilities come from the prior. Returned ``acf`` and ``acceptance_rate``
    are averages over persons.
    """
    prior = LogisticPrior() if prior is None else prior
    bank = make_bank(n, a_dist, generator(seed, "autocorr", a_dist, n, "bank"))
    acfs, accs = [], []
    for p in range(n_persons):
        rng = generator(seed, "autocorr", a_dist, n, "person", p)
        x = simulate_response(float(prior.sample(rng)), bank, rng)
        chain = run_chain(x, bank, prior, burn_in + chain_length, burn_in, seed_sequence(seed, "autocorr", a_dist, n, "chain", p))
        acfs.append(autocorrelation(chain.values, max_lag))
        accs.append(chain.acceptance_rate)
    acfs = np.array(acfs)
    return AutocorrResult(n, a_dist, acfs.mean(axis=0), float(np.mean(accs)), acfs[:, 0].tolist(), accs)


def timing_benchmark(n_list, reps: int, seed: int, prior: Prior | None = None) -> list[tuple[int, float]]:
    """Mean wall time of one SM-MH iteration for each bank size.

    For every ``n`` a 2PL bank is drawn, then ``reps`` response patterns are
    simulated and one iteration is timed on each. A first, untimed
    iteration per ``n`` absorbs warm-up costs.
    """
    prior = NormalPrior() if prior is None else prior
    out = []
    for n in n_list:
        rng = generator(seed, "timing", n)
        bank = make_bank(n, "uniform", rng)
        times = np.empty(reps)
        for r in range(reps + 1):
            eta = float(prior.sample(rng))
            x = simulate_response(eta, bank, rng)
            t0 = time.perf_counter()
            sm_mh_step(eta, x, bank, prior, rng)
            dt = time.perf_counter() - t0
            if r:
                times[r - 1] = dt
        out.append((int(n), float(times.mean())))
    return out


@dataclass
class ConvergenceResult:
    ns: list
    median_abs_error: list
    error_ratios: list
    inside_fraction: list
    trajectory_inside_fraction: float
    bands: list


def proposal_convergence(
    eta_true: float = -0.21,
    ns=(100, 400, 1600, 6400),
    reps: int = 200,
    seed: int = 0,
    prior: Prior | None = None,
    alpha_level: float = 0.05,
) -> ConvergenceResult:
    """SM-AB proposals for a person of known ability answering ever more items.

    Each replication simulates fresh responses to the largest bank and
    draws one proposal from the responses to the first ``n`` items, for
    every ``n``. The Hoeffding band around the truth is the inverted
    expected-mean interval at that ``n``.
    """
    prior = NormalPrior() if prior is None else prior
    ns = [int(n) for n in ns]
    full = make_bank(max(ns), "uniform", generator(seed, "convergence", "bank"))
    banks = [full.subset(n) for n in ns]
    bands = [confidence_band(expected_mean(eta_true, bk), n, alpha_level, bk) for n, bk in zip(ns, banks)]
    errors = np.empty((reps, len(ns)))
    inside = np.empty((reps, len(ns)), dtype=bool)
    for r in range(reps):
        rng = generator(seed, "convergence", "rep", r)
        x = simulate_response(eta_true, full, rng)
        for k, (n, bk) in enumerate(zip(ns, banks)):
            draw = sm_ab_draw(ResponsePattern(x.bits[:n]), bk, prior, rng)
            errors[r, k] = abs(draw.eta_star - eta_true)
            inside[r, k] = bands[k].contains(draw.eta_star)
    med = np.median(errors, axis=0)
    return ConvergenceResult(
        ns=ns,
        median_abs_error=med.tolist(),
        error_ratios=(med[1:] / med[:-1]).tolist(),
        inside_fraction=inside.mean(axis=0).tolist(),
        trajectory_inside_fraction=float(inside.all(axis=1).mean()),
        bands=bands,
    )


def band_coverage(eta_true: float, n: int, n_persons: int, seed: int, alpha_level: float = 0.05) -> float:
    """Fraction of persons whose Hoeffding ability band contains ``eta_true``."""
    bank = make_bank(n, "uniform", generator(seed, "coverage", "bank"))
    rng = generator(seed, "coverage", "persons")
    hits = 0
    for _ in range(n_persons):
        x = simulate_response(eta_true, bank, rng)
        band = confidence_band(x.raw_sum / n, n, alpha_level, bank)
        hits += band.contains(eta_true)
    return hits / n_persons
