"""Command-line interface.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
Every command writes a JSON manifest next to its outputs, including on
failure (with the ``error`` field set).
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from .core_models import LogisticPrior, NormalPrior, ResponsePattern, simulate_response
from .diagnostics import QuadratureRangeError, RootFindingError
from .experiments import A_DISTS, autocorr_scenario, proposal_convergence, timing_benchmark
from .gibbs_2pl import DegenerateStateError, GibbsConfig, run_gibbs
from .io import DataError, RunManifest, read_item_bank, read_responses, write_chain_long, write_csv, write_responses
from .sm_sampler import run_chain
from .streams import generator, seed_sequence

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for pkg in ("artifact", "numpy", "scipy", "numba"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def _prior(args):
    if args.prior == "logistic":
        return LogisticPrior(args.a0, args.b0)
    return NormalPrior(args.mu, args.sigma)


def _sibling(path, suffix: str) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}_{suffix}")


def cmd_simulate(args, manifest: RunManifest) -> None:
    bank = read_item_bank(args.items)
    if args.n_persons < 1:
        raise UsageError("--n-persons must be at least 1")
    if args.eta is not None:
        etas = np.full(args.n_persons, args.eta)
    else:
        etas = _prior(args).sample(generator(args.seed, "simulate", "eta"), size=args.n_persons)
    data = np.array(
        [simulate_response(float(e), bank, generator(args.seed, "simulate", "person", p)).bits for p, e in enumerate(etas)]
    )
    truth = args.truth_out or _sibling(args.out, "truth.csv")
    write_responses(args.out, data)
    write_csv(truth, ["person", "eta"], [(p, float(e)) for p, e in enumerate(etas)])
    manifest.outputs = [str(args.out), str(truth)]


def cmd_sample_pv(args, manifest: RunManifest) -> None:
    bank = read_item_bank(args.items)
    data = read_responses(args.responses)
    if data.shape[1] != len(bank):
        raise DataError(f"responses have {data.shape[1]} columns but the item file has {len(bank)} items")
    kept = args.n_iter - args.burn_in
    if args.burn_in < 0 or kept < 1:
        raise UsageError("need --n-iter > --burn-in >= 0")
    if not 1 <= args.n_pv <= kept:
        raise UsageError(f"--n-pv must lie in 1..{kept}")
    prior = _prior(args)
    pick = np.arange(1, args.n_pv + 1) * kept // args.n_pv - 1
    rows, rates = [], []
    for p, x in enumerate(data):
        chain = run_chain(ResponsePattern(x), bank, prior, args.n_iter, args.burn_in, seed_sequence(args.seed, "sample-pv", "person", p))
        rows.append([p, *chain.values[pick].tolist()])
        rates.append(chain.acceptance_rate)
    write_csv(args.out, ["person", *[f"pv{k + 1}" for k in range(args.n_pv)]], rows)
    manifest.acceptance = {"mean": float(np.mean(rates)), "min": float(np.min(rates)), "max": float(np.max(rates))}
    manifest.outputs = [str(args.out)]


def cmd_gibbs_2pl(args, manifest: RunManifest) -> None:
    if args.resume:
        raise UsageError("resuming from a manifest is not supported; start a fresh run")
    data = read_responses(args.responses)
    try:
        config = GibbsConfig(
            sigma_th=args.sigma_th, sigma_al=args.sigma_al, easi_prior_mu=args.easi_mu,
            easi_prior_sigma=args.easi_sigma, n_iter=args.n_iter, burn_in=args.burn_in,
            thin=args.thin, seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    manifest.config = config.to_dict()
    result = run_gibbs(data, config)
    chain_path = Path(f"{args.out_prefix}_chain.csv")
    write_chain_long(chain_path, result)
    manifest.acceptance = result.acceptance
    manifest.wall_time.update(result.wall_time)
    manifest.outputs = [str(chain_path)]


def cmd_bench_timing(args, manifest: RunManifest) -> None:
    if args.reps < 1 or any(n < 1 for n in args.n_list):
        raise UsageError("--reps and every n must be positive")
    rows = timing_benchmark(args.n_list, args.reps, args.seed, _prior(args))
    write_csv(args.out, ["n", "mean_seconds"], rows)
    manifest.outputs = [str(args.out)]


def cmd_diag_autocorr(args, manifest: RunManifest) -> None:
    if args.chain_length <= args.max_lag:
        raise UsageError("--chain-length must exceed --max-lag")
    res = autocorr_scenario(
        args.n, args.a_dist, args.chain_length, args.seed, n_persons=args.persons,
        prior=_prior(args), burn_in=args.burn_in, max_lag=args.max_lag,
    )
    write_csv(args.out, ["lag", "acf"], [(k + 1, float(v)) for k, v in enumerate(res.acf)])
    report = _sibling(args.out, "report.json")
    _write_json(report, {
        "n": res.n, "a_dist": res.a_dist, "acf": res.acf.tolist(), "acceptance_rate": res.acceptance_rate,
        "person_acf1": res.person_acf1, "person_acceptance": res.person_acceptance,
    })
    manifest.acceptance = {"mean": res.acceptance_rate, "per_person": res.person_acceptance}
    manifest.outputs = [str(args.out), str(report)]


def cmd_diag_bands(args, manifest: RunManifest) -> None:
    res = proposal_convergence(args.eta, args.n_list, args.reps, args.seed, _prior(args), args.alpha)
    rows = [
        (n, band.epsilon, band.lo, band.hi, err, inside)
        for n, band, err, inside in zip(res.ns, res.bands, res.median_abs_error, res.inside_fraction)
    ]
    write_csv(args.out, ["n", "epsilon", "lo", "hi", "median_abs_error", "inside_fraction"], rows)
    report = _sibling(args.out, "report.json")
    _write_json(report, {
        "eta": args.eta, "ns": res.ns, "bands": [[b.lo, b.hi] for b in res.bands],
        "median_abs_error": res.median_abs_error, "error_ratios": res.error_ratios,
        "inside_fraction": res.inside_fraction, "trajectory_inside_fraction": res.trajectory_inside_fraction,
    })
    manifest.outputs = [str(args.out), str(report)]


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_prior(p):
    g = p.add_argument_group("prior")
    g.add_argument("--prior", choices=("normal", "logistic"), default="normal")
    g.add_argument("--mu", type=float, default=0.0)
    g.add_argument("--sigma", type=float, default=1.0)
    g.add_argument("--a0", type=float, default=1.0)
    g.add_argument("--b0", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smmh", description="Sum-matched samplers for logistic IRT models.")
    parser.add_argument("--threads", type=int, default=None, help="cap on worker threads")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate 2PL responses")
    p.add_argument("--items", required=True)
    p.add_argument("--n-persons", type=int, required=True)
    p.add_argument("--eta", type=float, default=None, help="fixed ability; omit to draw from the prior")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--truth-out", default=None)
    _add_prior(p)
    p.set_defaults(func=cmd_simulate, manifest_base="out")

    p = sub.add_parser("sample-pv", help="plausible values by SM-MH")
    p.add_argument("--responses", required=True)
    p.add_argument("--items", required=True)
    p.add_argument("--n-iter", type=int, default=20)
    p.add_argument("--burn-in", type=int, default=10)
    p.add_argument("--n-pv", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_prior(p)
    p.set_defaults(func=cmd_sample_pv, manifest_base="out")

    p = sub.add_parser("gibbs-2pl", help="estimate a 2PL model by Gibbs sampling")
    p.add_argument("--responses", required=True)
    p.add_argument("--n-iter", type=int, default=1000)
    p.add_argument("--burn-in", type=int, default=200)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--sigma-th", type=float, default=1.0)
    p.add_argument("--sigma-al", type=float, default=1.0)
    p.add_argument("--easi-mu", type=float, default=0.0)
    p.add_argument("--easi-sigma", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--resume", default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gibbs_2pl, manifest_base="out_prefix")

    p = sub.add_parser("bench-timing", help="time one SM-MH iteration per bank size")
    p.add_argument("--n-list", type=_int_list, default=[1000, 2000, 4000])
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    _add_prior(p)
    p.set_defaults(func=cmd_bench_timing, manifest_base="out")

    p = sub.add_parser("diag-autocorr", help="autocorrelation of SM-MH chains")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--a-dist", choices=A_DISTS, default="uniform")
    p.add_argument("--chain-length", type=int, default=20000)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--max-lag", type=int, default=30)
    p.add_argument("--persons", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    _add_prior(p)
    p.set_defaults(func=cmd_diag_autocorr, manifest_base="out")

    p = sub.add_parser("diag-bands", help="SM-AB proposals against Hoeffding bands")
    p.add_argument("--eta", type=float, default=-0.21)
    p.add_argument("--n-list", type=_int_list, default=[100, 400, 1600, 6400])
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    _add_prior(p)
    p.set_defaults(func=cmd_diag_bands, manifest_base="out")
    return parser


def _manifest_path(args) -> Path:
    base = Path(str(getattr(args, args.manifest_base)))
    if args.manifest_base == "out_prefix":
        return Path(f"{base}_manifest.json")
    return _sibling(base, "manifest.json")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        import numba

        numba.set_num_threads(max(1, min(args.threads, numba.config.NUMBA_NUM_THREADS)))
    config = {k: v for k, v in vars(args).items() if k not in ("func", "manifest_base")}
    manifest = RunManifest(command=args.command, seed=getattr(args, "seed", None), config=config, versions=_versions())
    t0 = time.perf_counter()
    code = EXIT_OK
    try:
        args.func(args, manifest)
    except UsageError as exc:
        manifest.error, code = f"usage: {exc}", EXIT_USAGE
    except DataError as exc:
        manifest.error, code = f"data: {exc}", EXIT_DATA
    except (RootFindingError, QuadratureRangeError, DegenerateStateError, FloatingPointError) as exc:
        manifest.error, code = f"numerical: {exc}", EXIT_NUMERIC
    except ValueError as exc:
        manifest.error, code = f"data: {exc}", EXIT_DATA
    manifest.wall_time["command"] = time.perf_counter() - t0
    if manifest.error:
        print(f"smmh {args.command}: {manifest.error}", file=sys.stderr)
    try:
        manifest.write(_manifest_path(args))
    except OSError as exc:
        print(f"smmh: could not write manifest: {exc}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
