"""Command-line interface: ``sggmix simulate | fit | summarize``.

Output files written by ``fit`` (all comma-separated with one header line):

``report.txt``        key=value fit summary (LPML, AIC, BIC, m posterior, nu, tail probabilities)
``density.csv``       ``x, mean, lower, upper`` posterior predictive density and 95% band
``alpha_hist.csv``    ``lower, upper, count, density`` of the pooled alpha draws
``mu_hist.csv``       same for the pooled location draws
``m_posterior.csv``   ``m, probability``
``acceptance.csv``    ``batch, family, rate, delta`` per adaptation batch
``trace.csv``         ``iteration, m, nu, cluster, size, mu, gamma, alpha, beta``,
                      one row per retained iteration and cluster
``assignments.csv``   ``iteration, x0, x1, ...`` cluster index of every observation
``latents.csv``       ``iteration, x0, x1, ...`` latent rates
``data.csv``          the (scaled) data used by the chain
``manifest.txt``      key=value run record, written last and atomically

All values are on the scale of the data after division by ``--scale``.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import fit_report, predictive_density, tail_report
from .distributions import ParameterError, rng_stream
from .files import (
    FLOAT,
    TraceFormatError,
    atomic_write,
    config_from_mapping,
    config_to_mapping,
    format_report,
    parse_key_values,
    parse_report,
    read_data,
    read_trace,
    sha256_file,
    write_band,
    write_data,
    write_table,
    write_trace,
)
from .sampler import BetaNu, ChainConfig, FixedNu, _validate_data, run_chain
from .simulate import read_mixture_spec, sample_mixture, simulation_study_spec

__all__ = ["main", "build_parser", "cmd_simulate", "cmd_fit", "cmd_summarize", "FitOptions"]

MANIFEST = "manifest.txt"
GRID_POINTS = 400
GRID_QUANTILE = 0.99


class CliError(Exception):
    """Raised for user-facing failures; reported as one line on stderr."""


# ----------------------------------------------------------------- simulate

def cmd_simulate(spec_path, n: int, seed: int, out) -> None:
    if n < 1:
        raise CliError("n must be >= 1")
    if spec_path is None:
        spec = simulation_study_spec()
    else:
        with open(spec_path) as fh:
            spec = read_mixture_spec(fh.readlines())
    x, _ = sample_mixture(spec, n, rng_stream(seed))
    write_data(out, x)


# ---------------------------------------------------------------------- fit

class FitOptions:
    """Everything besides ``ChainConfig`` that determines a fit's outputs."""

    def __init__(self, header=False, cpo="marginal", grid_min=None, grid_max=None,
                 grid_points=GRID_POINTS, n_base_draws=100):
        if cpo not in ("marginal", "augmented"):
            raise ParameterError(f"cpo must be 'marginal' or 'augmented', got {cpo!r}")
        if grid_points < 2 or n_base_draws < 1:
            raise ParameterError("grid_points must be >= 2 and n_base_draws >= 1")
        self.header = header
        self.cpo = cpo
        self.grid_min = grid_min
        self.grid_max = grid_max
        self.grid_points = grid_points
        self.n_base_draws = n_base_draws

    def grid(self, x: np.ndarray) -> np.ndarray:
        lo = 0.0 if self.grid_min is None else float(self.grid_min)
        hi = float(np.quantile(x, GRID_QUANTILE)) if self.grid_max is None else float(self.grid_max)
        if not hi > lo:
            raise ParameterError(f"empty density grid [{lo}, {hi}]")
        return np.linspace(lo, hi, self.grid_points)


def diagnostics_rng(seed: int) -> np.random.Generator:
    """Stream for the predictive band, independent of the chain's stream."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(1,))))


def _fit_one(x_raw: np.ndarray, cfg: ChainConfig, outdir: Path, opts: FitOptions,
             input_path: str, input_sha: str) -> dict:
    outdir.mkdir(parents=True, exist_ok=True)
    manifest_path = outdir / MANIFEST
    if manifest_path.exists():
        manifest_path.unlink()  # a stale manifest must not vouch for new outputs
    start = time.perf_counter()
    trace = run_chain(x_raw, cfg)
    x = trace.data
    grid = opts.grid(x)
    rep = fit_report(trace, opts.cpo)
    band = predictive_density(trace, grid, opts.n_base_draws, diagnostics_rng(cfg.seed))
    tails = tail_report(trace)

    written = write_trace(outdir, trace, cfg.retained_iterations())
    atomic_write(outdir / "report.txt", format_report(rep))
    write_band(outdir / "density.csv", band)
    write_table(outdir / "alpha_hist.csv", ["lower", "upper", "count", "density"],
                tails.alpha_hist, [FLOAT, FLOAT, "%d", FLOAT])
    write_table(outdir / "mu_hist.csv", ["lower", "upper", "count", "density"],
                tails.mu_hist, [FLOAT, FLOAT, "%d", FLOAT])
    mp = sorted(rep.m_posterior.items())
    write_table(outdir / "m_posterior.csv", ["m", "probability"], np.array(mp, dtype=float),
                ["%d", FLOAT])
    acc = trace.acceptance
    with open(outdir / "acceptance.csv", "w") as fh:
        fh.write("batch,family,rate,delta\n")
        for b, fam, rate, delta in acc:
            fh.write(f"{b},{fam},{rate!r},{delta!r}\n")
    written += ["report.txt", "density.csv", "alpha_hist.csv", "mu_hist.csv",
                "m_posterior.csv", "acceptance.csv"]
    runtime = time.perf_counter() - start

    kv = {
        "format": "sggmix-manifest-1",
        "version": __version__,
        "backend": trace.backend,
        "seed": str(cfg.seed),
        "input": input_path,
        "input_sha256": input_sha,
        "header": str(opts.header).lower(),
        "cpo": opts.cpo,
        "grid_min": repr(float(grid[0])),
        "grid_max": repr(float(grid[-1])),
        "grid_points": str(opts.grid_points),
        "n_base_draws": str(opts.n_base_draws),
        "zero_weight_events": str(trace.zero_weight_events),
    }
    kv.update({f"config.{k}": v for k, v in config_to_mapping(cfg).items()})
    kv.update({f"output.{name}": sha256_file(outdir / name) for name in sorted(written)})
    kv["runtime_seconds"] = f"{runtime:.3f}"
    atomic_write(manifest_path, "".join(f"{k}={v}\n" for k, v in kv.items()))
    return rep.m_posterior


def _fit_worker(args):
    x_raw, cfg, outdir, opts, input_path, input_sha = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return _fit_one(x_raw, cfg, Path(outdir), opts, input_path, input_sha)


def cmd_fit(data_path, cfg: ChainConfig, outdir, opts: FitOptions, chains: int = 1) -> None:
    """Run ``chains`` chains on the data file and write every output under ``outdir``.

    Chain ``k`` uses seed ``cfg.seed + k``; with more than one chain each
    writes to ``outdir/chain_k`` and ``outdir/m_posterior.csv`` pools the
    retained draws of all chains.
    """
    if chains < 1:
        raise CliError("--chains must be >= 1")
    data_path = str(Path(data_path).resolve())
    x_raw = read_data(data_path, header=opts.header)
    scaled = x_raw / cfg.data_scale
    if np.any(scaled < 0):
        raise ParameterError("data must be non-negative after scaling (the location prior "
                             "has support on [0, inf))")
    _validate_data(scaled)
    sha = sha256_file(data_path)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if chains == 1:
        _fit_one(x_raw, cfg, outdir, opts, data_path, sha)
        return
    jobs = [(x_raw, replace(cfg, seed=cfg.seed + k), str(outdir / f"chain_{k}"), opts,
             data_path, sha) for k in range(chains)]
    workers = min(chains, os.cpu_count() or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            posts = list(pool.map(_fit_worker, jobs))
    else:
        posts = [_fit_worker(j) for j in jobs]
    keys = sorted(set().union(*posts))
    merged = np.array([[k, np.mean([p.get(k, 0.0) for p in posts])] for k in keys])
    write_table(outdir / "m_posterior.csv", ["m", "probability"], merged, ["%d", FLOAT])
    kv = {
        "format": "sggmix-manifest-1",
        "version": __version__,
        "seed": str(cfg.seed),
        "chains": str(chains),
        "input": data_path,
        "input_sha256": sha,
        "output.m_posterior.csv": sha256_file(outdir / "m_posterior.csv"),
    }
    kv.update({f"chain.{k}": f"chain_{k}" for k in range(chains)})
    atomic_write(outdir / MANIFEST, "".join(f"{k}={v}\n" for k, v in kv.items()))


def read_manifest(path) -> dict[str, str]:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST
    if not path.exists():
        raise TraceFormatError(f"missing manifest: {path}")
    with open(path) as fh:
        return parse_key_values(fh.readlines())


def _manifest_config(kv: dict[str, str]) -> ChainConfig:
    cfg_kv = {k.split(".", 1)[1]: v for k, v in kv.items() if k.startswith("config.")}
    if not cfg_kv:
        raise TraceFormatError("manifest has no config.* entries")
    # a manifest fully specifies nu; start from a neutral base so keys do not clash
    base = ChainConfig(nu_spec=FixedNu(0.5)) if "nu" in cfg_kv else ChainConfig(nu_spec=BetaNu(0.5, 0.5))
    return config_from_mapping(cfg_kv, base)


def _manifest_options(kv: dict[str, str]) -> FitOptions:
    try:
        return FitOptions(header=kv["header"] == "true", cpo=kv["cpo"],
                          grid_min=float(kv["grid_min"]), grid_max=float(kv["grid_max"]),
                          grid_points=int(kv["grid_points"]),
                          n_base_draws=int(kv["n_base_draws"]))
    except (KeyError, ValueError) as exc:
        raise TraceFormatError(f"manifest is missing or has a bad entry: {exc}") from None


# ---------------------------------------------------------------- summarize

def summarize_dir(d: Path) -> str:
    kv = read_manifest(d)
    cfg = _manifest_config(kv)
    opts = _manifest_options(kv)
    trace, _ = read_trace(d, cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        text = format_report(fit_report(trace, opts.cpo))
    stored = d / "report.txt"
    if stored.exists():
        with open(stored) as fh:
            old = fh.read()
        parse_report(old)
        if old != text:
            raise TraceFormatError(f"{stored}: stored report differs from the one recomputed "
                                   "from the trace")
    return text


def cmd_summarize(tracedir) -> str:
    d = Path(tracedir)
    if not d.is_dir():
        raise TraceFormatError(f"not a directory: {d}")
    kv = read_manifest(d)
    if "chains" in kv:
        parts = []
        for k in range(int(kv["chains"])):
            parts.append(f"# chain {k}\n" + summarize_dir(d / f"chain_{k}"))
        return "".join(parts)
    return summarize_dir(d)


# ---------------------------------------------------------------------- CLI

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sggmix", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="draw data from a finite SGG mixture")
    s.add_argument("--spec", help="mixture file, rows 'weight mu gamma alpha beta' "
                                  "(default: 0.7 SGG(0,3,3,2) + 0.3 SGG(5,1,0.5,3))")
    s.add_argument("--n", type=int, default=500)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    f = sub.add_parser("fit", help="run the sampler and write reports")
    f.add_argument("data", nargs="?", help="newline-delimited numbers")
    f.add_argument("--out", required=True, help="output directory")
    f.add_argument("--config", help="key=value file; flags override its values")
    f.add_argument("--from-manifest", help="re-run exactly as recorded in a manifest")
    f.add_argument("--header", action="store_true", help="skip the first line of the data file")
    f.add_argument("--seed", type=int)
    f.add_argument("--scale", type=float, help="divide the data by this before fitting")
    g = f.add_mutually_exclusive_group()
    g.add_argument("--nu", type=float, help="fix the stable index")
    g.add_argument("--nu-prior", metavar="A,B", help="beta prior on the stable index")
    f.add_argument("--iterations", type=int)
    f.add_argument("--burn-in", type=int)
    f.add_argument("--thinning", type=int)
    f.add_argument("--single-component", action="store_true",
                   help="one SGG kernel, no cluster moves")
    f.add_argument("--chains", type=int, default=1)
    f.add_argument("--cpo", choices=("marginal", "augmented"), default="marginal")
    f.add_argument("--grid-min", type=float)
    f.add_argument("--grid-max", type=float)
    f.add_argument("--grid-points", type=int, default=GRID_POINTS)
    f.add_argument("--n-base-draws", type=int, default=100)

    m = sub.add_parser("summarize", help="recompute the report from a stored trace")
    m.add_argument("tracedir")
    return p


def _fit_from_args(args, parser) -> None:
    if args.from_manifest:
        kv = read_manifest(args.from_manifest)
        if "chains" in kv:
            raise CliError("--from-manifest needs a single-chain manifest (use chain_k/manifest.txt)")
        cfg = _manifest_config(kv)
        opts = _manifest_options(kv)
        data = args.data or kv.get("input")
        if data is None:
            raise TraceFormatError("manifest records no input file")
        if sha256_file(data) != kv.get("input_sha256"):
            raise CliError(f"{data}: checksum differs from the manifest's input")
        cmd_fit(data, cfg, args.out, opts)
        return
    if args.data is None:
        parser.error("fit needs a data file or --from-manifest")
    kv = {}
    if args.config:
        with open(args.config) as fh:
            kv = parse_key_values(fh.readlines())
    flags = {"seed": args.seed, "scale": args.scale, "iterations": args.iterations,
             "burn_in": args.burn_in, "thinning": args.thinning}
    kv.update({k: str(v) for k, v in flags.items() if v is not None})
    if args.single_component:
        kv["single_component"] = "true"
    if args.nu is not None or args.nu_prior:
        for k in ("nu", "a_nu", "b_nu"):
            kv.pop(k, None)
    if args.nu is not None:
        kv["nu"] = str(args.nu)
    if args.nu_prior:
        try:
            a, b = args.nu_prior.split(",")
        except ValueError:
            parser.error("--nu-prior expects A,B")
        kv["a_nu"], kv["b_nu"] = a.strip(), b.strip()
    cfg = config_from_mapping(kv)
    opts = FitOptions(header=args.header, cpo=args.cpo, grid_min=args.grid_min,
                      grid_max=args.grid_max, grid_points=args.grid_points,
                      n_base_draws=args.n_base_draws)
    cmd_fit(args.data, cfg, args.out, opts, chains=args.chains)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            if args.n < 1:
                parser.error("--n must be >= 1")
            cmd_simulate(args.spec, args.n, args.seed, args.out)
        elif args.command == "fit":
            _fit_from_args(args, parser)
        else:
            sys.stdout.write(cmd_summarize(args.tracedir))
    except (CliError, ParameterError, TraceFormatError, OSError) as exc:
        msg = str(exc).replace("\n", " ")
        print(f"sggmix: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
