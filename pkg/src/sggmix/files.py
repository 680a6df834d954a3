"""Text formats for data, configs, traces, reports and manifests.

Everything is plain text: comma-separated columns with a single header
line, or ``key=value`` lines.  Floats are written with 17 significant
digits so every file round-trips exactly.
"""

from __future__ import annotations

import hashlib
import math
import os
import tempfile
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import _backend
from .diagnostics import FitReport, PredictiveBand
from .distributions import ParameterError
from .sampler import BaseMeasure, BetaNu, ChainConfig, FixedNu, GammaHyper, Trace

__all__ = [
    "TraceFormatError",
    "read_data",
    "write_data",
    "parse_key_values",
    "config_from_mapping",
    "config_to_mapping",
    "write_trace",
    "read_trace",
    "format_report",
    "parse_report",
    "write_band",
    "read_band",
    "write_table",
    "read_table",
    "sha256_file",
    "atomic_write",
]

FLOAT = "%.17g"
TRACE_FILES = ("trace.csv", "assignments.csv", "latents.csv", "data.csv")


class TraceFormatError(ValueError):
    """A stored trace or report is missing, truncated or malformed."""


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def read_data(path, header: bool = False) -> np.ndarray:
    """Newline-delimited numbers, optionally preceded by one header line."""
    values = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or (header and lineno == 1):
                continue
            try:
                v = float(line)
            except ValueError:
                raise ParameterError(f"{path}:{lineno}: not a number: {line!r}") from None
            if not math.isfinite(v):
                raise ParameterError(f"{path}:{lineno}: non-finite value {line!r}")
            values.append(v)
    if not values:
        raise ParameterError(f"{path}: no data")
    return np.array(values)


def write_data(path, x) -> None:
    atomic_write(path, "".join(f"{v!r}\n" for v in map(float, x)))


def parse_key_values(lines) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


_INT_KEYS = ("iterations", "burn_in", "thinning", "r_aux", "batch_size", "seed")
_FLOAT_KEYS = ("target_rate_low", "target_rate_high", "initial_delta")
_BOOL_KEYS = ("reuse_aux", "hastings_correction", "adapt_after_burn_in", "single_component")
_PRIOR_KEYS = tuple(f"{ab}_{k}" for k in ("mu", "gamma", "alpha", "beta") for ab in "ab")
CONFIG_KEYS = (_INT_KEYS + _FLOAT_KEYS + _BOOL_KEYS + _PRIOR_KEYS
               + ("nu", "a_nu", "b_nu", "scale"))


def _bool(key, value: str) -> bool:
    v = value.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ParameterError(f"{key}: expected a boolean, got {value!r}")


def config_from_mapping(kv: dict[str, str], base: ChainConfig | None = None) -> ChainConfig:
    """Build a ``ChainConfig`` from ``key=value`` strings layered over ``base``.

    ``nu=<value>`` fixes the stable index; ``a_nu``/``b_nu`` give it a
    beta prior.  ``scale`` is the data divisor.
    """
    base = base or ChainConfig()
    unknown = sorted(set(kv) - set(CONFIG_KEYS))
    if unknown:
        raise ParameterError(f"unknown config keys: {', '.join(unknown)}")
    args = {f.name: getattr(base, f.name) for f in fields(ChainConfig)}
    try:
        for k in _INT_KEYS:
            if k in kv:
                args[k] = int(kv[k])
        for k in _FLOAT_KEYS:
            if k in kv:
                args[k] = float(kv[k])
        for k in _BOOL_KEYS:
            if k in kv:
                args[k] = _bool(k, kv[k])
        if "scale" in kv:
            args["data_scale"] = float(kv["scale"])
        g0 = base.base_measure
        hyper = {}
        for name in ("mu", "gamma", "alpha", "beta"):
            cur = getattr(g0, name)
            hyper[name] = GammaHyper(float(kv.get(f"a_{name}", cur.shape)),
                                     float(kv.get(f"b_{name}", cur.rate)))
        args["base_measure"] = BaseMeasure(**hyper)
        if "nu" in kv and ("a_nu" in kv or "b_nu" in kv):
            raise ParameterError("give either nu (fixed) or a_nu/b_nu (beta prior), not both")
        if "nu" in kv:
            args["nu_spec"] = FixedNu(float(kv["nu"]))
        elif "a_nu" in kv or "b_nu" in kv:
            cur = base.nu_spec if isinstance(base.nu_spec, BetaNu) else BetaNu(0.5, 0.5)
            args["nu_spec"] = BetaNu(float(kv.get("a_nu", cur.a)), float(kv.get("b_nu", cur.b)))
    except ValueError as exc:
        if isinstance(exc, ParameterError):
            raise
        raise ParameterError(f"bad config value: {exc}") from None
    return ChainConfig(**args)


def config_to_mapping(cfg: ChainConfig) -> dict[str, str]:
    out = {k: str(getattr(cfg, k)) for k in _INT_KEYS}
    out.update({k: repr(float(getattr(cfg, k))) for k in _FLOAT_KEYS})
    out.update({k: str(getattr(cfg, k)).lower() for k in _BOOL_KEYS})
    for name in ("mu", "gamma", "alpha", "beta"):
        h = getattr(cfg.base_measure, name)
        out[f"a_{name}"] = repr(float(h.shape))
        out[f"b_{name}"] = repr(float(h.rate))
    if isinstance(cfg.nu_spec, FixedNu):
        out["nu"] = repr(float(cfg.nu_spec.value))
    else:
        out["a_nu"] = repr(float(cfg.nu_spec.a))
        out["b_nu"] = repr(float(cfg.nu_spec.b))
    out["scale"] = repr(float(cfg.data_scale))
    return out


def write_table(path, header: list[str], rows: np.ndarray, fmt) -> None:
    rows = np.asarray(rows)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        if rows.size:
            np.savetxt(fh, rows, fmt=fmt, delimiter=",")


def read_table(path, ncols: int | None = None, dtype=float) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    if not path.exists():
        raise TraceFormatError(f"missing file: {path}")
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        body = fh.read()
    if not header or header == [""]:
        raise TraceFormatError(f"{path}: empty file")
    if ncols is not None and len(header) != ncols:
        raise TraceFormatError(f"{path}: expected {ncols} columns, header has {len(header)}")
    if body and not body.endswith("\n"):
        raise TraceFormatError(f"{path}: truncated (last line incomplete)")
    lines = body.splitlines()
    if not lines:
        return header, np.zeros((0, len(header)), dtype=dtype)
    try:
        data = np.loadtxt(lines, delimiter=",", dtype=dtype, ndmin=2)
    except ValueError as exc:
        raise TraceFormatError(f"{path}: malformed row ({exc})") from None
    if data.shape[1] != len(header):
        raise TraceFormatError(f"{path}: rows have {data.shape[1]} columns, header {len(header)}")
    return header, data


def write_trace(outdir, trace: Trace, iterations: np.ndarray) -> list[str]:
    """Write the retained draws; returns the file names written."""
    outdir = Path(outdir)
    L, n = trace.length, trace.n
    it_rows = np.repeat(iterations, trace.m)
    within = np.arange(trace.cluster_sizes.size) - np.repeat(trace.offsets[:-1], trace.m)
    rows = np.column_stack([it_rows, np.repeat(trace.m, trace.m), np.repeat(trace.nu, trace.m),
                            within, trace.cluster_sizes, trace.cluster_theta])
    write_table(outdir / "trace.csv",
                ["iteration", "m", "nu", "cluster", "size", "mu", "gamma", "alpha", "beta"],
                rows, ["%d", "%d", FLOAT, "%d", "%d", FLOAT, FLOAT, FLOAT, FLOAT])
    obs_header = ["iteration"] + [f"x{i}" for i in range(n)]
    write_table(outdir / "assignments.csv", obs_header,
                np.column_stack([iterations, trace.assignment]), "%d")
    write_table(outdir / "latents.csv", obs_header,
                np.column_stack([iterations, trace.latents]), ["%d"] + [FLOAT] * n)
    write_table(outdir / "data.csv", ["x"], trace.data[:, None], FLOAT)
    return list(TRACE_FILES)


def read_trace(outdir, config: ChainConfig) -> tuple[Trace, np.ndarray]:
    """Rebuild a ``Trace`` from ``write_trace`` output.

    The augmented log-likelihood is recomputed from the stored draws with
    the same kernel used during sampling, so it is bit-identical.
    """
    outdir = Path(outdir)
    _, xcol = read_table(outdir / "data.csv", 1)
    x = np.ascontiguousarray(xcol[:, 0])
    n = x.size
    _, tr = read_table(outdir / "trace.csv", 9)
    _, asg = read_table(outdir / "assignments.csv", n + 1, dtype=np.int64)
    _, lat = read_table(outdir / "latents.csv", n + 1)
    L = config.retained
    if asg.shape[0] != L or lat.shape[0] != L:
        raise TraceFormatError(f"{outdir}: expected {L} retained iterations, found "
                               f"{asg.shape[0]} assignment rows and {lat.shape[0]} latent rows")
    iterations = asg[:, 0]
    if not np.array_equal(lat[:, 0].astype(np.int64), iterations):
        raise TraceFormatError(f"{outdir}: assignment and latent iterations disagree")
    it_col = tr[:, 0].astype(np.int64)
    m = np.array([np.count_nonzero(it_col == t) for t in iterations], dtype=np.int64)
    if m.sum() != tr.shape[0] or np.any(m == 0):
        raise TraceFormatError(f"{outdir}/trace.csv: cluster rows do not match the retained iterations")
    offsets = np.concatenate(([0], np.cumsum(m)))
    z = np.ascontiguousarray(asg[:, 1:])
    if np.any(z < 0) or np.any(z >= m[:, None]):
        raise TraceFormatError(f"{outdir}/assignments.csv: cluster index out of range")
    sizes = tr[:, 4].astype(np.int64)
    theta = np.ascontiguousarray(tr[:, 5:9])
    nu = tr[offsets[:-1], 2]
    y = np.ascontiguousarray(lat[:, 1:])
    ll = np.empty((L, n))
    for l in range(L):
        th = np.ascontiguousarray(theta[offsets[l]:offsets[l + 1]])
        _backend.kernels.aug_loglik(x, y[l], z[l], th, ll[l])
    trace = Trace(data=x, config=config, m=m, nu=nu, offsets=offsets, cluster_theta=theta,
                  cluster_sizes=sizes, assignment=z, latents=y, loglik=ll, acceptance=[])
    return trace, iterations


def format_report(rep: FitReport) -> str:
    lines = [
        f"lpml={rep.lpml!r}",
        f"aic={rep.aic!r}",
        f"bic={rep.bic!r}",
        f"m_mode={rep.m_mode}",
        f"nu_mean={rep.nu_mean!r}",
        f"nu_lower95={rep.nu_lower!r}",
        f"nu_upper95={rep.nu_upper!r}",
        f"p_alpha_lt_1={rep.p_heavy!r}",
        f"p_alpha_1_to_2={rep.p_finite_mean!r}",
        f"p_alpha_ge_2={rep.p_finite_variance!r}",
        f"cpo_likelihood={rep.cpo_likelihood}",
        f"zero_cpo_terms={rep.zero_cpo_terms}",
        f"retained={rep.retained}",
    ]
    lines += [f"m_posterior.{k}={v!r}" for k, v in sorted(rep.m_posterior.items())]
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> FitReport:
    kv = parse_key_values(text.splitlines())
    try:
        mpost = {int(k.split(".", 1)[1]): float(v) for k, v in kv.items()
                 if k.startswith("m_posterior.")}
        return FitReport(
            lpml=float(kv["lpml"]), aic=float(kv["aic"]), bic=float(kv["bic"]),
            m_posterior=mpost, nu_mean=float(kv["nu_mean"]),
            nu_lower=float(kv["nu_lower95"]), nu_upper=float(kv["nu_upper95"]),
            p_heavy=float(kv["p_alpha_lt_1"]), p_finite_mean=float(kv["p_alpha_1_to_2"]),
            p_finite_variance=float(kv["p_alpha_ge_2"]), cpo_likelihood=kv["cpo_likelihood"],
            zero_cpo_terms=int(kv["zero_cpo_terms"]), retained=int(kv["retained"]),
        )
    except (KeyError, ValueError, IndexError) as exc:
        raise TraceFormatError(f"malformed report: {exc}") from None


def write_band(path, band: PredictiveBand) -> None:
    write_table(path, ["x", "mean", "lower", "upper"],
                np.column_stack([band.grid, band.mean, band.lower, band.upper]), FLOAT)


def read_band(path) -> PredictiveBand:
    _, d = read_table(path, 4)
    return PredictiveBand(d[:, 0], d[:, 1], d[:, 2], d[:, 3])
