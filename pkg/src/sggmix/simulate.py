"""Synthetic data from finite SGG mixtures."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distributions import ParameterError, SggParams, sgg_logpdf

__all__ = [
    "MixtureSpec",
    "simulation_study_spec",
    "sample_mixture",
    "mixture_pdf",
    "read_mixture_spec",
]


@dataclass(frozen=True)
class MixtureSpec:
    """Finite mixture ``sum_k w_k SGG(theta_k)``."""

    components: tuple[tuple[float, SggParams], ...]

    def __post_init__(self):
        comps = tuple((float(w), p) for w, p in self.components)
        if not comps:
            raise ParameterError("a mixture needs at least one component")
        for w, p in comps:
            if not 0 < w <= 1:
                raise ParameterError(f"component weights must lie in (0, 1], got {w}")
            if not isinstance(p, SggParams):
                raise ParameterError("components must carry SggParams")
        total = sum(w for w, _ in comps)
        if abs(total - 1.0) > 1e-9:
            raise ParameterError(f"component weights must sum to 1, got {total}")
        object.__setattr__(self, "components", comps)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.components])


def simulation_study_spec() -> MixtureSpec:
    """``0.7 SGG(0, 3, 3, 2) + 0.3 SGG(5, 1, 0.5, 3)``: light-tailed bulk plus a heavy tail at 5."""
    return MixtureSpec(((0.7, SggParams(0.0, 3.0, 3.0, 2.0)),
                        (0.3, SggParams(5.0, 1.0, 0.5, 3.0))))


def sample_mixture(spec: MixtureSpec, n: int, rng: np.random.Generator):
    """Draw ``n`` points; returns ``(data, labels)`` with 0-based component labels."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    cum = np.cumsum(spec.weights)
    labels = np.searchsorted(cum, rng.random(n) * cum[-1], side="right")
    labels = np.minimum(labels, len(cum) - 1)
    x = np.empty(n)
    for k, (_, p) in enumerate(spec.components):
        idx = np.flatnonzero(labels == k)
        y = rng.standard_gamma(p.alpha, idx.size) / p.beta
        x[idx] = p.mu + rng.standard_gamma(p.gamma, idx.size) / y
    return x, labels


def mixture_pdf(spec: MixtureSpec, x):
    xa = np.asarray(x, dtype=float)
    out = np.zeros_like(xa)
    for w, p in spec.components:
        out = out + w * np.exp(sgg_logpdf(xa, p))
    if out.ndim == 0:
        return float(out)
    return out


def read_mixture_spec(lines: Sequence[str]) -> MixtureSpec:
    """Parse ``weight, mu, gamma, alpha, beta`` rows (commas or whitespace, ``#`` comments)."""
    comps = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.replace(",", " ").split()
        if len(fields) != 5:
            raise ParameterError(f"line {lineno}: expected 5 fields "
                                 f"(weight mu gamma alpha beta), got {len(fields)}")
        try:
            w, mu, g, a, b = (float(f) for f in fields)
        except ValueError:
            raise ParameterError(f"line {lineno}: non-numeric field in {raw.strip()!r}") from None
        if not all(math.isfinite(v) for v in (w, mu, g, a, b)):
            raise ParameterError(f"line {lineno}: non-finite value")
        comps.append((w, SggParams(mu, g, a, b)))
    return MixtureSpec(tuple(comps))
