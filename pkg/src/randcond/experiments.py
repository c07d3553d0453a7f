"""Simulation harness: length curves, expected-length curves, dominance.

Reproduces the two figure families (interval length as a function of the
observation, and Monte-Carlo conditional expected length as a function
of the mean) and runs the carving/randomized-response dominance and
coverage experiments. All outputs are plain rows of floats, written as
CSV with 17 significant digits; a fixed master seed gives byte-identical
output regardless of how the work is partitioned.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .designs import (
    CarvingDesign,
    RandResponseDesign,
    carving_bound,
    carving_family,
    randresp_bound,
    randresp_family,
    splitting_count,
    splitting_interval_carving,
    splitting_interval_randresp,
)
from .distribution import CondNormalFamily, LawParams, sample
from .intervals import QuantilePair, interval_batch, theorem_bound
from .normals import std_quantile
from .rng import stream
from .truncation import TruncationSet, make_truncation_set

__all__ = [
    "ExperimentConfig",
    "DominanceConfig",
    "family_sets",
    "length_curve",
    "expected_length_curve",
    "dominance_experiment",
    "coverage_experiment",
    "write_csv",
    "format_rows",
]

LENGTH_HEADER = ("a", "x", "length", "bound", "unconditional_length")
EXPECTED_HEADER = ("a", "mu", "mc_mean_length", "mc_stderr")
DOMINANCE_HEADER = ("replicate", "selective_length", "splitting_length", "covered_selective", "covered_splitting")


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid and replication settings for the figure reproductions.

    family "bounded" uses T = (-a, a), "gap" uses (-inf, -a) u (a, inf),
    "custom" uses custom_T once (a is reported as nan).
    """

    family: str = "bounded"
    a_values: tuple[float, ...] = (0.5, 1.0, 2.0, 3.0)
    sigma2: float = 1.0
    tau2: float = 1.0
    pair: QuantilePair = QuantilePair(0.025, 0.975)
    x_grid: tuple[float, ...] = tuple(np.round(np.arange(-10.0, 10.0 + 1e-9, 0.1), 10))
    mu_grid: tuple[float, ...] = tuple(np.round(np.arange(-10.0, 10.0 + 1e-9, 0.25), 10))
    replicates: int = 2000
    master_seed: int = 20250809
    custom_T: TruncationSet | None = None

    def __post_init__(self):
        if self.family not in ("bounded", "gap", "custom"):
            raise ValueError("family must be bounded, gap, or custom")
        if self.family == "custom" and self.custom_T is None:
            raise ValueError("custom family needs custom_T")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not self.x_grid or not self.mu_grid:
            raise ValueError("grids must be nonempty")
        if self.family != "custom" and any(a <= 0 for a in self.a_values):
            raise ValueError("a_values must be positive")


def family_sets(cfg: ExperimentConfig) -> list[tuple[float, TruncationSet]]:
    """(a, T) pairs for the configured truncation-set family."""
    if cfg.family == "bounded":
        return [(a, make_truncation_set([(-a, a)])) for a in cfg.a_values]
    if cfg.family == "gap":
        return [(a, make_truncation_set([(-math.inf, -a), (a, math.inf)])) for a in cfg.a_values]
    return [(math.nan, cfg.custom_T)]


def length_curve(cfg: ExperimentConfig) -> list[tuple[float, float, float, float, float]]:
    """Deterministic interval lengths over the x grid (figure-1 data)."""
    bound = theorem_bound(cfg.sigma2, cfg.tau2, cfg.pair)
    uncond = math.sqrt(cfg.sigma2) * (std_quantile(cfg.pair.q2) - std_quantile(cfg.pair.q1))
    rows = []
    x = np.asarray(cfg.x_grid, dtype=float)
    for a, T in family_sets(cfg):
        fam = CondNormalFamily(cfg.sigma2, cfg.tau2, T)
        lo, hi = interval_batch(fam, x, cfg.pair)
        for xi, li in zip(x, hi - lo):
            rows.append((a, float(xi), float(li), bound, uncond))
    return rows


def _expected_length_point(cfg: ExperimentConfig, a_idx: int, mu_idx: int):
    a, T = family_sets(cfg)[a_idx]
    mu = float(cfg.mu_grid[mu_idx])
    fam = CondNormalFamily(cfg.sigma2, cfg.tau2, T)
    rng = stream(cfg.master_seed, a_idx, mu_idx)
    draws = sample(fam.at(mu), rng, size=cfg.replicates)
    lo, hi = interval_batch(fam, draws, cfg.pair)
    lengths = hi - lo
    mean = float(np.mean(lengths))
    stderr = float(np.std(lengths, ddof=1) / math.sqrt(len(lengths))) if len(lengths) > 1 else 0.0
    return (a, mu, mean, stderr)


def expected_length_curve(cfg: ExperimentConfig, workers: int = 1):
    """Monte-Carlo conditional expected lengths (figure-2 data).

    Each (a, mu) grid point draws cfg.replicates conditional samples
    from its own counter-derived stream, so results do not depend on
    worker count or execution order.
    """
    points = [(ai, mi) for ai in range(len(family_sets(cfg))) for mi in range(len(cfg.mu_grid))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_expected_length_point_star, [(cfg, ai, mi) for ai, mi in points], chunksize=8))
    else:
        rows = [_expected_length_point(cfg, ai, mi) for ai, mi in points]
    return rows


def _expected_length_point_star(args):
    return _expected_length_point(*args)


@dataclass(frozen=True)
class DominanceConfig:
    """Replication settings for the design-vs-splitting comparison."""

    n: int = 100
    sigma2: float = 1.0
    delta: float = 0.75
    tau2: float = 1.0
    T: TruncationSet = make_truncation_set([(0.0, math.inf)])
    mu_true: float = 0.0
    pair: QuantilePair = QuantilePair(0.025, 0.975)
    replicates: int = 2000
    master_seed: int = 20250809


def dominance_experiment(design_kind: str, cfg: DominanceConfig):
    """Per-replicate selective vs splitting lengths and coverage.

    Replicates that fail the selection event are redrawn (conditional
    sampling); rows are ordered by replicate index. selective_length <
    splitting_length holds deterministically because the splitting
    length equals the design's length bound.
    """
    if design_kind == "carving":
        design = CarvingDesign(cfg.n, cfg.delta, cfg.sigma2, cfg.T)
        fam = carving_family(design)
        n_sel = design.n_select
    elif design_kind == "randresp":
        design = RandResponseDesign(cfg.n, cfg.sigma2, cfg.tau2, cfg.T)
        fam = randresp_family(design)
        m = splitting_count(design)
    else:
        raise ValueError("design_kind must be carving or randresp")

    sigma = math.sqrt(cfg.sigma2)
    xs = np.empty(cfg.replicates)
    split_means = np.empty(cfg.replicates)
    for rep in range(cfg.replicates):
        rng = stream(cfg.master_seed, rep)
        for _ in range(100000):
            data = cfg.mu_true + sigma * rng.standard_normal(cfg.n)
            if design_kind == "carving":
                stat = float(np.mean(data[:n_sel]))
                split_mean = float(np.mean(data[n_sel:]))
            else:
                noise = math.sqrt(cfg.tau2 / cfg.n) * rng.standard_normal()
                stat = float(np.mean(data)) + noise
                split_mean = float(np.mean(data[cfg.n - m:]))
            if cfg.T.contains(stat):
                xs[rep] = float(np.mean(data))
                split_means[rep] = split_mean
                break
        else:
            raise RuntimeError("selection event has negligible probability under mu_true")

    lo, hi = interval_batch(fam, xs, cfg.pair)
    rows = []
    for rep in range(cfg.replicates):
        if design_kind == "carving":
            split = splitting_interval_carving(design, split_means[rep], cfg.pair)
        else:
            split = splitting_interval_randresp(design, split_means[rep], cfg.pair)
        rows.append(
            (
                rep,
                float(hi[rep] - lo[rep]),
                split.length,
                int(lo[rep] <= cfg.mu_true <= hi[rep]),
                int(split.lower <= cfg.mu_true <= split.upper),
            )
        )
    return rows


def coverage_experiment(fam: CondNormalFamily, mu_true: float, pair: QuantilePair, replicates: int, master_seed: int):
    """Empirical conditional coverage of the selective interval."""
    rng = stream(master_seed, 0)
    draws = sample(fam.at(mu_true), rng, size=replicates)
    lo, hi = interval_batch(fam, draws, pair)
    covered = (lo <= mu_true) & (mu_true <= hi)
    return float(np.mean(covered)), lo, hi


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return "nan"
    return format(v, ".17g")


def format_rows(header, rows) -> str:
    """CSV text: UTF-8-safe, '.' decimals, 17 significant digits."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_csv(header, rows, path=None) -> str:
    text = format_rows(header, rows)
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
