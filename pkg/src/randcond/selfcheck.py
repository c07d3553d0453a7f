"""Built-in oracle suite: closed forms cross-checked against quadrature,
finite differences, and a Kolmogorov-Smirnov test of the exact sampler.

This is a reduced, fast version of the full test suite meant for the
command line; each check reports one pass/fail line.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, stats

from .distribution import (
    CondNormalSpec,
    b_gap,
    cdf,
    dg_dx,
    dpdf_dmu,
    dpdf_dx,
    g_cdf,
    owen_integral,
    pdf,
    sample,
)
from .intervals import QuantilePair, interval, theorem_bound
from .rng import stream
from .truncation import make_truncation_set

__all__ = ["run_selfcheck"]


def _random_spec(rng, k_max=3):
    k = int(rng.integers(1, k_max + 1))
    pts = np.sort(rng.uniform(-4.0, 4.0, 2 * k))
    ivs = [(pts[2 * j], pts[2 * j + 1]) for j in range(k)]
    if rng.random() < 0.25:
        ivs[0] = (-math.inf, ivs[0][1])
    if rng.random() < 0.25:
        ivs[-1] = (ivs[-1][0], math.inf)
    return CondNormalSpec(
        float(rng.uniform(-2, 2)),
        float(rng.uniform(0.3, 3.0)),
        float(rng.uniform(0.3, 3.0)),
        make_truncation_set(ivs),
    )


def _piecewise_quad(fn, upper, split_points):
    pts = sorted({float(v) for v in split_points if math.isfinite(v) and v < upper})
    edges = [-np.inf] + pts + [upper]
    total = 0.0
    for lo, hi in zip(edges, edges[1:]):
        val, _ = integrate.quad(fn, lo, hi, limit=200, epsabs=1e-12, epsrel=1e-12)
        total += val
    return total


def _quad_cdf(spec, x):
    return _piecewise_quad(lambda u: pdf(spec, u), x, [v for iv in spec.T.intervals for v in iv])


def run_selfcheck(seed: int = 0):
    """Run the oracle suite; returns a list of (name, passed, detail)."""
    rng = stream(seed, 1)
    results = []

    worst = 0.0
    for _ in range(8):
        spec = _random_spec(rng)
        x = float(rng.uniform(-4, 4))
        worst = max(worst, abs(cdf(spec, x) - _quad_cdf(spec, x)))
    results.append(("cdf closed form vs adaptive quadrature", worst <= 1e-9, f"max abs diff {worst:.2e}"))

    worst = 0.0
    for _ in range(5):
        spec = _random_spec(rng)
        x = float(rng.uniform(-3, 3))
        h = 1e-5
        fd_mu = (pdf(spec.family.at(spec.mu + h), x) - pdf(spec.family.at(spec.mu - h), x)) / (2 * h)
        fd_x = (pdf(spec, x + h) - pdf(spec, x - h)) / (2 * h)
        ref = max(abs(fd_mu), 1e-12)
        worst = max(worst, abs(dpdf_dmu(spec, x) - fd_mu) / ref)
        ref = max(abs(fd_x), 1e-12)
        worst = max(worst, abs(dpdf_dx(spec, x) - fd_x) / ref)
    results.append(("density derivatives vs finite differences", worst <= 1e-5, f"max rel err {worst:.2e}"))

    worst = 0.0
    for _ in range(5):
        spec = _random_spec(rng)
        x = float(rng.uniform(-3, 3))
        v = float(rng.uniform(-3, 3))
        h = 1e-5
        fd = (g_cdf(spec, x + h, v) - g_cdf(spec, x - h, v)) / (2 * h)
        worst = max(worst, abs(dg_dx(spec, x, v) - fd) / max(abs(fd), 1e-12))
    results.append(("dG/dx identity vs finite differences", worst <= 1e-5, f"max rel err {worst:.2e}"))

    worst = 0.0
    for _ in range(4):
        spec = _random_spec(rng)
        x = float(rng.uniform(-3, 3))
        ref = _piecewise_quad(
            lambda u: (u - spec.mu) / spec.sigma2 * pdf(spec, u), x, [v for iv in spec.T.intervals for v in iv]
        )
        worst = max(worst, abs(owen_integral(spec, x) - ref))
    results.append(("antiderivative identity vs quadrature", worst <= 1e-8, f"max abs diff {worst:.2e}"))

    n_draws = 20000
    ks_crit = 1.63 / math.sqrt(n_draws)
    worst = 0.0
    for _ in range(2):
        spec = _random_spec(rng)
        draws = sample(spec, rng, size=n_draws)
        ks = stats.kstest(draws, lambda t: cdf(spec, np.asarray(t))).statistic
        worst = max(worst, ks)
    results.append(("sampler KS against cdf (99% level)", worst < ks_crit, f"max KS {worst:.4f}, crit {ks_crit:.4f}"))

    violated = 0
    count = 0
    for _ in range(150):
        spec = _random_spec(rng)
        q1 = float(rng.uniform(0.005, 0.5))
        q2 = float(rng.uniform(q1, 0.995))
        pair = QuantilePair(q1, q2)
        x = float(rng.uniform(-8, 8))
        ci = interval(spec.family, x, pair)
        count += 1
        if not ci.length < theorem_bound(spec.sigma2, spec.tau2, pair):
            violated += 1
    results.append(("interval length strictly below the bound", violated == 0, f"{violated}/{count} violations"))

    worst = -math.inf
    for _ in range(4):
        spec = _random_spec(rng)
        for x in np.linspace(-4, 4, 7):
            worst = max(worst, b_gap(spec, float(x)))
    results.append(("bound-gap function negative", worst < 0.0, f"max value {worst:.2e}"))

    return results
