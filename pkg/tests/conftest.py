import math

import numpy as np
import pytest
from scipy import integrate

from randcond.distribution import CondNormalSpec, pdf
from randcond.truncation import make_truncation_set


def random_truncation_set(rng, k_max=4, span=6.0, p_inf=0.25):
    """Random disjoint union of open intervals, possibly unbounded."""
    k = int(rng.integers(1, k_max + 1))
    pts = np.sort(rng.uniform(-span, span, 2 * k))
    ivs = [(pts[2 * j], pts[2 * j + 1]) for j in range(k)]
    if rng.random() < p_inf:
        ivs[0] = (-math.inf, ivs[0][1])
    if rng.random() < p_inf:
        ivs[-1] = (ivs[-1][0], math.inf)
    return make_truncation_set(ivs)


def random_spec(rng, **kwargs):
    return CondNormalSpec(
        float(rng.uniform(-3, 3)),
        float(rng.uniform(0.3, 4.0)),
        float(rng.uniform(0.3, 4.0)),
        random_truncation_set(rng, **kwargs),
    )


def piecewise_quad(fn, upper, split_points, epsabs=1e-13):
    """Adaptive quadrature of fn over (-inf, upper], split at the given
    interior points (quad cannot mix break points with infinite limits)."""
    pts = sorted({float(v) for v in split_points if math.isfinite(v) and v < upper})
    edges = [-np.inf] + pts + [upper]
    total = 0.0
    for lo, hi in zip(edges, edges[1:]):
        val, _ = integrate.quad(fn, lo, hi, limit=300, epsabs=epsabs, epsrel=1e-12)
        total += val
    return total


def quad_cdf(spec, x, epsabs=1e-13):
    """Independent oracle: adaptive quadrature of the density over (-inf, x],
    split at the truncation endpoints."""
    pts = [v for iv in spec.T.intervals for v in iv]
    return piecewise_quad(lambda u: pdf(spec, u), x, pts, epsabs=epsabs)


@pytest.fixture
def rng():
    return np.random.default_rng(20250809)
