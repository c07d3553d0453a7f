"""Sampling designs that reduce to the randomized conditional law.

Data carving selects on the first delta*n observations and infers on
all n; selection with a randomized response selects on noise-perturbed
data and infers on the original. Both map onto (mu, sigma2~, tau2~, T)
conditional laws, so the bounded-length interval machinery applies
as-is. The classical sample-splitting comparators are provided too;
their lengths equal the corresponding Theorem-type bounds, which is
what makes the dominance strict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .distribution import CondNormalFamily, CondNormalSpec
from .intervals import ConfidenceInterval, QuantilePair
from .normals import std_quantile
from .truncation import TruncationSet

__all__ = [
    "CarvingDesign",
    "RandResponseDesign",
    "carving_spec",
    "carving_family",
    "carving_bound",
    "splitting_interval_carving",
    "randresp_spec",
    "randresp_family",
    "randresp_bound",
    "splitting_interval_randresp",
]


def _check_integer(value: float, what: str) -> int:
    rounded = round(value)
    if abs(value - rounded) > 1e-9 or rounded < 1:
        raise ValueError(f"{what} must be a positive integer, got {value}")
    return int(rounded)


@dataclass(frozen=True)
class CarvingDesign:
    """Select on the first delta*n observations, infer on all n."""

    n: int
    delta: float
    sigma2: float
    T: TruncationSet

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie strictly in (0, 1)")
        if self.sigma2 <= 0.0:
            raise ValueError("sigma2 must be positive")
        _check_integer(self.delta * self.n, "delta * n")
        if (1.0 - self.delta) * self.n < 1.0 - 1e-9:
            raise ValueError("need at least one held-out observation")

    @property
    def n_select(self) -> int:
        return _check_integer(self.delta * self.n, "delta * n")

    @property
    def n_holdout(self) -> int:
        return self.n - self.n_select


@dataclass(frozen=True)
class RandResponseDesign:
    """Select on X_i + omega_i with omega ~ N(0, tau2 I), infer on X."""

    n: int
    sigma2: float
    tau2: float
    T: TruncationSet

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if self.sigma2 <= 0.0:
            raise ValueError("sigma2 must be positive")
        if self.tau2 <= 0.0:
            raise ValueError("tau2 must be positive")


def carving_family(d: CarvingDesign) -> CondNormalFamily:
    """The law of xbar_n | xbar_{delta n} in T: sigma2/n and (sigma2/n)(1-delta)/delta."""
    s2 = d.sigma2 / d.n
    return CondNormalFamily(s2, s2 * (1.0 - d.delta) / d.delta, d.T)


def carving_spec(d: CarvingDesign, mu: float) -> CondNormalSpec:
    return carving_family(d).at(mu)


def carving_bound(d: CarvingDesign, pair: QuantilePair) -> float:
    """(sigma/sqrt(n)) (z_q2 - z_q1) / sqrt(1 - delta)."""
    return (
        math.sqrt(d.sigma2 / d.n)
        * (std_quantile(pair.q2) - std_quantile(pair.q1))
        / math.sqrt(1.0 - d.delta)
    )


def _classical_interval(xbar: float, se: float, pair: QuantilePair) -> ConfidenceInterval:
    return ConfidenceInterval(
        lower=xbar - se * std_quantile(pair.q2),
        upper=xbar - se * std_quantile(pair.q1),
        pair=pair,
        bound=math.inf,
        x=xbar,
    )


def splitting_interval_carving(d: CarvingDesign, xbar_holdout: float, pair: QuantilePair) -> ConfidenceInterval:
    """Classical z-interval on the (1-delta)n held-out observations.

    Its length sigma (z_q2 - z_q1) / sqrt((1-delta) n) equals the
    carving bound, so carving dominates it on every dataset.
    """
    se = math.sqrt(d.sigma2 / d.n_holdout)
    return _classical_interval(xbar_holdout, se, pair)


def randresp_family(d: RandResponseDesign) -> CondNormalFamily:
    """The law of xbar_n | xbar_n + omega_bar in T: sigma2/n and tau2/n."""
    return CondNormalFamily(d.sigma2 / d.n, d.tau2 / d.n, d.T)


def randresp_spec(d: RandResponseDesign, mu: float) -> CondNormalSpec:
    return randresp_family(d).at(mu)


def randresp_bound(d: RandResponseDesign, pair: QuantilePair) -> float:
    """(sigma/sqrt(n)) (z_q2 - z_q1) sqrt(1 + sigma2/tau2)."""
    return (
        math.sqrt(d.sigma2 / d.n)
        * (std_quantile(pair.q2) - std_quantile(pair.q1))
        * math.sqrt(1.0 + d.sigma2 / d.tau2)
    )


def splitting_count(d: RandResponseDesign) -> int:
    """m = n tau2 / (sigma2 + tau2); must come out a positive integer."""
    return _check_integer(d.n * d.tau2 / (d.sigma2 + d.tau2), "n * tau2 / (sigma2 + tau2)")


def splitting_interval_randresp(d: RandResponseDesign, xbar_m: float, pair: QuantilePair) -> ConfidenceInterval:
    """Classical z-interval on the last m = n tau2/(sigma2+tau2) observations."""
    m = splitting_count(d)
    se = math.sqrt(d.sigma2 / m)
    return _classical_interval(xbar_m, se, pair)
