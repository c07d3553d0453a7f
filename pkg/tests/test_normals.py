import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randcond.normals import (
    bvn_cdf,
    cdf_interval_mass,
    log_interval_mass,
    std_cdf,
    std_pdf,
    std_quantile,
)

# frozen with mpmath at 40 digits
PHI_AT_1 = 0.24197072451914337
MASS_10_11 = 7.619661958203076e-24
MASS_M1_1 = 0.6826894921370859
Z_975 = 1.959963984540054

# frozen with mpmath (30 digits): P(Z1 <= h, Z2 <= k) at correlation r
BVN_TABLE = [
    (0.0, 0.0, 0.99, 0.4774732931777939),
    (1.0, -0.5, 0.95, 0.3085375133608336),
    (5.0, -6.0, 0.926, 9.865876450376981e-10),
    (5.0, -6.0, -0.926, 3.810431716025333e-11),
    (-1.0, 2.0, -0.99, 0.1359051219832798),
    (0.0, 0.0, -0.99, 0.02252670682220606),
    (2.0, 2.0, 0.9999, 0.976945264258077),
    (-8.0, -6.0, 0.95, 6.220960266588153e-16),
    (-0.3, -0.5, 0.925, 0.28081426547892424),
    (-0.3, -0.5, 0.924, 0.2804777075646024),
    (0.7, -2.0, 0.3, 0.021146672243573511),
    (-3.0, 1.0, -0.737, 2.8312437834488269e-05),
]


class TestStdPdf:
    def test_at_zero(self):
        assert std_pdf(0.0) == pytest.approx(1.0 / math.sqrt(2 * math.pi), abs=0, rel=1e-15)

    def test_infinite_arguments_vanish(self):
        assert std_pdf(math.inf) == 0.0
        assert std_pdf(-math.inf) == 0.0

    def test_at_one(self):
        assert std_pdf(1.0) == pytest.approx(PHI_AT_1, rel=1e-15)


class TestStdCdf:
    def test_examples(self):
        assert std_cdf(0.0) == 0.5
        assert std_cdf(-math.inf) == 0.0
        assert std_cdf(math.inf) == 1.0
        assert std_cdf(Z_975) == pytest.approx(0.975, abs=1e-15)

    def test_round_trip_on_log_grid(self):
        q = np.concatenate([np.geomspace(1e-12, 0.5, 200), 1.0 - np.geomspace(1e-12, 0.5, 200)])
        back = std_cdf(std_quantile(q))
        assert np.max(np.abs(back - q)) <= 1e-13


class TestStdQuantile:
    def test_examples(self):
        assert std_quantile(0.5) == 0.0
        assert std_quantile(0.975) == pytest.approx(Z_975, abs=1e-14)

    def test_symmetry(self):
        # 1e-13 holds wherever 1-q carries enough bits; further into the
        # tail the rounding of the double 1-q itself dominates
        q = np.geomspace(1e-3, 0.5, 100)
        assert np.max(np.abs(std_quantile(q) + std_quantile(1.0 - q))) <= 1e-13
        q = np.geomspace(1e-9, 0.5, 100)
        assert np.max(np.abs(std_quantile(q) + std_quantile(1.0 - q))) <= 1e-6

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5])
    def test_domain_errors(self, bad):
        with pytest.raises(ValueError):
            std_quantile(bad)


class TestIntervalMass:
    def test_whole_line(self):
        assert cdf_interval_mass(-math.inf, math.inf) == 1.0

    def test_central(self):
        assert cdf_interval_mass(-1.0, 1.0) == pytest.approx(MASS_M1_1, rel=1e-14)

    def test_deep_tail_no_underflow(self):
        got = cdf_interval_mass(10.0, 11.0)
        assert got == pytest.approx(MASS_10_11, rel=1e-13)

    def test_positive_within_pm38(self):
        edges = np.linspace(-38.0, 37.0, 60)
        masses = cdf_interval_mass(edges, edges + 0.5)
        assert np.all(masses > 0.0)

    def test_shifted_scaled(self):
        assert cdf_interval_mass(-2.0, 2.0, mean=-2.0, sd=2.0) == pytest.approx(
            std_cdf(2.0) - std_cdf(0.0), rel=1e-14
        )

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            cdf_interval_mass(1.0, 1.0)
        with pytest.raises(ValueError):
            cdf_interval_mass(0.0, 1.0, sd=0.0)

    @given(
        st.floats(-30, 30),
        st.floats(1e-6, 10),
        st.floats(0.1, 3),
    )
    @settings(max_examples=200, deadline=None)
    def test_log_consistency(self, lo, width, sd):
        hi = lo + width
        direct = cdf_interval_mass(lo, hi, sd=sd)
        via_log = math.exp(log_interval_mass(lo / sd, hi / sd))
        assert via_log == pytest.approx(direct, rel=1e-10)


class TestBvnCdf:
    def test_marginalization(self):
        for k in (-2.0, 0.0, 1.3):
            assert bvn_cdf(math.inf, k, 0.7) == pytest.approx(std_cdf(k), abs=1e-15)
            assert bvn_cdf(k, math.inf, -0.3) == pytest.approx(std_cdf(k), abs=1e-15)
        assert bvn_cdf(-math.inf, 1.0, 0.5) == 0.0

    def test_independence(self):
        for h, k in [(-1.0, 0.5), (0.3, 2.0)]:
            assert bvn_cdf(h, k, 0.0) == pytest.approx(std_cdf(h) * std_cdf(k), rel=1e-14)

    def test_sheppard(self):
        assert bvn_cdf(0.0, 0.0, 0.5) == pytest.approx(1.0 / 3.0, abs=5e-14)

    @pytest.mark.parametrize("h,k,r,want", BVN_TABLE)
    def test_frozen_oracle_values(self, h, k, r, want):
        assert bvn_cdf(h, k, r) == pytest.approx(want, abs=5e-14, rel=1e-12)

    def test_monotone_in_all_arguments(self):
        grid = np.linspace(-3, 3, 7)
        rs = np.linspace(-0.95, 0.95, 9)
        for r in rs:
            vals = bvn_cdf(grid[:, None], grid[None, :], r)
            assert np.all(np.diff(vals, axis=0) >= -1e-14)
            assert np.all(np.diff(vals, axis=1) >= -1e-14)
        for h in grid:
            for k in grid:
                vals = bvn_cdf(h, k, rs)
                assert np.all(np.diff(vals) >= -1e-14)

    def test_complement_identity(self, rng):
        h = rng.uniform(-4, 4, 300)
        k = rng.uniform(-4, 4, 300)
        r = rng.uniform(-0.999, 0.999, 300)
        lhs = std_cdf(h) - bvn_cdf(h, -k, -r)
        assert np.max(np.abs(lhs - bvn_cdf(h, k, r))) <= 1e-13

    def test_degenerate_correlation(self):
        assert bvn_cdf(1.0, 2.0, 1.0) == pytest.approx(std_cdf(1.0), abs=1e-15)
        assert bvn_cdf(1.0, -0.5, -1.0) == pytest.approx(std_cdf(1.0) + std_cdf(-0.5) - 1.0, abs=1e-15)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            bvn_cdf(0.0, 0.0, 1.01)
