import math

import numpy as np
import pytest

from randcond.experiments import (
    DOMINANCE_HEADER,
    EXPECTED_HEADER,
    LENGTH_HEADER,
    DominanceConfig,
    ExperimentConfig,
    dominance_experiment,
    expected_length_curve,
    family_sets,
    format_rows,
    length_curve,
)
from randcond.intervals import QuantilePair
from randcond.rng import stream
from randcond.truncation import make_truncation_set

SMALL = ExperimentConfig(
    family="bounded",
    a_values=(1.0,),
    x_grid=tuple(np.linspace(-3, 3, 13)),
    mu_grid=(-2.0, 0.0, 2.0),
    replicates=200,
    master_seed=77,
)


class TestConfig:
    def test_family_sets(self):
        assert family_sets(SMALL)[0][1].intervals == ((-1.0, 1.0),)
        gap = ExperimentConfig(family="gap", a_values=(2.0,))
        assert family_sets(gap)[0][1].intervals == ((-math.inf, -2.0), (2.0, math.inf))

    def test_custom_requires_set(self):
        with pytest.raises(ValueError):
            ExperimentConfig(family="custom")

    def test_validation(self):
        with pytest.raises(ValueError):
            ExperimentConfig(replicates=0)
        with pytest.raises(ValueError):
            ExperimentConfig(family="nope")
        with pytest.raises(ValueError):
            ExperimentConfig(a_values=(0.0,))


class TestLengthCurve:
    def test_rows_and_bound(self):
        rows = length_curve(SMALL)
        assert len(rows) == len(SMALL.x_grid)
        for a, x, length, bound, uncond in rows:
            assert a == 1.0
            assert length < bound
            assert uncond == pytest.approx(3.919927969080108, rel=1e-12)

    def test_deterministic(self):
        assert length_curve(SMALL) == length_curve(SMALL)


class TestExpectedLengthCurve:
    def test_reproducible_and_bounded(self):
        rows1 = expected_length_curve(SMALL)
        rows2 = expected_length_curve(SMALL)
        assert rows1 == rows2
        for a, mu, mean, stderr in rows1:
            assert mean < 5.543615297398712
            assert stderr > 0

    def test_workers_do_not_change_output(self):
        serial = expected_length_curve(SMALL, workers=1)
        parallel = expected_length_curve(SMALL, workers=2)
        assert serial == parallel


class TestDominance:
    def test_carving_rows(self):
        cfg = DominanceConfig(replicates=100, master_seed=5)
        rows = dominance_experiment("carving", cfg)
        assert len(rows) == 100
        for rep, sel_len, split_len, cov_s, cov_split in rows:
            assert sel_len < split_len
            assert split_len == pytest.approx(0.7839855938160217, rel=1e-12)
            assert cov_s in (0, 1) and cov_split in (0, 1)

    def test_randresp_rows(self):
        cfg = DominanceConfig(replicates=100, master_seed=6)
        rows = dominance_experiment("randresp", cfg)
        for rep, sel_len, split_len, cov_s, cov_split in rows:
            assert sel_len < split_len
            assert split_len == pytest.approx(0.5543615297398712, rel=1e-12)

    def test_unknown_design(self):
        with pytest.raises(ValueError):
            dominance_experiment("nope", DominanceConfig(replicates=1))


class TestStreams:
    def test_same_path_same_draws(self):
        a = stream(42, 1, 2).standard_normal(5)
        b = stream(42, 1, 2).standard_normal(5)
        assert np.array_equal(a, b)

    def test_different_paths_differ(self):
        a = stream(42, 1, 2).standard_normal(5)
        b = stream(42, 1, 3).standard_normal(5)
        c = stream(43, 1, 2).standard_normal(5)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_path_validation(self):
        with pytest.raises(ValueError):
            stream(1, 2, 3, 4, 5)
        with pytest.raises(ValueError):
            stream(1, -2)


class TestCsvFormat:
    def test_headers(self):
        assert LENGTH_HEADER[0] == "a"
        assert EXPECTED_HEADER[-1] == "mc_stderr"
        assert DOMINANCE_HEADER[0] == "replicate"

    def test_seventeen_digits_round_trip(self):
        value = 1.0 / 3.0
        text = format_rows(("v",), [(value,)])
        parsed = float(text.splitlines()[1])
        assert parsed == value

    def test_integer_formatting(self):
        text = format_rows(("i", "v"), [(3, 0.5)])
        assert text.splitlines()[1] == "3,0.5"
