import math

import numpy as np
import pytest

from randcond.intervals import QuantilePair
from randcond.lasso import (
    LassoSelection,
    NoSelectionError,
    RegressionProblem,
    kkt_residuals,
    lasso_fit,
    load_regression_csv,
    selection_event,
    selective_interval,
    truncation_interval,
    truncation_union,
)
from randcond.normals import std_quantile
from randcond.rng import stream

PAIR = QuantilePair(0.025, 0.975)


def small_problem(seed=3, n=20, d=5, snr=(1.5, -2.0)):
    rng = stream(seed, 0)
    A = rng.standard_normal((n, d))
    beta_true = np.zeros(d)
    beta_true[: len(snr)] = snr
    y = A @ beta_true + rng.standard_normal(n)
    return A, y, rng


class TestLassoFit:
    def test_zero_above_max_penalty(self):
        A, y, _ = small_problem()
        lam_max = float(np.max(np.abs(A.T @ y)))
        beta = lasso_fit(A, y, lam_max * 1.0001)
        assert np.all(beta == 0.0)

    def test_orthonormal_soft_threshold(self):
        rng = stream(4, 0)
        Q, _ = np.linalg.qr(rng.standard_normal((30, 6)))
        v = rng.standard_normal(30)
        lam = 0.4
        beta = lasso_fit(Q, v, lam)
        c = Q.T @ v
        want = np.sign(c) * np.maximum(np.abs(c) - lam, 0.0)
        assert np.max(np.abs(beta - want)) < 1e-12

    def test_kkt_certificate(self):
        A, y, _ = small_problem()
        for lam in (0.5, 2.0, 6.0):
            beta = lasso_fit(A, y, lam)
            ok, worst = kkt_residuals(A, y, lam, beta)
            assert ok, f"KKT residual {worst}"

    def test_objective_beats_perturbations(self):
        A, y, rng = small_problem()
        lam = 3.0
        beta = lasso_fit(A, y, lam)

        def objective(B):
            resid = y[:, None] - A @ B
            return 0.5 * np.sum(resid * resid, axis=0) + lam * np.sum(np.abs(B), axis=0)

        base = objective(beta[:, None])[0]
        for scale in (1e-4, 1e-2, 0.3):
            perturbed = beta[:, None] + scale * rng.standard_normal((len(beta), 10000))
            assert np.all(objective(perturbed) >= base - 1e-12)


class TestSelectionEvent:
    def test_observed_point_strictly_inside(self):
        A, y, _ = small_problem()
        sel = selection_event(A, y, 3.0)
        assert np.all(sel.A_ms @ y < sel.b_ms)
        assert 1 <= len(sel.model) <= A.shape[0]

    def test_membership_oracle(self):
        A, y, rng = small_problem()
        lam = 3.0
        sel = selection_event(A, y, lam)
        disagreements = 0
        for _ in range(300):
            probe = y + 1.5 * rng.standard_normal(len(y))
            inside = bool(np.all(sel.A_ms @ probe < sel.b_ms))
            try:
                other = selection_event(A, probe, lam)
                same = other.model == sel.model and np.array_equal(other.signs, sel.signs)
            except NoSelectionError:
                same = False
            disagreements += inside != same
        assert disagreements == 0

    def test_empty_model_raises(self):
        A, y, _ = small_problem()
        lam = float(np.max(np.abs(A.T @ y))) * 1.1
        with pytest.raises(NoSelectionError):
            selection_event(A, y, lam)

    def test_facet_crossing_flips_selection(self):
        A, y, _ = small_problem()
        lam = 3.0
        sel = selection_event(A, y, lam)
        slack = sel.b_ms - sel.A_ms @ y
        row = int(np.argmin(slack))
        direction = sel.A_ms[row]
        # step across the nearest facet along its normal
        t_hit = slack[row] / float(direction @ direction)
        probe = y + direction * t_hit * 1.01
        try:
            other = selection_event(A, probe, lam)
            same = other.model == sel.model and np.array_equal(other.signs, sel.signs)
        except NoSelectionError:
            same = False
        assert not same


class TestTruncationInterval:
    def _setup(self, seed=3, lam=3.0):
        A, y, rng = small_problem(seed)
        omega = rng.standard_normal(len(y))
        v = y + omega
        sel = selection_event(A, v, lam)
        X = A[:, list(sel.model)]
        gamma = np.zeros(len(sel.model))
        gamma[0] = 1.0
        eta = X @ np.linalg.solve(X.T @ X, gamma)
        w_obs = float(eta @ v)
        z = v - w_obs * eta / float(eta @ eta)
        return A, v, sel, eta, z, w_obs, lam

    def test_observed_inside(self):
        _, _, sel, eta, z, w_obs, _ = self._setup()
        T = truncation_interval(sel, eta, z)
        assert T.k == 1
        assert T.contains(w_obs)

    def test_probe_oracle(self):
        A, v, sel, eta, z, w_obs, lam = self._setup()
        T = truncation_interval(sel, eta, z)
        nrm2 = float(eta @ eta)
        rng = stream(12, 0)
        lo = T.intervals[0][0] if math.isfinite(T.intervals[0][0]) else w_obs - 25.0
        hi = T.intervals[0][1] if math.isfinite(T.intervals[0][1]) else w_obs + 25.0
        span = hi - lo
        for w in lo - 0.5 * span + 2.0 * span * rng.random(300):
            y_w = z + w * eta / nrm2
            inside_poly = bool(np.all(sel.A_ms @ y_w < sel.b_ms))
            assert inside_poly == T.contains(float(w))

    def test_orthogonality_validated(self):
        _, v, sel, eta, z, _, _ = self._setup()
        with pytest.raises(ValueError):
            truncation_interval(sel, eta, z + 0.5 * eta)

    def test_zero_coefficient_rows_only_gate_feasibility(self):
        # rows orthogonal to eta never move the endpoints; an infeasible
        # one kills the whole line
        eta = np.array([1.0, 0.0])
        z = np.array([0.0, 1.0])
        perp = np.array([0.0, 1.0])
        sel = LassoSelection(
            model=(0,),
            signs=np.array([1.0]),
            A_ms=np.vstack([np.array([1.0, 0.0]), perp]),
            b_ms=np.array([2.0, 5.0]),
        )
        T = truncation_interval(sel, eta, z)
        assert T.intervals == ((-math.inf, 2.0),)
        sel_bad = LassoSelection(
            model=(0,),
            signs=np.array([1.0]),
            A_ms=np.vstack([np.array([1.0, 0.0]), perp]),
            b_ms=np.array([2.0, 0.5]),
        )
        assert truncation_interval(sel_bad, eta, z) is None


class TestTruncationUnion:
    def test_contains_sign_specific_interval(self):
        A, y, rng = small_problem()
        lam = 3.0
        omega = rng.standard_normal(len(y))
        v = y + omega
        sel = selection_event(A, v, lam)
        X = A[:, list(sel.model)]
        gamma = np.zeros(len(sel.model))
        gamma[0] = 1.0
        eta = X @ np.linalg.solve(X.T @ X, gamma)
        w_obs = float(eta @ v)
        z = v - w_obs * eta / float(eta @ eta)
        T_signed = truncation_interval(sel, eta, z)
        T_union = truncation_union(A, lam, sel.model, eta, z)
        a, b = T_signed.intervals[0]
        mid = w_obs
        for w in (a * 0.9 + mid * 0.1 if math.isfinite(a) else mid - 1, mid, b * 0.9 + mid * 0.1 if math.isfinite(b) else mid + 1):
            assert T_union.contains(float(w))

    def test_probe_oracle_model_only(self):
        A, y, rng = small_problem(seed=5, d=4)
        lam = 4.0
        v = y + rng.standard_normal(len(y))
        sel = selection_event(A, v, lam)
        X = A[:, list(sel.model)]
        gamma = np.zeros(len(sel.model))
        gamma[0] = 1.0
        eta = X @ np.linalg.solve(X.T @ X, gamma)
        w_obs = float(eta @ v)
        nrm2 = float(eta @ eta)
        z = v - w_obs * eta / nrm2
        T_union = truncation_union(A, lam, sel.model, eta, z)
        for w in w_obs + 30.0 * (stream(13, 0).random(300) - 0.5):
            y_w = z + w * eta / nrm2
            try:
                same_model = selection_event(A, y_w, lam).model == sel.model
            except NoSelectionError:
                same_model = False
            assert same_model == T_union.contains(float(w))

    def test_single_variable_at_most_two_intervals(self):
        A, y, rng = small_problem(seed=9)
        lam = float(np.max(np.abs(A.T @ y))) * 0.96  # keep exactly one variable
        v = y
        sel = selection_event(A, v, lam)
        if len(sel.model) != 1:
            pytest.skip("seed did not give a single-variable model")
        X = A[:, list(sel.model)]
        eta = X @ np.linalg.solve(X.T @ X, np.array([1.0]))
        w_obs = float(eta @ v)
        z = v - w_obs * eta / float(eta @ eta)
        T = truncation_union(A, lam, sel.model, eta, z)
        assert T.k <= 2

    def test_large_model_refused(self):
        A = np.eye(14)
        with pytest.raises(ValueError):
            truncation_union(A, 1.0, tuple(range(13)), np.ones(14), np.zeros(14))


class TestSelectiveInterval:
    def _run(self, seed, condition_on_signs=True):
        A, y, rng = small_problem(seed)
        problem = RegressionProblem(A, y, 1.0, 3.0, 1.0)
        omega = rng.standard_normal(len(y))
        first_selected = selection_event(A, y + omega, 3.0).model[0]
        res = selective_interval(problem, omega, first_selected, PAIR, condition_on_signs)
        return problem, res

    def test_length_bound(self):
        for seed in (3, 5, 11):
            problem, res = self._run(seed)
            cap = math.sqrt(res.target.check_sigma2) * (std_quantile(0.975) - std_quantile(0.025)) * math.sqrt(
                1.0 + problem.sigma2 / problem.tau2
            )
            assert res.ci.length < cap

    def test_variance_consistency(self):
        problem, res = self._run(3)
        nrm2 = float(res.target.eta @ res.target.eta)
        assert res.target.check_sigma2 == pytest.approx(problem.sigma2 * nrm2, rel=1e-12)
        assert res.target.check_tau2 == pytest.approx(problem.tau2 * nrm2, rel=1e-12)

    def test_decomposition_identity(self):
        problem, res = self._run(5)
        eta = res.target.eta
        nrm2 = float(eta @ eta)
        proj = np.outer(eta, eta) / nrm2
        y_vec = problem.y
        recon = proj @ y_vec + (np.eye(len(y_vec)) - proj) @ y_vec
        assert np.max(np.abs(recon - y_vec)) < 1e-12
        z = y_vec - float(eta @ y_vec) * eta / nrm2
        assert abs(float(eta @ z)) < 1e-12 * max(float(np.linalg.norm(z)), 1.0)

    def test_sign_union_contains_signed_interval(self):
        _, res_signed = self._run(7, condition_on_signs=True)
        _, res_union = self._run(7, condition_on_signs=False)
        a, b = res_signed.T.intervals[0]
        probe = res_signed.w_obs
        for w in (probe, a + 0.1 * (probe - a) if math.isfinite(a) else probe - 1.0):
            assert res_union.T.contains(float(w))

    def test_no_selection_propagates(self):
        A, y, rng = small_problem()
        lam = float(np.max(np.abs(A.T @ y))) * 3.0
        problem = RegressionProblem(A, y, 1.0, lam, 1e-6)
        with pytest.raises(NoSelectionError):
            selective_interval(problem, np.zeros(len(y)), 0, PAIR)


class TestProblemValidation:
    def test_general_position_rejects_duplicate_columns(self):
        rng = stream(21, 0)
        base = rng.standard_normal((10, 3))
        A = np.hstack([base, base[:, :1]])
        with pytest.raises(ValueError):
            RegressionProblem(A, rng.standard_normal(10), 1.0, 1.0, 1.0)

    @pytest.mark.parametrize("field,value", [("lam", 0.0), ("tau2", 0.0), ("sigma2", -1.0)])
    def test_positivity(self, field, value):
        rng = stream(22, 0)
        kwargs = dict(A=rng.standard_normal((8, 3)), y=rng.standard_normal(8), sigma2=1.0, lam=1.0, tau2=1.0)
        kwargs[field] = value
        with pytest.raises(ValueError):
            RegressionProblem(**kwargs)


class TestCsvLoader:
    def test_round_trip(self, tmp_path):
        rng = stream(23, 0)
        A = rng.standard_normal((6, 3))
        y = rng.standard_normal(6)
        path = tmp_path / "data.csv"
        header = "y,x1,x2,x3"
        body = "\n".join(",".join(f"{v:.17g}" for v in [yi, *Ai]) for yi, Ai in zip(y, A))
        path.write_text(header + "\n" + body + "\n")
        A2, y2 = load_regression_csv(path)
        assert np.array_equal(A2, A)
        assert np.array_equal(y2, y)

    def test_rejects_single_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("y\n1.0\n2.0\n")
        with pytest.raises(ValueError):
            load_regression_csv(path)
