"""Lasso model selection on a randomized response, with selective CIs.

The selection event {m_hat(v) = m, s_hat(v) = s} of the Lasso at input v
is an open polyhedron {v: A_ms v < b_ms}; intersected with the line
{z + w * eta/||eta||^2} it becomes an open interval in w, which is the
truncation set of the conditional law of eta'Y. The solver is plain
cyclic coordinate descent with a duality-gap stop; every fit is
certified by an explicit KKT check so the polyhedron never depends on
solver internals being trusted.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .distribution import CondNormalFamily
from .intervals import ConfidenceInterval, QuantilePair, interval
from .truncation import TruncationSet, make_truncation_set

__all__ = [
    "RegressionProblem",
    "LassoSelection",
    "ContrastTarget",
    "NoSelectionError",
    "lasso_fit",
    "kkt_residuals",
    "selection_event",
    "truncation_interval",
    "truncation_union",
    "selective_interval",
    "SelectiveResult",
    "load_regression_csv",
]

_ACTIVE_TOL = 1e-9
_KKT_TOL = 1e-8


class NoSelectionError(RuntimeError):
    """The Lasso selected the empty model; no selective interval exists."""


def _check_general_position(A: np.ndarray, rng=None) -> None:
    n, d = A.shape
    size = min(n, d)
    if d <= 12:
        subsets = itertools.combinations(range(d), size)
    else:
        rng = np.random.default_rng(0) if rng is None else rng
        subsets = (tuple(np.sort(rng.choice(d, size=size, replace=False))) for _ in range(200))
    for cols in subsets:
        sub = A[:, list(cols)]
        sv = np.linalg.svd(sub, compute_uv=False)
        if sv[-1] <= 1e-10 * max(sv[0], 1.0):
            raise ValueError(f"columns {cols} are (numerically) linearly dependent; not in general position")


@dataclass(frozen=True)
class RegressionProblem:
    """Fixed design A, response y, known sigma2, penalty lam, noise tau2."""

    A: np.ndarray
    y: np.ndarray
    sigma2: float
    lam: float
    tau2: float

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if A.ndim != 2 or y.ndim != 1 or A.shape[0] != y.shape[0]:
            raise ValueError("A must be (n, d) and y length n")
        if self.lam <= 0.0:
            raise ValueError("lam must be positive")
        if self.tau2 <= 0.0:
            raise ValueError("tau2 must be positive")
        if self.sigma2 <= 0.0:
            raise ValueError("sigma2 must be positive")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "y", y)
        _check_general_position(A)


@dataclass(frozen=True)
class LassoSelection:
    """Selected model, signs, and the polyhedron {v: A_ms v < b_ms}."""

    model: tuple[int, ...]
    signs: np.ndarray
    A_ms: np.ndarray
    b_ms: np.ndarray


@dataclass(frozen=True)
class ContrastTarget:
    """gamma in model coordinates and the induced eta = A_m (A_m'A_m)^-1 gamma."""

    gamma: np.ndarray
    eta: np.ndarray
    check_sigma2: float
    check_tau2: float


def lasso_fit(A: np.ndarray, v: np.ndarray, lam: float, *, gap_tol: float = 1e-10, max_iter: int = 100000) -> np.ndarray:
    """Cyclic coordinate descent with Gram updates; duality-gap stopping.

    Returns the (unique, by general position) minimizer of
    0.5 ||v - A beta||^2 + lam ||beta||_1. Raises on non-convergence
    with the residual KKT violation in the message.
    """
    A = np.asarray(A, dtype=float)
    v = np.asarray(v, dtype=float)
    n, d = A.shape
    G = A.T @ A
    c = A.T @ v
    vv = float(v @ v)
    diag = np.diag(G).copy()
    beta = np.zeros(d)
    t = np.zeros(d)  # G @ beta, maintained incrementally

    for sweep in range(max_iter):
        for j in range(d):
            r_j = c[j] - t[j] + diag[j] * beta[j]
            new = math.copysign(max(abs(r_j) - lam, 0.0), r_j) / diag[j]
            delta = new - beta[j]
            if delta != 0.0:
                beta[j] = new
                t += G[:, j] * delta
        # duality gap from the scaled residual dual point
        grad = c - t  # A'(v - A beta)
        l1 = float(np.abs(beta).sum())
        rr = vv - 2.0 * float(beta @ c) + float(beta @ t)
        rr = max(rr, 0.0)
        primal = 0.5 * rr + lam * l1
        gmax = float(np.max(np.abs(grad))) if d else 0.0
        s = 1.0 if gmax <= lam else lam / gmax
        rv = vv - float(beta @ c)
        dual = -0.5 * s * s * rr + s * rv
        gap = primal - dual
        # stop on the duality gap AND a margin under the KKT certificate
        # the selection event will be built from
        kkt_worst = 0.0
        for j in range(d):
            if abs(beta[j]) > _ACTIVE_TOL:
                resid = abs(grad[j] - lam * math.copysign(1.0, beta[j]))
            else:
                resid = max(abs(grad[j]) - lam, 0.0)
            kkt_worst = max(kkt_worst, resid)
        if gap <= gap_tol + 1e-14 * primal and kkt_worst <= 0.1 * _KKT_TOL:
            return beta
    ok, worst = kkt_residuals(A, v, lam, beta)
    raise RuntimeError(f"lasso coordinate descent did not converge: duality gap stop missed, worst KKT residual {worst:.3e}")


def kkt_residuals(A, v, lam, beta, *, active_tol: float = _ACTIVE_TOL, tol: float = _KKT_TOL):
    """Certify a claimed solution: subgradient conditions within tol."""
    grad = A.T @ (v - A @ beta)
    worst = 0.0
    ok = True
    for j, bj in enumerate(beta):
        if abs(bj) > active_tol:
            resid = abs(grad[j] - lam * math.copysign(1.0, bj))
        else:
            resid = max(abs(grad[j]) - lam, 0.0)
        worst = max(worst, resid)
        if resid > tol:
            ok = False
    return ok, worst


def _polyhedron(A: np.ndarray, lam: float, model: tuple[int, ...], signs: np.ndarray):
    """Lee-et-al style selection polyhedron rows for a given (m, s)."""
    n, d = A.shape
    m = list(model)
    X = A[:, m]
    s = np.asarray(signs, dtype=float)
    gram = X.T @ X
    gram_inv = np.linalg.inv(gram)
    pinv = gram_inv @ X.T  # (X'X)^-1 X'
    P = X @ pinv
    rest = [j for j in range(d) if j not in set(m)]
    rows = []
    offs = []
    if rest:
        Xr = A[:, rest]
        M = Xr.T @ (np.eye(n) - P) / lam
        w = Xr.T @ (pinv.T @ s)
        rows.append(M)
        offs.append(1.0 - w)
        rows.append(-M)
        offs.append(1.0 + w)
    rows.append(-(s[:, None] * pinv))
    offs.append(-lam * (s * (gram_inv @ s)))
    return np.vstack(rows), np.concatenate(offs)


def selection_event(A: np.ndarray, v: np.ndarray, lam: float) -> LassoSelection:
    """Fit the Lasso at v and read off (model, signs, polyhedron).

    Raises NoSelectionError when no variable enters. The returned
    polyhedron satisfies A_ms v < b_ms for the observed v (checked).
    """
    beta = lasso_fit(A, v, lam)
    ok, worst = kkt_residuals(A, v, lam, beta)
    if not ok:
        raise RuntimeError(f"KKT certificate failed after fit: residual {worst:.3e}")
    active = np.flatnonzero(np.abs(beta) > _ACTIVE_TOL)
    if active.size == 0:
        raise NoSelectionError("lasso selected the empty model")
    model = tuple(int(j) for j in active)
    signs = np.sign(beta[active])
    A_ms, b_ms = _polyhedron(A, lam, model, signs)
    slack = A_ms @ v - b_ms
    if np.any(slack >= 0.0):
        worst_row = float(np.max(slack))
        raise RuntimeError(f"observed response violates its own selection polyhedron (slack {worst_row:.3e})")
    return LassoSelection(model=model, signs=signs, A_ms=A_ms, b_ms=b_ms)


def contrast_target(A: np.ndarray, model: tuple[int, ...], gamma, sigma2: float, tau2: float) -> ContrastTarget:
    """eta = A_m (A_m'A_m)^-1 gamma and the contrast-scaled variances."""
    gamma = np.asarray(gamma, dtype=float)
    X = A[:, list(model)]
    if gamma.shape != (X.shape[1],):
        raise ValueError(f"gamma must have length |model| = {X.shape[1]}")
    eta = X @ np.linalg.solve(X.T @ X, gamma)
    nrm2 = float(eta @ eta)
    if nrm2 <= 0.0:
        raise ValueError("eta must be nonzero")
    return ContrastTarget(gamma=gamma, eta=eta, check_sigma2=sigma2 * nrm2, check_tau2=tau2 * nrm2)


def truncation_interval(sel: LassoSelection, eta: np.ndarray, z: np.ndarray) -> TruncationSet:
    """The open w-interval where z + w eta/||eta||^2 stays in the polyhedron."""
    eta = np.asarray(eta, dtype=float)
    z = np.asarray(z, dtype=float)
    nrm2 = float(eta @ eta)
    along = abs(float(eta @ z)) / math.sqrt(nrm2)
    if along > 1e-10 * max(float(np.linalg.norm(z)), 1.0):
        raise ValueError("z must be orthogonal to eta")
    coef = sel.A_ms @ (eta / nrm2)
    base = sel.b_ms - sel.A_ms @ z
    scale = float(np.max(np.abs(coef))) if coef.size else 0.0
    ctol = 1e-12 * max(scale, 1.0)
    vlo, vup = -math.inf, math.inf
    for ci, bi in zip(coef, base):
        if ci > ctol:
            vup = min(vup, bi / ci)
        elif ci < -ctol:
            vlo = max(vlo, bi / ci)
        elif bi <= 0.0:
            return None  # infeasible along the whole line
    if not vlo < vup:
        return None
    return make_truncation_set([(vlo, vup)])


def truncation_union(A: np.ndarray, lam: float, model: tuple[int, ...], eta: np.ndarray, z: np.ndarray) -> TruncationSet:
    """Union of the sign-specific intervals: the truncation set for m only.

    Enumerates all 2^|m| sign vectors; |m| > 12 is refused (the
    enumeration would be astronomically bigger than any sane model).
    """
    if len(model) > 12:
        raise ValueError("truncation_union enumerates 2^|m| sign vectors; |m| > 12 refused")
    pieces = []
    for bits in itertools.product((-1.0, 1.0), repeat=len(model)):
        signs = np.asarray(bits)
        A_ms, b_ms = _polyhedron(A, lam, model, signs)
        seg = truncation_interval(LassoSelection(model, signs, A_ms, b_ms), eta, z)
        if seg is not None:
            pieces.extend(seg.intervals)
    if not pieces:
        raise ValueError("no sign pattern is feasible on the conditioning line")
    return make_truncation_set(pieces)


@dataclass(frozen=True)
class SelectiveResult:
    """Everything the demo reports for one selective inference run."""

    ci: ConfidenceInterval
    selection: LassoSelection
    target: ContrastTarget
    T: TruncationSet
    x_obs: float
    w_obs: float


def selective_interval(
    problem: RegressionProblem,
    omega: np.ndarray,
    gamma,
    pair: QuantilePair,
    condition_on_signs: bool = True,
) -> SelectiveResult:
    """Selective CI for eta'theta after Lasso selection on y + omega.

    Selection runs on v = y + omega; the conditional law of eta'y given
    the selection event and the off-line component of v is the
    randomized conditional law with variances sigma2 ||eta||^2 and
    tau2 ||eta||^2 and the line-section truncation set.
    """
    omega = np.asarray(omega, dtype=float)
    v = problem.y + omega
    sel = selection_event(problem.A, v, problem.lam)
    target = contrast_target(problem.A, sel.model, _expand_gamma(gamma, sel), problem.sigma2, problem.tau2)
    eta = target.eta
    nrm2 = float(eta @ eta)
    w_obs = float(eta @ v)
    z = v - w_obs * eta / nrm2
    if condition_on_signs:
        T = truncation_interval(sel, eta, z)
        if T is None:
            raise RuntimeError("observed point is not inside its own truncation interval")
    else:
        T = truncation_union(problem.A, problem.lam, sel.model, eta, z)
    if not T.contains(w_obs):
        raise RuntimeError("observed eta'(y+omega) escaped the truncation set")
    fam = CondNormalFamily(target.check_sigma2, target.check_tau2, T)
    x_obs = float(eta @ problem.y)
    ci = interval(fam, x_obs, pair)
    return SelectiveResult(ci=ci, selection=sel, target=target, T=T, x_obs=x_obs, w_obs=w_obs)


def _expand_gamma(gamma, sel: LassoSelection):
    if np.ndim(gamma) == 0:
        idx = int(gamma)
        if idx not in sel.model:
            raise ValueError(f"column {idx} was not selected (model = {sel.model})")
        out = np.zeros(len(sel.model))
        out[sel.model.index(idx)] = 1.0
        return out
    return np.asarray(gamma, dtype=float)


def load_regression_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """(A, y) from CSV: header row, response first, then design columns."""
    data = np.genfromtxt(path, delimiter=",", skip_header=1, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if data.shape[1] < 2:
        raise ValueError("need a response column plus at least one design column")
    if np.isnan(data).any():
        raise ValueError("CSV contains missing or non-numeric entries")
    return data[:, 1:], data[:, 0]
