"""The conditional law of X given X+U in T.

X ~ N(mu, sigma2), U ~ N(0, tau2) independent, T a truncation set.
Provides the CDF/PDF, an exact two-stage sampler, and the closed-form
derivative/antiderivative identities used by the interval-length
analysis, each exposed so property tests can check them against
independent oracles.

Two evaluation routes back the CDF: a bivariate-normal closed form
(fast; (X, X+U) is jointly Gaussian) and a windowed Gauss-Legendre
evaluation of the per-interval numerator integral in log space (robust;
used automatically when the closed form would lose relative accuracy,
e.g. when the selection probability is tiny or a bvn difference
cancels). Quantile inversion far in the tails exercises the second
route heavily.

The module-level batch kernels work on flat arrays of heterogeneous
parameters (per-element sigma2/tau2 and interval endpoints padded to a
common k with zero-width sentinels), which is what lets the simulation
stress suites run thousands of quantile inversions in lockstep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import logsumexp

from ._kernels import route_c_kernel
from .normals import (
    bvn_cdf,
    log_interval_mass,
    std_cdf,
    std_logcdf,
    std_logpdf,
    std_pdf,
    std_quantile,
    std_quantile_from_log,
)
from .truncation import TruncationSet

__all__ = [
    "CondNormalFamily",
    "CondNormalSpec",
    "selection_prob",
    "log_selection_prob",
    "cdf",
    "sf",
    "log_cdf",
    "log_sf",
    "pdf",
    "log_pdf",
    "cond_given_sum",
    "g_cdf",
    "sample",
    "sample_with_conditioning",
    "dpdf_dmu",
    "dpdf_dx",
    "owen_integral",
    "b_gap",
]

# thresholds gating the closed-form route; calibrated against mpmath
_MIN_LOG_DEN = math.log(1e-10)
_MIN_DIFF_RATIO = 1e-3
_GL_X, _GL_W = leggauss(32)
_TAIL_SPAN = 45.0  # e^-45 relative truncation for exponential tail pieces


@dataclass(frozen=True)
class CondNormalFamily:
    """(sigma2, tau2, T): the conditional law with the mean left free."""

    sigma2: float
    tau2: float
    T: TruncationSet

    def __post_init__(self):
        if not self.sigma2 > 0.0:
            raise ValueError("sigma2 must be positive")
        if self.tau2 < 0.0:
            raise ValueError("tau2 must be nonnegative")
        if not isinstance(self.T, TruncationSet):
            raise TypeError("T must be a TruncationSet")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def tau(self) -> float:
        return math.sqrt(self.tau2)

    @property
    def s2(self) -> float:
        return self.sigma2 + self.tau2

    @property
    def s(self) -> float:
        return math.sqrt(self.s2)

    @property
    def rho2(self) -> float:
        return self.tau2 / (self.sigma2 + self.tau2)

    @property
    def rho(self) -> float:
        return math.sqrt(self.rho2)

    def at(self, mu: float) -> "CondNormalSpec":
        return CondNormalSpec(float(mu), self.sigma2, self.tau2, self.T)


@dataclass(frozen=True)
class CondNormalSpec:
    """Full parameterization (mu, sigma2, tau2, T) of X | X+U in T."""

    mu: float
    sigma2: float
    tau2: float
    T: TruncationSet

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise ValueError("mu must be finite")
        if not self.sigma2 > 0.0:
            raise ValueError("sigma2 must be positive")
        if self.tau2 < 0.0:
            raise ValueError("tau2 must be nonnegative")
        if not isinstance(self.T, TruncationSet):
            raise TypeError("T must be a TruncationSet")

    @property
    def family(self) -> CondNormalFamily:
        return CondNormalFamily(self.sigma2, self.tau2, self.T)

    @property
    def rho2(self) -> float:
        return self.family.rho2


class LawParams:
    """Flat batch of law parameters for the vectorized kernels.

    sigma2, tau2: scalars or (M,) arrays; a, b: (k,) or (M, k) interval
    endpoints, padded rows marked by zero-width sentinels (a == b == 0).
    """

    __slots__ = ("sigma2", "tau2", "a", "b", "sigma", "tau", "s2", "s", "rho", "corr")

    def __init__(self, sigma2, tau2, a, b):
        self.sigma2 = np.asarray(sigma2, dtype=float)
        self.tau2 = np.asarray(tau2, dtype=float)
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.sigma = np.sqrt(self.sigma2)
        self.tau = np.sqrt(self.tau2)
        self.s2 = self.sigma2 + self.tau2
        self.s = np.sqrt(self.s2)
        self.rho = np.sqrt(self.tau2 / self.s2)
        self.corr = self.sigma / self.s  # corr(X, X+U)

    @classmethod
    def from_family(cls, family: CondNormalFamily) -> "LawParams":
        return cls(family.sigma2, family.tau2, family.T.lower_endpoints, family.T.upper_endpoints)

    def reflected(self) -> "LawParams":
        a = np.flip(-self.b, axis=-1)
        b = np.flip(-self.a, axis=-1)
        return LawParams(self.sigma2, self.tau2, a, b)

    def col(self, arr):
        """Broadcast a per-element array against the interval axis."""
        return np.asarray(arr, dtype=float)[..., None]


def pad_intervals(sets: list[TruncationSet]) -> tuple[np.ndarray, np.ndarray]:
    """Stack truncation sets into (M, kmax) endpoint arrays.

    Padding rows use the zero-width sentinel (0, 0), which every kernel
    treats as log-mass -inf.
    """
    kmax = max(T.k for T in sets)
    a = np.zeros((len(sets), kmax))
    b = np.zeros((len(sets), kmax))
    for i, T in enumerate(sets):
        a[i, : T.k] = T.lower_endpoints
        b[i, : T.k] = T.upper_endpoints
    return a, b


def _std_endpoints(p: LawParams, mu, scale):
    """Standardized interval endpoints (mu, scale broadcast over rows)."""
    mu_c = np.asarray(mu, dtype=float)[..., None]
    sc = np.asarray(scale, dtype=float)
    sc_c = sc[..., None] if sc.ndim else sc
    with np.errstate(invalid="ignore"):
        alpha = (p.a - mu_c) / sc_c
        beta = (p.b - mu_c) / sc_c
    alpha = np.where(np.isinf(p.a), p.a, alpha)
    beta = np.where(np.isinf(p.b), p.b, beta)
    return alpha, beta


def log_den_params(p: LawParams, mu):
    """log P(X+U in T) over the batch."""
    alpha, beta = _std_endpoints(p, mu, p.s)
    return logsumexp(log_interval_mass(alpha, beta), axis=-1)


def _route_a_lognum(p: LawParams, mu, x, log_den):
    """Closed-form numerator log P(X<=x, X+U in T) plus a health flag.

    The per-interval rectangle probability is a difference of two bvn
    values; taking the complemented second coordinate when the interval
    sits right of the mean keeps the minuend on the small side. A health
    flag marks evaluations where the difference still cancels.
    """
    ka, kb = _std_endpoints(p, mu, p.s)
    h = (x - mu) / p.sigma
    H = np.broadcast_to(h[..., None], ka.shape)
    r = np.broadcast_to(p.col(p.corr) if p.corr.ndim else p.corr, ka.shape)

    flip = ka >= 0.0
    k_hi = np.where(flip, -ka, kb)
    k_lo = np.where(flip, -kb, ka)
    r_or = np.where(flip, -r, r)
    v_hi, v_lo = bvn_cdf(np.stack([H, H]), np.stack([k_hi, k_lo]), np.stack([r_or, r_or]))

    diff = np.maximum(v_hi - v_lo, 0.0)
    pad = p.a == p.b
    diff = np.where(pad, 0.0, diff)
    ok_interval = pad | (diff >= _MIN_DIFF_RATIO * v_hi) | (v_hi <= 1e-300)
    ok = np.all(ok_interval, axis=-1) & (log_den >= _MIN_LOG_DEN)
    num = diff.sum(axis=-1)
    with np.errstate(divide="ignore"):
        lognum = np.log(num)
    return lognum, ok


def _logmass_tau_derivs(aa, bb, tau, u):
    """log mass, and first/second log-derivatives, of u -> P(a < u+U < b)."""
    with np.errstate(invalid="ignore"):
        za = (aa - u) / tau
        zb = (bb - u) / tau
    za = np.where(np.isinf(aa), aa, za)
    zb = np.where(np.isinf(bb), bb, zb)
    lm = log_interval_mass(za, zb)
    live = lm > -np.inf
    fa = np.isfinite(aa) & live
    fb = np.isfinite(bb) & live
    with np.errstate(over="ignore", invalid="ignore"):
        ra = np.where(fa, np.exp(np.where(fa, std_logpdf(za) - lm, -np.inf)), 0.0) / tau
        rb = np.where(fb, np.exp(np.where(fb, std_logpdf(zb) - lm, -np.inf)), 0.0) / tau
        ta = np.where(fa, za * ra, 0.0) / tau
        tb = np.where(fb, zb * rb, 0.0) / tau
    m1 = ra - rb
    m2 = (ta - tb) - m1 * m1
    return lm, m1, m2


def _ell(sigma, tau, mu, aa, bb, u):
    """Log integrand of the numerator: log phi_sigma(u-mu) + log mass_tau(u)."""
    lg = std_logpdf((u - mu) / sigma) - np.log(sigma)
    with np.errstate(invalid="ignore"):
        za = (aa - u) / tau
        zb = (bb - u) / tau
    za = np.where(np.isinf(aa), aa, za)
    zb = np.where(np.isinf(bb), bb, zb)
    return lg + log_interval_mass(za, zb)


def _find_modes(sigma2, tau2, mu, aa, bb):
    """Mode and curvature scale of the per-interval log integrand.

    Safeguarded Newton on the (strictly decreasing) derivative of the
    log-concave integrand; all arrays are flat and aligned. The mode
    only positions the quadrature window, so relative 1e-8 is ample.
    """
    tau = np.sqrt(tau2)
    s2 = sigma2 + tau2
    mid = np.clip(mu, aa, bb)
    u = (tau2 * mu + sigma2 * mid) / s2

    def psi_and_curv(u):
        _, m1, m2 = _logmass_tau_derivs(aa, bb, tau, u)
        return -(u - mu) / sigma2 + m1, -1.0 / sigma2 + m2

    scale = np.broadcast_to(np.sqrt(sigma2) * tau / np.sqrt(s2), u.shape)
    lo = u - scale
    hi = u + scale
    step = scale.copy()
    for _ in range(90):
        p_lo, _ = psi_and_curv(lo)
        bad = p_lo <= 0.0
        if not bad.any():
            break
        lo = lo - np.where(bad, step, 0.0)
        step = np.where(bad, step * 2.0, step)
    step = scale.copy()
    for _ in range(90):
        p_hi, _ = psi_and_curv(hi)
        bad = p_hi >= 0.0
        if not bad.any():
            break
        hi = hi + np.where(bad, step, 0.0)
        step = np.where(bad, step * 2.0, step)

    u = np.clip(u, lo, hi)
    for _ in range(30):
        psi, curv = psi_and_curv(u)
        lo = np.where(psi > 0.0, u, lo)
        hi = np.where(psi < 0.0, u, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = u - psi / curv
        inside = (newton > lo) & (newton < hi)
        u_next = np.where(inside, newton, 0.5 * (lo + hi))
        done = np.abs(u_next - u) <= 1e-8 * (1.0 + np.abs(u))
        u = u_next
        if np.all(done):
            break
    _, curv = psi_and_curv(u)
    delta = 1.0 / np.sqrt(np.maximum(-curv, 1.0 / sigma2))
    return u, delta


def _route_c_lognum(p: LawParams, mu, x):
    """Robust per-interval numerator log P(X<=x, a_i < X+U < b_i).

    Windowed Gauss-Legendre around the integrand mode plus
    slope-normalized exponential tail pieces, all nodes evaluated in one
    pass and combined by log-sum-exp. mu, x are flat (M,) arrays;
    returns (M,) log numerators summed over intervals.
    """
    M = mu.shape[0]
    a = np.broadcast_to(p.a, (M,) + p.a.shape[-1:])
    b = np.broadcast_to(p.b, (M,) + p.b.shape[-1:])
    k = a.shape[-1]
    aa = np.ascontiguousarray(a.ravel())
    bb = np.ascontiguousarray(b.ravel())
    muf = np.repeat(mu, k)
    xf = np.repeat(x, k)
    sigma2 = np.repeat(np.broadcast_to(p.sigma2, (M,)), k)
    tau2 = np.repeat(np.broadcast_to(p.tau2, (M,)), k)

    if route_c_kernel is not None:
        out = np.empty(muf.shape, dtype=float)
        route_c_kernel(sigma2, tau2, muf, xf, aa, bb, _GL_X, _GL_W, out)
        return logsumexp(out.reshape(M, k), axis=-1)

    sigma = np.sqrt(sigma2)
    tau = np.sqrt(tau2)

    mode, delta = _find_modes(sigma2, tau2, muf, aa, bb)
    e1 = mode - 12.0 * delta
    e2 = mode + 12.0 * delta

    def slope_at(u):
        _, m1, _ = _logmass_tau_derivs(aa, bb, tau, u)
        return -(u - muf) / sigma2 + m1

    nodes = []
    coefs = []

    # central panels [e1, -4d], [-4d, +4d], [+4d, e2], clipped at the cut x
    for lo, hi in ((e1, mode - 4.0 * delta), (mode - 4.0 * delta, mode + 4.0 * delta), (mode + 4.0 * delta, e2)):
        lo_c = np.minimum(lo, xf)
        hi_c = np.minimum(hi, xf)
        half = 0.5 * np.maximum(hi_c - lo_c, 0.0)
        mid = 0.5 * (hi_c + lo_c)
        nodes.append(mid[:, None] + half[:, None] * _GL_X)
        coefs.append(half[:, None] * _GL_W)

    # left tail from c = min(x, e1) toward -inf; slope-normalized, so the
    # transformed integrand decays at least like e^-t by log-concavity
    c = np.minimum(xf, e1)
    g_left = np.maximum(slope_at(c), 1e-300)
    t = 0.5 * _TAIL_SPAN * (_GL_X + 1.0)
    nodes.append(c[:, None] - t / g_left[:, None])
    coefs.append((0.5 * _TAIL_SPAN / g_left)[:, None] * _GL_W)

    # right tail from e2 up to x, present only when x > e2
    g_right = np.maximum(-slope_at(e2), 1e-300)
    t_max = np.maximum(np.minimum((xf - e2) * g_right, _TAIL_SPAN), 0.0)
    t2 = 0.5 * t_max[:, None] * (_GL_X + 1.0)
    nodes.append(e2[:, None] + t2 / g_right[:, None])
    coefs.append((0.5 * t_max / g_right)[:, None] * _GL_W)

    u_all = np.concatenate(nodes, axis=1)
    c_all = np.concatenate(coefs, axis=1)
    le = _ell(sigma[:, None], tau[:, None], muf[:, None], aa[:, None], bb[:, None], u_all)
    le = np.where(c_all > 0.0, le, -np.inf)
    ref = np.max(le, axis=1)
    ref_safe = np.where(np.isfinite(ref), ref, 0.0)
    with np.errstate(divide="ignore"):
        total = np.sum(np.exp(le - ref_safe[:, None]) * c_all, axis=1)
        log_terms = np.where(np.isfinite(ref), ref_safe + np.log(total), -np.inf)
    return logsumexp(log_terms.reshape(M, k), axis=-1)


def _log_cdf_tau0(p: LawParams, mu, x):
    """Exact truncated-normal log CDF (tau2 = 0 limit)."""
    b_cut = np.minimum(p.b, np.asarray(x, dtype=float)[..., None])
    clipped = LawParams(p.sigma2, 0.0, p.a, b_cut)
    valid = clipped.a < clipped.b
    alpha, beta = _std_endpoints(clipped, mu, p.sigma)
    lm = np.where(valid, log_interval_mass(np.where(valid, alpha, 0.0), np.where(valid, beta, 1.0)), -np.inf)
    log_num = logsumexp(lm, axis=-1)
    alpha0, beta0 = _std_endpoints(p, mu, p.sigma)
    log_den = logsumexp(log_interval_mass(alpha0, beta0), axis=-1)
    return np.minimum(log_num - log_den, 0.0)


def log_cdf_params(p: LawParams, mu, x):
    """log F_mu(x) over a flat batch of heterogeneous laws."""
    mu_arr, x_arr = np.broadcast_arrays(np.asarray(mu, dtype=float), np.asarray(x, dtype=float))
    shape = mu_arr.shape
    muf = mu_arr.ravel()
    xf = x_arr.ravel()
    out = np.empty(muf.shape, dtype=float)

    inf_hi = xf == np.inf
    inf_lo = xf == -np.inf
    out[inf_hi] = 0.0
    out[inf_lo] = -np.inf
    rest = ~(inf_hi | inf_lo)
    if np.any(rest):
        sub = _subset_params(p, rest, shape)
        mur, xr = muf[rest], xf[rest]
        if np.all(p.tau2 == 0.0):
            out[rest] = _log_cdf_tau0(sub, mur, xr)
        else:
            log_den = log_den_params(sub, mur)
            lognum = np.full(mur.shape, -np.inf)
            shallow = log_den >= _MIN_LOG_DEN
            bad = ~shallow
            if np.any(shallow):
                sub_a = _subset_params(sub, shallow, mur.shape)
                la, ok = _route_a_lognum(sub_a, mur[shallow], xr[shallow], log_den[shallow])
                lognum[shallow] = la
                bad_a = np.zeros(mur.shape, dtype=bool)
                bad_a[shallow] = ~ok
                bad = bad | bad_a
            if np.any(bad):
                lognum[bad] = _route_c_lognum(_subset_params(sub, bad, mur.shape), mur[bad], xr[bad])
            out[rest] = np.minimum(lognum - log_den, 0.0)
    return out.reshape(shape)


def _subset_params(p: LawParams, mask, full_shape):
    """Restrict per-element parameter arrays to a boolean subset."""
    def pick(arr, col=False):
        arr = np.asarray(arr, dtype=float)
        if col:
            if arr.ndim > 1:
                return arr[mask]
            return arr
        if arr.ndim:
            return np.broadcast_to(arr, full_shape).ravel()[mask.ravel()]
        return arr

    return LawParams(pick(p.sigma2), pick(p.tau2), pick(p.a, col=True), pick(p.b, col=True))


def log_sf_params(p: LawParams, mu, x):
    """log P(X > x) by reflection."""
    return log_cdf_params(p.reflected(), -np.asarray(mu, dtype=float), -np.asarray(x, dtype=float))


def cdf_params(p: LawParams, mu, x):
    mu_arr, x_arr = np.broadcast_arrays(np.asarray(mu, dtype=float), np.asarray(x, dtype=float))
    lf = np.atleast_1d(log_cdf_params(p, mu_arr, x_arr))
    out = np.exp(lf)
    big = lf > -0.2
    if np.any(big):
        mask = big.reshape(mu_arr.shape)
        sub = _subset_params(p, mask, mu_arr.shape)
        ls = log_sf_params(sub, np.atleast_1d(mu_arr)[big], np.atleast_1d(x_arr)[big])
        out[big] = -np.expm1(ls)
    return out.reshape(mu_arr.shape)


def _trunc_std_quantile(alpha, beta, frac):
    """Quantile of the standard normal truncated to (alpha, beta).

    frac may broadcast an extra leading axis. Tail-stable on both
    sides; alpha/beta may be +-inf.
    """
    alpha_b, beta_b, frac_b = np.broadcast_arrays(alpha, beta, frac)
    out = np.empty(frac_b.shape, dtype=float)

    right = alpha_b >= 0.0
    left = ~right & (beta_b <= 0.0)
    mid = ~right & ~left

    if np.any(right):
        a_, b_, p_ = alpha_b[right], beta_b[right], frac_b[right]
        lsf_b = np.where(np.isinf(b_), -np.inf, std_logcdf(-np.where(np.isinf(b_), 0.0, b_)))
        with np.errstate(divide="ignore"):
            lq = np.logaddexp(np.log1p(-p_) + std_logcdf(-a_), np.log(p_) + lsf_b)
        out[right] = -std_quantile_from_log(lq)
    if np.any(left):
        a_, b_, p_ = alpha_b[left], beta_b[left], frac_b[left]
        lcdf_a = np.where(np.isinf(a_), -np.inf, std_logcdf(np.where(np.isinf(a_), 0.0, a_)))
        with np.errstate(divide="ignore"):
            lq = np.logaddexp(np.log1p(-p_) + lcdf_a, np.log(p_) + std_logcdf(b_))
        out[left] = std_quantile_from_log(lq)
    if np.any(mid):
        a_, b_, p_ = alpha_b[mid], beta_b[mid], frac_b[mid]
        lo = std_cdf(a_)
        hi = std_cdf(b_)
        out[mid] = std_quantile(np.clip(lo + p_ * (hi - lo), 1e-300, 1.0 - 1e-16))
    return out


# ---------------------------------------------------------------------------
# spec-level API


def _params_of(spec_or_family) -> LawParams:
    if isinstance(spec_or_family, CondNormalSpec):
        return LawParams.from_family(spec_or_family.family)
    return LawParams.from_family(spec_or_family)


def log_selection_prob(spec: CondNormalSpec) -> float:
    p = _params_of(spec)
    if spec.tau2 == 0.0:
        alpha, beta = _std_endpoints(p, np.asarray(spec.mu), p.sigma)
        return float(logsumexp(log_interval_mass(alpha, beta), axis=-1))
    return float(log_den_params(p, np.asarray(spec.mu)))


def selection_prob(spec: CondNormalSpec) -> float:
    """P(X+U in T); strictly positive."""
    return float(np.exp(log_selection_prob(spec)))


def cdf(spec: CondNormalSpec, x):
    """Conditional CDF F(x) = P(X <= x | X+U in T)."""
    out = cdf_params(_params_of(spec), spec.mu, np.asarray(x, dtype=float))
    return out if np.ndim(x) else float(out)


def sf(spec: CondNormalSpec, x):
    """Conditional survival P(X > x | X+U in T)."""
    p = _params_of(spec).reflected()
    out = cdf_params(p, -spec.mu, -np.asarray(x, dtype=float))
    return out if np.ndim(x) else float(out)


def log_cdf(spec: CondNormalSpec, x):
    out = log_cdf_params(_params_of(spec), spec.mu, np.asarray(x, dtype=float))
    return out if np.ndim(x) else float(out)


def log_sf(spec: CondNormalSpec, x):
    out = log_sf_params(_params_of(spec), spec.mu, np.asarray(x, dtype=float))
    return out if np.ndim(x) else float(out)


def _log_mass_tau_at(spec: CondNormalSpec, x):
    """log sum_i [Phi((b_i-x)/tau) - Phi((a_i-x)/tau)] (numerator factor)."""
    p = _params_of(spec)
    alpha, beta = _std_endpoints(p, x, p.tau)
    return logsumexp(log_interval_mass(alpha, beta), axis=-1)


def log_pdf(spec: CondNormalSpec, x):
    fam = spec.family
    x_arr = np.asarray(x, dtype=float)
    if spec.tau2 == 0.0:
        inside = np.array([spec.T.contains(float(v)) for v in np.atleast_1d(x_arr)]).reshape(x_arr.shape)
        p = _params_of(spec)
        alpha, beta = _std_endpoints(p, np.asarray(spec.mu), p.sigma)
        log_den = logsumexp(log_interval_mass(alpha, beta), axis=-1)
        base = std_logpdf((x_arr - spec.mu) / fam.sigma) - math.log(fam.sigma)
        out = np.where(inside, base - log_den, -np.inf)
    else:
        base = std_logpdf((x_arr - spec.mu) / fam.sigma) - math.log(fam.sigma)
        out = base + _log_mass_tau_at(spec, x_arr) - log_den_params(_params_of(spec), np.broadcast_to(spec.mu, x_arr.shape))
    return out if np.ndim(x) else float(out)


def pdf(spec: CondNormalSpec, x):
    """Conditional density: phi_sigma(x-mu) * tau-mass(x) / selection prob."""
    out = np.exp(log_pdf(spec, x))
    return out if np.ndim(x) else float(out)


def cond_given_sum(spec: CondNormalSpec, v: float) -> tuple[float, float]:
    """Mean and variance of X | X+U = v (requires tau2 > 0)."""
    if spec.tau2 == 0.0:
        raise ValueError("cond_given_sum is degenerate for tau2 = 0")
    rho2 = spec.rho2
    return rho2 * spec.mu + (1.0 - rho2) * v, spec.sigma2 * rho2


def g_cdf(spec: CondNormalSpec, x, v):
    """G(x, v) = P(X <= x | X+U = v)."""
    if spec.tau2 == 0.0:
        raise ValueError("g_cdf requires tau2 > 0")
    fam = spec.family
    rho2 = fam.rho2
    arg = (np.asarray(x, dtype=float) - (rho2 * spec.mu + (1.0 - rho2) * np.asarray(v, dtype=float))) / (fam.sigma * fam.rho)
    out = std_cdf(arg)
    return out if (np.ndim(x) or np.ndim(v)) else float(out)


def _g_arg(spec, x, v):
    fam = spec.family
    rho2 = fam.rho2
    return (x - (rho2 * spec.mu + (1.0 - rho2) * v)) / (fam.sigma * fam.rho)


def sample_with_conditioning(spec: CondNormalSpec, rng: np.random.Generator, size: int):
    """(x, v) draws from the joint law of (X, X+U) given X+U in T.

    Stage 1 draws V = X+U from the truncated normal on T by inverse CDF
    (interval chosen by mass, tail-stable quantile within); stage 2
    draws X | X+U = V. Consumes three fixed-size blocks from rng.
    """
    if spec.tau2 == 0.0:
        raise ValueError("sample requires tau2 > 0 (two-stage decomposition)")
    fam = spec.family
    n = int(size)
    p = _params_of(spec)
    alpha, beta = _std_endpoints(p, np.asarray(spec.mu), p.s)
    lm = log_interval_mass(alpha, beta)
    weights = np.exp(lm - logsumexp(lm))
    weights = weights / weights.sum()
    cum = np.cumsum(weights)
    idx = np.searchsorted(cum, rng.random(n), side="right")
    idx = np.minimum(idx, len(weights) - 1)
    frac = rng.random(n)
    z = _trunc_std_quantile(alpha[idx], beta[idx], frac)
    v = spec.mu + fam.s * z

    rho2 = fam.rho2
    mean = rho2 * spec.mu + (1.0 - rho2) * v
    x = mean + fam.sigma * fam.rho * rng.standard_normal(n)
    return x, v


def sample(spec: CondNormalSpec, rng: np.random.Generator, size=None):
    """Exact draw(s) from X | X+U in T (two-stage decomposition)."""
    x, _ = sample_with_conditioning(spec, rng, 1 if size is None else size)
    return float(x[0]) if size is None else x


def _h_weight(spec: CondNormalSpec, v, log_den):
    """h(v) = phi_s(v - mu)/s / selection_prob; h(+-inf) = 0."""
    fam = spec.family
    v = np.asarray(v, dtype=float)
    fin = np.isfinite(v)
    with np.errstate(invalid="ignore"):
        lp = std_logpdf(np.where(fin, (v - spec.mu) / fam.s, 0.0)) - math.log(fam.s)
    return np.where(fin, np.exp(lp - log_den), 0.0)


def _l_weight(spec: CondNormalSpec, x, v, log_mass_tau):
    """l(x, v) = phi_tau(v - x)/tau / tau-mass(x); l(x, +-inf) = 0."""
    fam = spec.family
    v = np.asarray(v, dtype=float)
    fin = np.isfinite(v)
    with np.errstate(invalid="ignore"):
        lp = std_logpdf(np.where(fin, (v - x) / fam.tau, 0.0)) - math.log(fam.tau)
    return np.where(fin, np.exp(lp - log_mass_tau), 0.0)


def dpdf_dmu(spec: CondNormalSpec, x: float) -> float:
    """Closed-form d/dmu of the conditional density at x."""
    if spec.tau2 == 0.0:
        raise ValueError("dpdf_dmu requires tau2 > 0")
    f = pdf(spec, x)
    log_den = log_selection_prob(spec)
    a = spec.T.lower_endpoints
    b = spec.T.upper_endpoints
    hsum = float(np.sum(_h_weight(spec, b, log_den) - _h_weight(spec, a, log_den)))
    return (x - spec.mu) / spec.sigma2 * f + f * hsum


def dpdf_dx(spec: CondNormalSpec, x: float) -> float:
    """Closed-form d/dx of the conditional density at x."""
    if spec.tau2 == 0.0:
        raise ValueError("dpdf_dx requires tau2 > 0")
    f = pdf(spec, x)
    lmt = float(_log_mass_tau_at(spec, np.asarray(x, dtype=float)))
    a = spec.T.lower_endpoints
    b = spec.T.upper_endpoints
    lsum = float(np.sum(_l_weight(spec, x, b, lmt) - _l_weight(spec, x, a, lmt)))
    return -(x - spec.mu) / spec.sigma2 * f - f * lsum


def dg_dx(spec: CondNormalSpec, x: float, v: float) -> float:
    """d/dx G(x, v) via the f * l / h identity."""
    if spec.tau2 == 0.0:
        raise ValueError("dg_dx requires tau2 > 0")
    log_den = log_selection_prob(spec)
    lmt = float(_log_mass_tau_at(spec, np.asarray(x, dtype=float)))
    hv = float(_h_weight(spec, v, log_den))
    lv = float(_l_weight(spec, x, v, lmt))
    return pdf(spec, x) * lv / hv


def owen_integral(spec: CondNormalSpec, x: float) -> float:
    """Antiderivative value of integral_{-inf}^x (u-mu)/sigma2 f(u) du."""
    if spec.tau2 == 0.0:
        raise ValueError("owen_integral requires tau2 > 0")
    log_den = log_selection_prob(spec)
    a = spec.T.lower_endpoints
    b = spec.T.upper_endpoints
    hb = _h_weight(spec, b, log_den)
    ha = _h_weight(spec, a, log_den)
    gb = np.where(np.isfinite(b), g_cdf(spec, x, np.where(np.isfinite(b), b, 0.0)), 0.0)
    ga = np.where(np.isfinite(a), g_cdf(spec, x, np.where(np.isfinite(a), a, 0.0)), 0.0)
    return -pdf(spec, x) - float(np.sum(hb * gb - ha * ga))


def _phi_at_quantile(log_f, log_s):
    """phi(Phi^{-1}(F)) from log F and log (1-F), tail-stable."""
    if log_f <= math.log(0.5):
        z = std_quantile_from_log(log_f)
    else:
        z = -std_quantile_from_log(log_s)
    return std_pdf(z)


def b_gap(spec: CondNormalSpec, x: float) -> float:
    """The bound-gap function; negative everywhere, tending to 0 as |x| grows."""
    if spec.tau2 == 0.0:
        raise ValueError("b_gap requires tau2 > 0")
    fam = spec.family
    log_f = log_cdf(spec, x)
    log_s = log_sf(spec, x)
    F = math.exp(log_f)
    f = pdf(spec, x)
    log_den = log_selection_prob(spec)
    a = spec.T.lower_endpoints
    b = spec.T.upper_endpoints
    hb = _h_weight(spec, b, log_den)
    ha = _h_weight(spec, a, log_den)

    def diff_F_G(vs):
        vs = np.asarray(vs, dtype=float)
        fin = np.isfinite(vs)
        arg = _g_arg(spec, x, np.where(fin, vs, 0.0))
        G = std_cdf(arg)
        # when F and G are both near one, the survival side is accurate
        Gs = std_cdf(-arg)
        low = (F <= 0.5) | (G <= 0.5)
        out = np.where(low, F - G, Gs - math.exp(log_s))
        return np.where(fin, out, 0.0)

    correction = float(np.sum(hb * diff_F_G(b) - ha * diff_F_G(a)))
    return fam.rho / fam.sigma * _phi_at_quantile(log_f, log_s) - f + correction
