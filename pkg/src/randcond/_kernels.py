"""Fused scalar kernels for the robust CDF route, jitted with numba.

The log-space numerator integral (windowed Gauss-Legendre around the
integrand mode plus slope-normalized tails) is evaluated per element in
one pass: mode search, node evaluation, and streaming log-sum-exp,
with no intermediate arrays. Falls back to None when numba is missing;
distribution.py then uses its vectorized numpy path.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is expected in production envs
    njit = None

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_TAIL_SPAN = 45.0

if njit is not None:

    @njit(cache=True)
    def _log_ndtr(z):
        # log Phi(z): erfc in the representable range, asymptotic series beyond
        if z > -37.0:
            return math.log(0.5 * math.erfc(-z / math.sqrt(2.0)))
        zi = 1.0 / (z * z)
        series = -zi * (1.0 - zi * (3.0 - zi * (15.0 - zi * (105.0 - zi * 945.0))))
        return -0.5 * z * z - math.log(-z) - _LOG_SQRT_2PI + math.log1p(series)

    @njit(cache=True)
    def _log1mexp(d):
        # log(1 - exp(d)) for d <= 0
        if d >= 0.0:
            return -math.inf
        if d > -0.6931471805599453:
            return math.log(-math.expm1(d))
        return math.log1p(-math.exp(d))

    @njit(cache=True)
    def _logmass(a, b, tau, u):
        # log P(a < u + N(0, tau^2) < b), tail-stable
        za = -math.inf if a == -math.inf else (a - u) / tau
        zb = math.inf if b == math.inf else (b - u) / tau
        # reflect so the far side is the right tail
        if zb <= 0.0:
            za, zb = -zb, -za
        width = zb - za
        if width <= 0.0:
            return -math.inf
        if width < 1e-4 and zb != math.inf:
            m = 0.5 * (za + zb)
            return -0.5 * m * m - _LOG_SQRT_2PI + math.log(width) + math.log1p(width * width * (m * m - 1.0) / 24.0)
        if za >= 0.0:
            lu = _log_ndtr(-za)
            lv = -math.inf if zb == math.inf else _log_ndtr(-zb)
            d = lv - lu
            if d > 0.0:
                d = 0.0
            return lu + _log1mexp(d)
        pa = 0.0 if za == -math.inf else 0.5 * math.erfc(-za / math.sqrt(2.0))
        pb = 1.0 if zb == math.inf else 0.5 * math.erfc(-zb / math.sqrt(2.0))
        diff = pb - pa
        if diff <= 0.0:
            return -math.inf
        return math.log(diff)

    @njit(cache=True)
    def _mass_derivs(a, b, tau, u, sigma2, mu):
        # psi = d/du log integrand, curv = d2/du2 (strictly negative)
        lm = _logmass(a, b, tau, u)
        ra = 0.0
        rb = 0.0
        ta = 0.0
        tb = 0.0
        if lm > -math.inf:
            if a != -math.inf:
                za = (a - u) / tau
                la = -0.5 * za * za - _LOG_SQRT_2PI
                e = la - lm
                if e < 700.0:
                    ra = math.exp(e) / tau
                    ta = za * ra / tau
            if b != math.inf:
                zb = (b - u) / tau
                lb = -0.5 * zb * zb - _LOG_SQRT_2PI
                e = lb - lm
                if e < 700.0:
                    rb = math.exp(e) / tau
                    tb = zb * rb / tau
        m1 = ra - rb
        m2 = (ta - tb) - m1 * m1
        psi = -(u - mu) / sigma2 + m1
        curv = -1.0 / sigma2 + m2
        return psi, curv

    @njit(cache=True)
    def _ell_scalar(sigma, tau, mu, a, b, u):
        z = (u - mu) / sigma
        return -0.5 * z * z - _LOG_SQRT_2PI - math.log(sigma) + _logmass(a, b, tau, u)

    @njit(cache=True)
    def route_c_kernel(sigma2, tau2, mu, x, aa, bb, glx, glw, out):
        """Per-interval log numerator log P(X <= x, a < X+U < b), flat batch."""
        n = mu.shape[0]
        nn = glx.shape[0]
        for i in range(n):
            s2 = sigma2[i]
            t2 = tau2[i]
            sig = math.sqrt(s2)
            tau = math.sqrt(t2)
            m = mu[i]
            xc = x[i]
            a = aa[i]
            b = bb[i]
            if not (a < b):
                out[i] = -math.inf
                continue

            # mode of the log-concave integrand: safeguarded Newton
            mid = m
            if mid < a:
                mid = a
            if mid > b:
                mid = b
            u = (t2 * m + s2 * mid) / (s2 + t2)
            scale = sig * tau / math.sqrt(s2 + t2)
            lo = u - scale
            hi = u + scale
            step = scale
            for _ in range(200):
                psi, _ = _mass_derivs(a, b, tau, lo, s2, m)
                if psi > 0.0:
                    break
                lo -= step
                step *= 2.0
            step = scale
            for _ in range(200):
                psi, _ = _mass_derivs(a, b, tau, hi, s2, m)
                if psi < 0.0:
                    break
                hi += step
                step *= 2.0
            if u < lo:
                u = lo
            if u > hi:
                u = hi
            for _ in range(30):
                psi, curv = _mass_derivs(a, b, tau, u, s2, m)
                if psi > 0.0:
                    lo = u
                elif psi < 0.0:
                    hi = u
                un = u - psi / curv
                if not (lo < un < hi):
                    un = 0.5 * (lo + hi)
                if abs(un - u) <= 1e-8 * (1.0 + abs(u)):
                    u = un
                    break
                u = un
            mode = u
            _, curv = _mass_derivs(a, b, tau, mode, s2, m)
            mc = -curv
            if mc < 1.0 / s2:
                mc = 1.0 / s2
            delta = 1.0 / math.sqrt(mc)

            e1 = mode - 12.0 * delta
            e2 = mode + 12.0 * delta

            # streaming log-sum-exp over all quadrature nodes
            ref = -math.inf
            total = 0.0

            # three central panels clipped at the cut x
            for ipanel in range(3):
                if ipanel == 0:
                    plo, phi_ = e1, mode - 4.0 * delta
                elif ipanel == 1:
                    plo, phi_ = mode - 4.0 * delta, mode + 4.0 * delta
                else:
                    plo, phi_ = mode + 4.0 * delta, e2
                if plo > xc:
                    plo = xc
                if phi_ > xc:
                    phi_ = xc
                half = 0.5 * (phi_ - plo)
                if half <= 0.0:
                    continue
                midp = 0.5 * (phi_ + plo)
                for j in range(nn):
                    un_ = midp + half * glx[j]
                    le = _ell_scalar(sig, tau, m, a, b, un_)
                    c = half * glw[j]
                    if le == -math.inf:
                        continue
                    if le > ref:
                        total = total * math.exp(ref - le) if total > 0.0 else 0.0
                        ref = le
                        total += c
                    else:
                        total += c * math.exp(le - ref)

            # left tail from c0 = min(x, e1) toward -inf
            c0 = xc if xc < e1 else e1
            gl, _ = _mass_derivs(a, b, tau, c0, s2, m)
            if gl < 1e-300:
                gl = 1e-300
            halft = 0.5 * _TAIL_SPAN
            for j in range(nn):
                t = halft * (glx[j] + 1.0)
                un_ = c0 - t / gl
                le = _ell_scalar(sig, tau, m, a, b, un_)
                c = halft * glw[j] / gl
                if le == -math.inf:
                    continue
                if le > ref:
                    total = total * math.exp(ref - le) if total > 0.0 else 0.0
                    ref = le
                    total += c
                else:
                    total += c * math.exp(le - ref)

            # right tail from e2 up to x when x > e2
            if xc > e2:
                gr, _ = _mass_derivs(a, b, tau, e2, s2, m)
                gr = -gr
                if gr < 1e-300:
                    gr = 1e-300
                tmax = (xc - e2) * gr
                if tmax > _TAIL_SPAN:
                    tmax = _TAIL_SPAN
                halft2 = 0.5 * tmax
                if halft2 > 0.0:
                    for j in range(nn):
                        t = halft2 * (glx[j] + 1.0)
                        un_ = e2 + t / gr
                        le = _ell_scalar(sig, tau, m, a, b, un_)
                        c = halft2 * glw[j] / gr
                        if le == -math.inf:
                            continue
                        if le > ref:
                            total = total * math.exp(ref - le) if total > 0.0 else 0.0
                            ref = le
                            total += c
                        else:
                            total += c * math.exp(le - ref)

            if total > 0.0 and ref > -math.inf:
                out[i] = ref + math.log(total)
            else:
                out[i] = -math.inf

else:  # pragma: no cover
    route_c_kernel = None
