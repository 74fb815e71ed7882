"""Gaussian primitives and the integral kernel of the pricing equations.

The kernel K(t1, x1, t2, x2) is the expected drift of the bridge at time t2
restricted to the region above the threshold x2, conditional on X_{t1} = x1:

    K = alpha * (z*S - cosh(a(1-t2)) * (m*S + v*p)) / sinh(a(1-t2)),

where m, v are the conditional mean/std of X_{t2}, u = (x2 - m)/v, and
S = survival(u), p = density(u). It is undefined at t2 = 1 and extended by
continuity at t2 = t1 (drift times an indicator). The transformed-space
integrand plays the same role for the Brownian-motion formulation and is
kept only as a verification mirror.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .bridge import OUBParams, _require_canonical, cond_mean, cond_std, drift
from .transform import TransformContext, envelope

__all__ = [
    "KernelQuery",
    "survival",
    "density",
    "drift_kernel",
    "transformed_integrand",
]

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def survival(u):
    """Upper tail probability of a standard normal, 1 - Phi(u).

    Uses the complementary error function, so relative accuracy is kept far
    into the right tail (survival(40) is a subnormal, not 0).
    """
    out = 0.5 * erfc(np.asarray(u, dtype=float) * _INV_SQRT2)
    return out if out.ndim else float(out)


def density(u):
    """Standard normal density."""
    u = np.asarray(u, dtype=float)
    out = np.exp(-0.5 * u * u) * _INV_SQRT_2PI
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class KernelQuery:
    """Arguments of a kernel evaluation, 0 <= t1 <= t2 < 1."""

    t1: float
    x1: float
    t2: float
    x2: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.t1 <= self.t2):
            raise ValueError("kernel query requires 0 <= t1 <= t2")
        if self.t2 >= 1.0:
            raise ValueError("kernel query requires t2 < 1")


def drift_kernel(params: OUBParams, t1, x1, t2, x2):
    """Evaluate K(t1, x1, t2, x2) for canonical params; broadcasts over
    array arguments.

    Raises for t2 >= 1. At t2 == t1 the continuity limit
    drift(t2, x1) * 1{x1 >= x2} is returned.
    """
    _require_canonical(params)
    t1 = np.asarray(t1, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if np.any(t2 >= 1.0):
        raise ValueError("kernel undefined at t2 >= 1")
    if np.any(t2 < t1):
        raise ValueError("kernel requires t2 >= t1")

    aa = abs(params.alpha)
    z = params.z
    m = cond_mean(params, t1, x1, t2)
    v = cond_std(params, t1, t2)

    degenerate = np.asarray(v == 0.0)
    if not degenerate.any():
        u = (x2 - m) / v
        s = survival(u)
        p = density(u)
        rem = aa * (1.0 - t2)
        out = aa * (z * s - np.cosh(rem) * (m * s + v * p)) / np.sinh(rem)
        out = np.asarray(out)
        return out if out.ndim else float(out)

    vsafe = np.where(degenerate, 1.0, v)
    u = (x2 - m) / vsafe
    s = survival(u)
    p = density(u)
    rem = aa * (1.0 - t2)
    main = aa * (z * s - np.cosh(rem) * (m * s + vsafe * p)) / np.sinh(rem)
    limit = drift(params, t2, x1) * (x1 >= x2)
    out = np.where(degenerate, limit, main)
    out = np.asarray(out)
    return out if out.ndim else float(out)


def transformed_integrand(ctx: TransformContext, s, y, u, b_u):
    """Integrand of the transformed pricing formula at clock time u > s:

    (c*S - (a + 2u) * ((y + c*u)*S + sqrt(u - s)*p) / (2 f(u)^2)) / f(u)

    with c = c_z, f = envelope, and S, p the survival/density of the
    standardised threshold (b(u) - y) / sqrt(u - s).
    """
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)
    b_u = np.asarray(b_u, dtype=float)
    if np.any(u <= s):
        raise ValueError("transformed integrand requires u > s")
    sd = np.sqrt(u - s)
    std = (b_u - y) / sd
    surv = survival(std)
    dens = density(std)
    f = envelope(ctx.alpha, u)
    c = ctx.c_z
    out = (c * surv - (ctx.a + 2.0 * u)
           * ((y + c * u) * surv + sd * dens) / (2.0 * f * f)) / f
    out = np.asarray(out)
    return out if out.ndim else float(out)
