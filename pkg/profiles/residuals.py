"""Residuals of the profile equation and of the explicit stationary family.

Defines:
- ode_residual(): scaled residual of
  (f^m)'' + (N-1)/xi (f^m)' - alpha f - beta xi f' + xi^sigma f^p.
- stationary_profile(): the explicit stationary solutions U_C at p = p_s.
- stationary_residual(): residual of the stationary equation for U_C.
- iso_curve_defect(): flow across the invariant-curve candidate of {X = 0}.
- GridTooCoarse.

Notes:
    - The diffusion is written xi^{-N} dG/d eta with the flux
      G = xi^{N-1} (f^m)' = m xi^{N-1} f^{m-1} f' built from the sampled f';
      only that one derivative is taken numerically.
    - Derivatives are taken in eta = ln(xi) with five-point stencils whose
      weights are exact for quartics; on a geometric grid they reduce to
      the classical fourth-order centred formulas.
"""

import logging
import math

import numpy as np
from django.core.exceptions import ValidationError

from analyze.barriers import barrier_flows
from params.exponents import derive, exponent_table

logger = logging.getLogger(__name__)

STENCIL = 5
STATIONARY_RANGE = (0.1, 10.0)


class GridTooCoarse(ValueError):
    """Not enough points for the five-point stencils."""


def _weights(offsets, order):
    """Weights w with sum(w * g(x0 + offsets)) ~ g^(order)(x0)."""
    n = len(offsets)
    A = np.vander(offsets, n, increasing=True).T / np.array([math.factorial(i) for i in range(n)])[:, None]
    rhs = np.zeros(n)
    rhs[order] = 1.0
    return np.linalg.solve(A, rhs)


def _derivatives(x, g):
    """First and second derivatives of ``g`` at the interior points of ``x``."""
    half = STENCIL // 2
    n = len(x)
    d1 = np.empty(n - 2 * half)
    d2 = np.empty(n - 2 * half)
    for j, i in enumerate(range(half, n - half)):
        offsets = x[i - half:i + half + 1] - x[i]
        values = g[i - half:i + half + 1] - g[i]
        d1[j] = _weights(offsets, 1) @ values
        d2[j] = _weights(offsets, 2) @ values
    return d1, d2


def ode_residual(profile, params=None, pointwise=False):
    """
    Maximum residual of the profile equation, scaled by the largest term.

    Only points where f > 0 and whose whole stencil lies in that region
    are evaluated; dead cores and supports are left out.

    Args:
        profile (Profile): Sampled profile.
        params (Params | None): Defaults to ``profile.params``.
        pointwise (bool): Also return the per-point residuals and grid.

    Returns:
        float | tuple[float, np.ndarray, np.ndarray]

    Raises:
        GridTooCoarse: Fewer than five positive samples.
    """
    params = params or profile.params
    pos = np.nonzero(profile.positive)[0]
    if pos.size < STENCIL:
        raise GridTooCoarse(f'{pos.size} positive samples; {STENCIL} are needed.')
    start, stop = int(pos[0]), int(pos[-1]) + 1
    xi = profile.xi[start:stop]
    f = profile.f[start:stop]
    m, N, p, sigma = params.m, params.N, params.p, params.sigma
    derived = derive(params)
    eta = np.log(xi)

    fprime = profile.fprime[start:stop]
    flux, _ = _derivatives(eta, m * xi ** (N - 1) * f ** (m - 1) * fprime)
    half = STENCIL // 2
    xi_in, f_in, fp_in = xi[half:-half], f[half:-half], fprime[half:-half]
    terms = np.vstack([
        flux / xi_in ** N,
        -derived.alpha * f_in,
        -derived.beta * xi_in * fp_in,
        xi_in ** sigma * f_in ** p,
    ])
    scale = np.max(np.abs(terms))
    residual = np.abs(terms.sum(axis=0)) / scale if scale > 0 else np.zeros(terms.shape[1])
    worst = float(residual.max())
    logger.debug('profile equation residual %.3g over %d points', worst, residual.size)
    if pointwise:
        return worst, xi_in, residual
    return worst


def _require_sobolev(params, tol=1e-12):
    if params.N < 3:
        raise ValidationError({'N': 'the stationary family exists for N >= 3 only.'})
    p_s = exponent_table(params).p_s
    if abs(params.p - p_s) > tol * (1 + p_s):
        raise ValidationError({'p': f'the stationary family needs p = p_s = {p_s:.17g} (got {params.p}).'})
    return p_s


def stationary_profile(C, params, xi):
    """
    U_C(xi) = [(N-2)(N+sigma)C / (xi^{sigma+2} + C)^2]^{(N-2)/(2m(sigma+2))}.

    Returns:
        tuple[np.ndarray, np.ndarray, np.ndarray]: V = U^m with V' and V''
        in closed form.
    """
    N, sigma = params.N, params.sigma
    xi = np.asarray(xi, dtype=float)
    a = (N - 2) / (2 * (sigma + 2))
    w = xi ** (sigma + 2) + C
    V = ((N - 2) * (N + sigma) * C / w ** 2) ** a
    q = -(N - 2) * xi ** (sigma + 1) / w
    dq = -(N - 2) * xi ** sigma * ((sigma + 1) * w - (sigma + 2) * xi ** (sigma + 2)) / w ** 2
    return V, V * q, V * (q * q + dq)


def stationary_residual(C, params, points=400):
    """
    Scaled residual of (U^m)'' + (N-1)/xi (U^m)' + xi^sigma U^{p_s} on [0.1, 10].

    Raises:
        ValidationError: C <= 0, N < 3 or p different from p_s(sigma).
    """
    if not C > 0:
        raise ValidationError({'C': 'C must be positive.'})
    p_s = _require_sobolev(params)
    m, N, sigma = params.m, params.N, params.sigma
    xi = np.geomspace(*STATIONARY_RANGE, points)
    V, dV, d2V = stationary_profile(C, params, xi)
    terms = np.vstack([d2V, (N - 1) / xi * dV, xi ** sigma * V ** (p_s / m)])
    residual = float(np.max(np.abs(terms.sum(axis=0))) / np.max(np.abs(terms)))
    logger.debug('stationary residual %.3g (C=%g, defect %.3g)', residual, C, iso_curve_defect(params))
    return residual


def iso_curve_defect(params, points=200):
    """
    max |H| on Y in (-(N-2)/m, 0): the flow across the curve
    Z = -(N+sigma)/(N-2) (mY+N-2) Y of the plane X = 0.

    Zero at p = p_s and positive below it.
    """
    if params.N < 3:
        raise ValidationError({'N': 'the curve exists for N >= 3 only.'})
    Y = np.linspace(-(params.N - 2) / params.m, 0.0, points + 2)[1:-1]
    H = np.array([barrier_flows((0.0, y, 0.0), params).H for y in Y])
    return float(np.max(np.abs(H)))
