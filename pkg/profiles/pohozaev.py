"""Pohozaev identity evaluated on a sampled profile.

Defines:
- PohozaevReport: the three terms of the identity and their balance.
- pohozaev(): quadrature of the identity with analytic end completions.

Notes:
    - With V = f^m the identity reads T1 + T2 + T3 = 0 where
        T1 = (m(N+2sigma+2) - p(N-2)) / (2(m+p)) * int |V'|^2,
        T2 = (beta/m) * int V^{(1-m)/m} (r V')^2,
        T3 = m Q / ((m+1)(m+p)L) * int V^{(m+1)/m},
      all integrals radial with weight r^{N-1} (per unit solid angle).
    - V^{(1-m)/m} (r V')^2 = m^2 f^{m+1} Y^2, which vanishes wherever f does.
    - Integrals are taken in ln(r) with Simpson's rule; the pieces beyond
      the grid are completed with the power laws f ~ A r^y matched at
      both ends (the fitted tail law at infinity).
"""

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import simpson

from params.exponents import derive, q_value

from .asymptotics import Law, fit_asymptotics

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PohozaevReport:
    """
    Attributes:
        T1 (float): Gradient term.
        T2 (float): Weighted radial term, never negative.
        T3 (float): Term carrying Q.
        Q_value (float): Q(m, N, p, sigma).
        residual (float): T1 + T2 + T3.
        relative (float): |residual| / max(|T1|, |T2|, |T3|).
        converged (bool): The integrals converge at infinity for these
            parameters, (m+1)(sigma+2)/(p-m) > N.
        per_unit_solid_angle (bool): Integrals omit the area of the sphere.
        integrals (dict): The three radial integrals, completions included.
        tail_completion (dict): Contribution of the fitted tail beyond the grid.
        quadrature_change (float): Largest relative change of an integral
            when every other sample is dropped.
    """
    T1: float
    T2: float
    T3: float
    Q_value: float
    residual: float
    relative: float
    converged: bool
    per_unit_solid_angle: bool = True
    integrals: dict = field(default_factory=dict)
    tail_completion: dict = field(default_factory=dict)
    quadrature_change: float = math.nan

    def as_dict(self):
        return asdict(self)


def coefficients(params):
    """Coefficients (c1, c2, c3) multiplying the three radial integrals."""
    m, N, p, sigma = params.m, params.N, params.p, params.sigma
    c1 = (m * (N + 2 * sigma + 2) - p * (N - 2)) / (2 * (m + p))
    c2 = derive(params).beta * m
    c3 = m * q_value(params) / ((m + 1) * (m + p) * params.L)
    return c1, c2, c3


def is_convergent(params):
    return (params.m + 1) * (params.sigma + 2) / (params.p - params.m) > params.N


def _integrands(r, f, Y, params):
    m, N = params.m, params.N
    weight = r ** (N - 1)
    grad = (m * f ** m * Y / r) ** 2 * weight
    radial = f ** (m + 1) * Y ** 2 * weight
    mass = f ** (m + 1) * weight
    return np.vstack([grad, radial, mass])


def _exponents(y, params):
    """Exponents q of the three integrands r^q for f ~ A r^y."""
    m, N = params.m, params.N
    return np.array([2 * m * y + N - 3, (m + 1) * y + N - 1, (m + 1) * y + N - 1])


def _quadrature(r, values):
    return np.array([simpson(row * r, x=np.log(r)) for row in values])


def _end_completion(r_end, values_end, q, tail):
    """Closed-form integral of c r^q from 0 to r_end (tail=False) or r_end to inf."""
    out = np.zeros(3)
    for i in range(3):
        if values_end[i] == 0:
            continue
        if tail:
            out[i] = values_end[i] * r_end / -(q[i] + 1) if q[i] + 1 < 0 else math.inf
        else:
            out[i] = values_end[i] * r_end / (q[i] + 1) if q[i] + 1 > 0 else math.inf
    return out


def pohozaev(profile, params=None, tail_fit=None):
    """
    Evaluate the Pohozaev identity on ``profile``.

    Args:
        profile (Profile): Profile decaying at infinity (Q1 tail).
        params (Params | None): Defaults to ``profile.params``.
        tail_fit (AsymptoticFit | None): TailQ1 fit used for the tail
            completion; fitted on the last decade when None.

    Returns:
        PohozaevReport: With ``converged`` false the tail completion is
        infinite and the residual is reported on the grid alone.

    Raises:
        WindowTooShort: If the tail cannot be fitted.
    """
    params = params or profile.params
    pos = profile.positive
    r = profile.xi
    f = np.where(pos, profile.f, 0.0)
    with np.errstate(divide='ignore', invalid='ignore'):
        Y = np.where(pos, r * profile.fprime / np.where(pos, profile.f, 1.0), 0.0)

    values = _integrands(r, f, Y, params)
    grid = _quadrature(r, values)
    half = _quadrature(r[::2], values[:, ::2])
    with np.errstate(divide='ignore', invalid='ignore'):
        change = float(np.nanmax(np.where(grid != 0, np.abs(half - grid) / np.abs(grid), 0.0)))

    first = int(np.argmax(pos))
    origin = _end_completion(r[first], values[:, first], _exponents(Y[first], params), tail=False)
    if not np.all(np.isfinite(origin)):
        logger.warning('origin completion diverges (Y=%.6g at r=%.6g); dropped', Y[first], r[first])
        origin = np.zeros(3)

    converged = is_convergent(params)
    tail_fit = tail_fit or fit_asymptotics(profile, Law.TAIL_Q1)
    last = len(r) - 1 - int(np.argmax(pos[::-1]))
    r_end = r[last]
    f_end = tail_fit.prefactor_fit * r_end ** tail_fit.exponent_fit
    tail_values = _integrands(np.array([r_end]), np.array([f_end]), np.array([tail_fit.exponent_fit]), params)[:, 0]
    tail = _end_completion(r_end, tail_values, _exponents(tail_fit.exponent_fit, params), tail=True)
    if not converged:
        tail = np.full(3, math.inf)

    integrals = grid + origin + (tail if converged else 0.0)
    c = np.array(coefficients(params))
    T1, T2, T3 = (float(v) for v in c * integrals)
    residual = T1 + T2 + T3
    scale = max(abs(T1), abs(T2), abs(T3))
    report = PohozaevReport(
        T1=T1, T2=T2, T3=T3,
        Q_value=q_value(params),
        residual=residual,
        relative=abs(residual) / scale if scale > 0 else math.nan,
        converged=converged,
        integrals=dict(zip(('gradient', 'radial', 'mass'), (float(v) for v in integrals))),
        tail_completion=dict(zip(('gradient', 'radial', 'mass'), (float(v) for v in tail))),
        quadrature_change=change,
    )
    if converged:
        logger.info('Pohozaev balance %.3g relative (T1=%.6g, T2=%.6g, T3=%.6g)', report.relative, T1, T2, T3)
    else:
        logger.warning('Pohozaev integrals diverge for %s; residual not meaningful', params)
    return report
