"""Local laws of profiles at the origin, at a dead-core edge and in the tail.

Defines:
- Law: the local behaviours that can be fitted.
- AsymptoticFit: result of one least-squares fit.
- fit_asymptotics(): fit of a law on an automatically chosen window.
- expected_law(): exponent and prefactor predicted by the parameters.
- contact_derivative(): (f^m)' at the first positive sample after a dead core.
- WindowTooShort.

Notes:
    - Every law except the dead core is fitted as a straight line
      v = a u + b in variables where it is linear:
        TailQ1, TailQgamma, OriginP3: u = ln xi, v = ln f; a is the
        exponent, e^b the prefactor.
        OriginP0: u = xi^2, v = f^{m-1}; a is the quadratic coefficient,
        b^{1/(m-1)} the amplitude D = f(0).
        OriginP0neg: u = xi^{sigma+2}, v = f^{-(p-m)}; a is the
        coefficient, b the constant K.
        DeadcoreQ5: u = xi^2 - xi0^2, v = f^{m-1}, fitted as a u + c u^2
        through the origin; a is the coefficient, the prefactor is xi0.
    - Default windows: samples with X >= TAIL_X for TailQ1 (the last decade
      when there are too few), the last decade for TailQgamma, the first
      decade of the positive part for origins, xi in (xi0, 1.05 xi0] for
      dead cores.
"""

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from django.db import models

from params.exponents import constant_profile_value, derive

logger = logging.getLogger(__name__)

MIN_POINTS = 5
DEADCORE_SPAN = 1.05
TAIL_X = 1e5


class WindowTooShort(ValueError):
    """Fewer than MIN_POINTS samples in the fit window."""


class Law(models.TextChoices):
    TAIL_Q1 = 'TailQ1', 'Decay xi^{-(sigma+2)/(p-m)} as xi -> inf'
    ORIGIN_P0 = 'OriginP0', 'Positive f(0) with quadratic correction'
    ORIGIN_P0_NEG = 'OriginP0neg', 'Peak at the origin for sigma < 0'
    ORIGIN_P3 = 'OriginP3', 'f ~ c xi^{2/(m-1)} as xi -> 0'
    DEADCORE_Q5 = 'DeadcoreQ5', 'f^{m-1} linear in xi^2 - xi0^2 after the core'
    TAIL_QGAMMA = 'TailQgamma', 'f ~ (1/(p-1))^{1/(p-1)} xi^{-sigma/(p-1)}'


LOG_LAWS = (Law.TAIL_Q1, Law.TAIL_QGAMMA, Law.ORIGIN_P3)
TAIL_LAWS = (Law.TAIL_Q1, Law.TAIL_QGAMMA)


@dataclass(frozen=True)
class AsymptoticFit:
    """
    Attributes:
        law (Law): Law fitted.
        exponent_fit (float): Slope of the linearized law.
        prefactor_fit (float): Constant of the law (C, D, K, c or xi0).
        rel_err (float): Max relative deviation of the fit over the window.
        expected_exponent (float | None): Value predicted by the parameters.
        expected_prefactor (float | None): Idem; None when the law leaves it free.
        window (tuple[float, float]): xi range of the fit.
        points (int): Samples in the window.
    """
    law: Law
    exponent_fit: float
    prefactor_fit: float
    rel_err: float
    expected_exponent: float = None
    expected_prefactor: float = None
    window: tuple = ()
    points: int = 0

    @property
    def exponent_error(self):
        """Relative deviation of the fitted exponent from the expected one."""
        if not self.expected_exponent:
            return math.nan
        return abs(self.exponent_fit - self.expected_exponent) / abs(self.expected_exponent)

    def as_dict(self):
        data = asdict(self)
        data['law'] = self.law.value
        data['window'] = list(self.window)
        data['exponent_error'] = self.exponent_error
        return data


def expected_law(law, params, amplitude=None):
    """
    (exponent, prefactor) predicted for ``law``; None where the law is free.

    For OriginP0 the coefficient is (m-1)(alpha - D^{p-1})/(2mN) at
    sigma = 0 and alpha(m-1)/(2mN) for sigma > 0, with D the amplitude.
    """
    law = Law(law)
    m, N, p, sigma = params.m, params.N, params.p, params.sigma
    if law == Law.TAIL_Q1:
        return params.no_return_level, None
    if law == Law.TAIL_QGAMMA:
        return -sigma / (p - 1), constant_profile_value(params)
    if law == Law.ORIGIN_P3:
        return 2 / (m - 1), ((m - 1) / (2 * m * (m * N - N + 2))) ** (1 / (m - 1))
    if law == Law.ORIGIN_P0:
        alpha = derive(params).alpha
        if sigma == 0:
            if amplitude is None:
                return None, amplitude
            return (m - 1) * (alpha - amplitude ** (p - 1)) / (2 * m * N), amplitude
        return alpha * (m - 1) / (2 * m * N), amplitude
    if law == Law.ORIGIN_P0_NEG:
        return (p - m) / (m * (N + sigma) * (sigma + 2)), None
    return derive(params).beta * (m - 1) / (2 * m), None


def _default_window(profile, law):
    xi = profile.xi[profile.positive]
    if xi.size == 0:
        raise WindowTooShort('profile has no positive samples.')
    if law == Law.TAIL_Q1:
        X = profile.phase_coordinates()[:, 0]
        far = np.nonzero(profile.positive & (X >= TAIL_X))[0]
        if far.size >= MIN_POINTS:
            return profile.xi[far[0]], xi[-1]
        logger.debug('no tail samples with X >= %g; fitting the last decade', TAIL_X)
    if law in TAIL_LAWS:
        return xi[-1] / 10, xi[-1]
    if law == Law.DEADCORE_Q5:
        if profile.deadcore_edge is None:
            raise WindowTooShort('profile has no dead core.')
        return profile.deadcore_edge, DEADCORE_SPAN * profile.deadcore_edge
    return xi[0], 10 * xi[0]


def _linearize(law, profile, xi, f):
    params = profile.params
    m, p, sigma = params.m, params.p, params.sigma
    if law in LOG_LAWS:
        return np.log(xi), np.log(f)
    if law == Law.ORIGIN_P0:
        return xi ** 2, f ** (m - 1)
    if law == Law.ORIGIN_P0_NEG:
        return xi ** (sigma + 2), f ** (-(p - m))
    return xi ** 2 - profile.deadcore_edge ** 2, f ** (m - 1)


def fit_asymptotics(profile, law, window=None):
    """
    Least-squares fit of ``law`` on ``profile``.

    Args:
        profile (Profile): Sampled profile.
        law (Law): Local behaviour to fit.
        window (tuple[float, float] | None): xi range; chosen per law when None.

    Returns:
        AsymptoticFit

    Raises:
        WindowTooShort: Fewer than MIN_POINTS positive samples in the window.
    """
    law = Law(law)
    lo, hi = window if window is not None else _default_window(profile, law)
    inside = profile.positive & (profile.xi >= lo) & (profile.xi <= hi)
    if law == Law.DEADCORE_Q5:
        inside &= profile.xi > lo
    count = int(inside.sum())
    if count < MIN_POINTS:
        raise WindowTooShort(f'{count} samples in [{lo:.6g}, {hi:.6g}]; {MIN_POINTS} are needed.')
    u, v = _linearize(law, profile, profile.xi[inside], profile.f[inside])

    if law == Law.DEADCORE_Q5:
        coef, *_ = np.linalg.lstsq(np.column_stack([u, u * u]), v, rcond=None)
        a, b = float(coef[0]), 0.0
        fitted = a * u + float(coef[1]) * u * u
    else:
        a, b = (float(c) for c in np.polyfit(u, v, 1))
        fitted = a * u + b
    if law in LOG_LAWS:
        rel_err = float(np.max(np.abs(np.expm1(fitted - v))))
    else:
        rel_err = float(np.max(np.abs(fitted - v) / np.abs(v)))

    m = profile.params.m
    if law in LOG_LAWS:
        prefactor = math.exp(b)
    elif law == Law.ORIGIN_P0:
        prefactor = b ** (1 / (m - 1)) if b > 0 else math.nan
    elif law == Law.ORIGIN_P0_NEG:
        prefactor = b
    else:
        prefactor = profile.deadcore_edge
    amplitude = prefactor if law == Law.ORIGIN_P0 else None
    expected_exponent, expected_prefactor = expected_law(law, profile.params, amplitude)
    if law == Law.DEADCORE_Q5:
        expected_prefactor = profile.deadcore_edge

    fit = AsymptoticFit(law, a, prefactor, rel_err, expected_exponent, expected_prefactor, (float(lo), float(hi)), count)
    logger.debug('fitted %s: exponent %.6g (expected %s), prefactor %.6g, rel_err %.3g',
                 law.value, a, expected_exponent, prefactor, rel_err)
    return fit


def contact_derivative(profile):
    """
    (f^m)' = m f^{m-1} f' at the first positive sample after the dead core.

    Raises:
        WindowTooShort: If the profile has no dead core or no positive sample.
    """
    if profile.deadcore_edge is None:
        raise WindowTooShort('profile has no dead core.')
    pos = np.nonzero(profile.positive & (profile.xi > profile.deadcore_edge))[0]
    if pos.size == 0:
        raise WindowTooShort('no positive sample after the dead core.')
    i = int(pos[0])
    m = profile.params.m
    return float(m * profile.f[i] ** (m - 1) * profile.fprime[i])
