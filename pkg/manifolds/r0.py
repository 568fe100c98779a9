"""The orbit r_0 entering Q_gamma0, traced out of the P0 family.

For sigma = 0 the orbit is the explicit line {Y = 0, X = Z} (C = 1). For
sigma > 0 it is the boundary, in C, between orbits that leave the
neighbourhood of Q_gamma0 with Z/X above kappa (and then cross the
no-return plane) and orbits that leave it below kappa (and oscillate).
"""

import logging
import math
from dataclasses import replace

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError

from integrate.solver import Controls, EventKind, StopReason, Trajectory, integrate
from phasespace.charts import Chart
from phasespace.points import kappa

from .seeds import seed_p0

logger = logging.getLogger(__name__)

BAND = 0.25
MAX_BISECTIONS = 80
TAIL_EXTENSION = 100.0


class R0NotFound(LookupError):
    """
    No sign change of the r_0 side indicator over the scanned C values.

    Attributes:
        seen (dict): Indicator values observed, keyed by C.
    """

    def __init__(self, message, seen=None):
        super().__init__(message)
        self.seen = seen or {}


def r0_side(traj, params, x_track=None, band=BAND):
    """
    Side of r_0 on which a P0-family orbit lies.

    Returns:
        int: +1 above r_0 (leaves Q_gamma0 with Z/X > kappa, or reaches the
        no-return plane without an ascending Y-zero), -1 below, 0 when the
        orbit is still tracking Q_gamma0 at its end.
    """
    x_track = settings.BLOWUP['X_BIG'] if x_track is None else x_track
    kap = kappa(params)
    states = traj.xyz()
    X, Z = states[:, 0], states[:, 2]
    with np.errstate(divide='ignore', invalid='ignore'):
        rho = (Z / X - kap) / kap
    inside = (X >= x_track) & (np.abs(rho) < band)
    if inside.any():
        first = int(np.argmax(inside))
        outside = np.nonzero(np.abs(rho[first:]) >= band)[0]
        if outside.size == 0:
            return 0
        return 1 if rho[first + int(outside[0])] > 0 else -1
    crossed = traj.events_of(EventKind.NO_RETURN)
    if crossed:
        ups = [ev for ev in traj.events_of(EventKind.Y_ZERO_UP) if ev.s < crossed[0].s]
        return -1 if ups else 1
    return -1


def tail_window(traj, params, x_track, width):
    """
    Index range where the orbit tracks Q_gamma0.

    Starts at the first sample with X >= x_track and |Z/X - kappa| < width
    and ends before the first later sample outside that band.

    Returns:
        tuple[int, int] | None: ``(start, end)``, end exclusive.
    """
    kap = kappa(params)
    states = traj.xyz()
    with np.errstate(divide='ignore', invalid='ignore'):
        gap = np.abs(states[:, 2] / states[:, 0] - kap)
    inside = (states[:, 0] >= x_track) & (gap < width)
    if not inside.any():
        return None
    start = int(np.argmax(inside))
    outside = np.nonzero(~(gap[start:] < width))[0]
    end = start + int(outside[0]) if outside.size else len(traj)
    return start, end


def _truncate(traj, end):
    end = max(end, 2)
    last = traj.s[end - 1]
    return replace(
        traj, s=traj.s[:end], states=traj.states[:end],
        events=tuple(ev for ev in traj.events if ev.s <= last),
    )


def _exact_line(params, epsilon, controls):
    s_end = 0.5 * math.log(controls.radius_max / epsilon)
    s = np.arange(0.0, s_end, controls.max_step)
    X = epsilon * np.exp(2 * s)
    states = np.column_stack([X, np.zeros_like(X), X])
    meta = {'C': 1.0, 'mode': 'exact', 'tail_deviation': 0.0, 'tail_ok': True, 'tail_start_X': float(X[0])}
    return Trajectory(Chart.XYZ, s, states, (), StopReason.RADIUS, params, meta)


def trace_r0(params, tolerance=1e-3, controls=None, epsilon=None, c_grid=None, rel_tol=1e-14):
    """
    Approximate the orbit r_0.

    Args:
        params (Params): sigma in [0, SIGMA_EXPLORATION), p > m.
        tolerance (float): Required |Z/X - kappa| on the tail X > X_BIG.
            When the bisected orbit never gets that close, it is re-run
            once with TAIL_EXTENSION times the radius and s ranges.
        controls (Controls | None): Integrator settings.
        epsilon (float | None): Seed distance, EPS_P0 by default.
        c_grid (array-like | None): C values scanned for a bracket; a
            log grid over [SWEEP_C_MIN, SWEEP_C_MAX] with BRACKET_POINTS
            values by default.
        rel_tol (float): Relative width at which the C-bisection stops.

    Returns:
        Trajectory: XYZ orbit ending where it leaves the tolerance band
        around Q_gamma0, or the BAND neighbourhood when it never enters the
        tolerance band. ``meta`` holds C, bracket, tail_deviation, tail_ok
        and tail_start_X.

    Raises:
        ValidationError: For sigma < 0.
        R0NotFound: When no side change is bracketed.
    """
    params.clean()
    conf = settings.BLOWUP
    if params.sigma < 0:
        raise ValidationError({'sigma': 'r_0 is traced for sigma >= 0 only.'})
    cap = conf['SIGMA_EXPLORATION']
    if cap is not None and params.sigma >= cap:
        logger.warning('sigma=%g lies beyond the exploration range (%g)', params.sigma, cap)
    controls = controls or Controls.from_settings()
    epsilon = epsilon or conf['EPS_P0']
    if params.sigma == 0:
        return _exact_line(params, epsilon, controls)

    x_track = conf['X_BIG']
    if c_grid is None:
        c_grid = np.geomspace(conf['SWEEP_C_MIN'], conf['SWEEP_C_MAX'], conf['BRACKET_POINTS'])
    grid = sorted(float(c) for c in c_grid)

    def side(C):
        traj = integrate(seed_p0(C, epsilon, params), params, controls)
        return r0_side(traj, params, x_track), traj

    seen = {}
    hi = None
    bracket = None
    for C in reversed(grid):
        value, _ = side(C)
        seen[C] = value
        if value == 0:
            bracket = (C, C)
            break
        if value > 0:
            hi = C
        elif hi is not None:
            bracket = (C, hi)
            break
    if bracket is None:
        raise R0NotFound(f'no change of side over C in [{grid[0]:g}, {grid[-1]:g}] for {params}', seen)

    lo, hi = bracket
    best = None
    for _ in range(MAX_BISECTIONS):
        if hi / lo - 1 <= rel_tol:
            break
        mid = math.sqrt(lo * hi)
        value, traj = side(mid)
        best = (mid, traj)
        if value == 0:
            lo = hi = mid
            break
        if value > 0:
            hi = mid
        else:
            lo = mid
    C_star = math.sqrt(lo * hi)
    if best is None or best[0] != C_star:
        _, traj = side(C_star)
    else:
        traj = best[1]

    window = tail_window(traj, params, x_track, tolerance)
    if window is None:
        longer = replace(controls, radius_max=controls.radius_max * TAIL_EXTENSION,
                         s_max=controls.s_max * TAIL_EXTENSION)
        logger.debug('r_0 tail not within %.3g of kappa; re-running with radius %.3g', tolerance,
                     longer.radius_max)
        traj = integrate(seed_p0(C_star, epsilon, params), params, longer)
        window = tail_window(traj, params, x_track, tolerance)

    kap = kappa(params)
    if window is not None:
        start, end = window
        traj = _truncate(traj, end)
        states = traj.xyz()[start:]
        deviation = float(np.max(np.abs(states[:, 2] / states[:, 0] - kap)))
        tail_start = float(states[0, 0])
    else:
        coarse = tail_window(traj, params, x_track, BAND * kap)
        if coarse is not None:
            traj = _truncate(traj, coarse[1])
        states = traj.xyz()
        tail = states[:, 0] >= x_track
        if tail.any():
            deviation = float(np.min(np.abs(states[tail, 2] / states[tail, 0] - kap)))
        else:
            deviation = math.inf
        tail_start = None
    ok = window is not None
    if not ok:
        logger.warning('r_0 tail misses kappa by %.3g (tolerance %.3g) at %s', deviation, tolerance, params)
    logger.info('r_0 traced at %s: C=%.15g', params, C_star)
    return traj.with_meta(C=C_star, bracket=[lo, hi], mode='bisection',
                          tail_deviation=deviation, tail_ok=ok, tail_start_X=tail_start)
