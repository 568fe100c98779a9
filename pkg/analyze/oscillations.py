"""Oscillation counting along orbits.

Defines:
- CountMode: crossings of Y = 0 or crossings of the surface S.
- OscillationCount: counted maxima/minima with crossing locations and flags.
- count_oscillations(): counting from recorded events or, failing those,
  from sign changes of the sampled S-distance.
- compare_counts(): both counters side by side.

Notes:
    - A descending crossing (Y or the S-distance decreasing) is a maximum of
      the profile, an ascending one a minimum, since Y = xi f'/f.
    - Crossings whose rate is below the tangency tolerance are left out of
      the counts and listed in ``tangencies``.
"""

import logging
from dataclasses import dataclass

import numpy as np
from django.conf import settings
from django.db import models

from integrate.solver import EventKind, observable

from .surface import SurfaceMode

logger = logging.getLogger(__name__)

DEGENERATE_LEVEL = 1e-12


class CountMode(models.TextChoices):
    Y_ZERO = 'YZero', 'Zeros of Y'
    SURFACE_S = 'SurfaceS', 'Crossings of S'


@dataclass(frozen=True)
class OscillationCount:
    """
    Attributes:
        n_max (int): Descending transversal crossings.
        n_min (int): Ascending transversal crossings.
        s_list (tuple[float, ...]): Locations of the counted crossings.
        mode (CountMode): Counter used.
        tangencies (tuple[float, ...]): Locations of excluded crossings.
        degenerate (bool): The orbit lies on the counting surface.
    """
    n_max: int
    n_min: int
    s_list: tuple = ()
    mode: CountMode = CountMode.Y_ZERO
    tangencies: tuple = ()
    degenerate: bool = False

    @property
    def flagged(self):
        return bool(self.tangencies) or self.degenerate

    def as_dict(self):
        return {
            'n_max': self.n_max, 'n_min': self.n_min, 's_list': list(self.s_list),
            'mode': self.mode.value, 'tangencies': list(self.tangencies), 'degenerate': self.degenerate,
        }


def _tally(crossings, mode, tol):
    n_max = n_min = 0
    counted, skipped = [], []
    for s, rate in sorted(crossings):
        if abs(rate) < tol:
            skipped.append(s)
            continue
        counted.append(s)
        if rate < 0:
            n_max += 1
        else:
            n_min += 1
    if skipped:
        logger.warning('%d tangential crossing(s) left out of the %s count', len(skipped), mode.value)
    return OscillationCount(n_max, n_min, tuple(counted), mode, tuple(skipped))


def _y_values(traj):
    g = observable(EventKind.Y_ZERO_UP, traj.chart, traj.params)
    if g is None:
        return None
    return np.array([g(u) for u in traj.states])


def _y_zero(traj, tol):
    values = _y_values(traj)
    if values is not None and np.max(np.abs(values)) < DEGENERATE_LEVEL:
        return OscillationCount(0, 0, (), CountMode.Y_ZERO, (), True)
    crossings = []
    for ev in traj.events_of(EventKind.Y_ZERO_UP, EventKind.Y_ZERO_DOWN):
        sign = 1.0 if ev.kind == EventKind.Y_ZERO_UP else -1.0
        crossings.append((ev.s, sign * abs(ev.rate)))
    return _tally(crossings, CountMode.Y_ZERO, tol)


def _sampled_crossings(traj, surface):
    states = traj.xyz()
    values = np.array([surface.event_value(*row) for row in states])
    crossings = []
    for i in np.nonzero(np.sign(values[1:]) * np.sign(values[:-1]) < 0)[0]:
        v0, v1 = values[i], values[i + 1]
        s0, s1 = traj.s[i], traj.s[i + 1]
        s_cross = s0 + (s1 - s0) * v0 / (v0 - v1)
        crossings.append((float(s_cross), float((v1 - v0) / (s1 - s0))))
    return values, crossings


def count_oscillations(traj, surface=None, tangency_tol=None):
    """
    Count the oscillations of ``traj``.

    Args:
        traj (Trajectory): Integrated orbit with its events.
        surface (SurfaceS | None): Count crossings of S instead of Y = 0.
            The exact plane of sigma = 0 is counted as Y = 0.
        tangency_tol (float | None): TANGENCY_TOL by default.

    Returns:
        OscillationCount
    """
    tol = settings.BLOWUP['TANGENCY_TOL'] if tangency_tol is None else tangency_tol
    if surface is None:
        return _y_zero(traj, tol)
    if surface.mode == SurfaceMode.EXACT:
        count = _y_zero(traj, tol)
        return OscillationCount(count.n_max, count.n_min, count.s_list, CountMode.SURFACE_S,
                                count.tangencies, count.degenerate)
    recorded = traj.events_of(EventKind.SURFACE_S)
    if recorded:
        return _tally([(ev.s, ev.rate) for ev in recorded], CountMode.SURFACE_S, tol)
    values, crossings = _sampled_crossings(traj, surface)
    degenerate = bool(np.max(np.abs(values)) < DEGENERATE_LEVEL)
    if degenerate:
        return OscillationCount(0, 0, (), CountMode.SURFACE_S, (), True)
    return _tally(crossings, CountMode.SURFACE_S, tol)


def compare_counts(traj, surface, tangency_tol=None):
    """
    Both counters on one orbit.

    Returns:
        dict: ``y_zero`` and ``surface`` counts and an ``agree`` flag; a
        disagreement is logged, not reconciled.
    """
    by_y = count_oscillations(traj, None, tangency_tol)
    by_s = count_oscillations(traj, surface, tangency_tol)
    agree = (by_y.n_max, by_y.n_min) == (by_s.n_max, by_s.n_min)
    if not agree:
        logger.warning('Y-zero count (%d, %d) differs from the S count (%d, %d)',
                       by_y.n_max, by_y.n_min, by_s.n_max, by_s.n_min)
    return {'y_zero': by_y.as_dict(), 'surface': by_s.as_dict(), 'agree': agree}
