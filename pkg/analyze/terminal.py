"""Terminal classification of integrated orbits.

Defines:
- Fate: where an orbit ends up.
- TerminalInfo: the fate plus the evidence it rests on.
- classify_terminal(): decision from the final state and the recorded events.
- Q1Approach / q1_approach(): the stretch of an orbit that follows the
  slow approach to Q1 and where it leaves it.

Notes:
    - Checks run in order Q3, Q_gamma0, Q1, P3; anything else is Unresolved.
    - A state with Z dominating both X and |Y| is reported Unresolved with
      the ``q4_like`` anomaly flag: no orbit enters Q4.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings
from django.db import models

from integrate.solver import EventKind, StopReason
from phasespace.charts import ChartError
from phasespace.points import kappa, p3_coordinates, q1_scale

logger = logging.getLogger(__name__)

Q1_BAND = 0.5
DEPART_TOL = 1e-3


class Fate(models.TextChoices):
    Q1 = 'Q1Connection', 'Connects to Q1 (decaying tail)'
    Q3 = 'Q3CompactSupport', 'Enters Q3 (compactly supported)'
    QGAMMA0 = 'Qgamma0', 'Enters Q_gamma0'
    P3 = 'P3', 'Converges to P3'
    UNRESOLVED = 'Unresolved', 'Unresolved'


@dataclass(frozen=True)
class TerminalInfo:
    """
    Fate of one orbit.

    Attributes:
        fate (Fate): Classification.
        evidence (dict): Final X, Y, Z, Z/X, stop reason and crossing data.
        anomaly (str): Empty, or a short tag such as ``q4_like``.
    """
    fate: Fate
    evidence: dict = field(default_factory=dict)
    anomaly: str = ''

    def as_dict(self):
        return {'fate': self.fate.value, 'evidence': self.evidence, 'anomaly': self.anomaly}


def classify_terminal(traj, params, fate_tol=None, x_big=None):
    """
    Classify where ``traj`` ends.

    Behavior:
        - Q3CompactSupport: a NoReturnCross event or a stop at the Y floor.
        - Qgamma0: |Z/X - kappa| < fate_tol and |Y + sigma/(p-1)| < fate_tol.
        - Q1Connection: X > x_big, Z/X < kappa/2 and
          -(sigma+2)/(p-m) < Y <= 0.
        - P3: final state within fate_tol (relative) of P3.
        - Unresolved otherwise.

    Returns:
        TerminalInfo
    """
    conf = settings.BLOWUP
    fate_tol = conf['FATE_TOL'] if fate_tol is None else fate_tol
    x_big = conf['X_BIG'] if x_big is None else x_big
    try:
        X, Y, Z = (float(v) for v in traj.xyz()[-1])
    except ChartError:
        return TerminalInfo(Fate.UNRESOLVED, {'chart': traj.chart.value}, 'no_finite_image')
    kap = kappa(params)
    ratio = Z / X if X > 0 else math.inf
    crossed = traj.events_of(EventKind.NO_RETURN)
    evidence = {
        'X': X, 'Y': Y, 'Z': Z, 'ratio': ratio,
        'stop': traj.stop.value,
        'no_return_s': crossed[0].s if crossed else None,
        'crossings': len(traj.events_of(EventKind.Y_ZERO_UP, EventKind.Y_ZERO_DOWN)),
    }

    if crossed or traj.stop == StopReason.Y_FLOOR:
        return TerminalInfo(Fate.Q3, evidence)
    if abs(ratio - kap) < fate_tol and abs(Y + params.sigma / (params.p - 1)) < fate_tol:
        return TerminalInfo(Fate.QGAMMA0, evidence)
    if X > x_big and ratio < kap / 2 and params.no_return_level < Y <= 0:
        return TerminalInfo(Fate.Q1, evidence)
    p3 = np.array(p3_coordinates(params))
    if np.linalg.norm(np.array([X, Y, Z]) - p3) < fate_tol * (1 + np.linalg.norm(p3)):
        return TerminalInfo(Fate.P3, evidence)
    if Z > x_big and Z > X and Z > abs(Y):
        logger.warning('orbit heads to the equator with Z dominating (%s); reported unresolved', params)
        return TerminalInfo(Fate.UNRESOLVED, evidence, 'q4_like')
    return TerminalInfo(Fate.UNRESOLVED, evidence)


def is_q3(traj):
    """Cheap test used by searches: NoReturnCross recorded or stopped at the floor."""
    return traj.has_event(EventKind.NO_RETURN) or traj.stop == StopReason.Y_FLOOR



@dataclass(frozen=True)
class Q1Approach:
    """
    Stretch of an orbit following the approach to Q1.

    Attributes:
        start (int): First sample inside the approach region.
        end (int): Turning sample: the lowest Y before the orbit turns
            back up, or the last sample above the no-return level.
        s_start, s_end (float): s at ``start`` and ``end``.
        departure (str): ``upturn``, ``no-return`` or empty when the orbit
            is still on the approach at its last sample.
    """
    start: int
    end: int
    s_start: float
    s_end: float
    departure: str = ''

    def as_dict(self):
        return {'start': self.start, 'end': self.end, 's_start': self.s_start,
                's_end': self.s_end, 'departure': self.departure}


def q1_approach(traj, params, band=Q1_BAND, depart_tol=DEPART_TOL):
    """
    Where ``traj`` follows the slow approach to Q1, or None.

    The approach region is X >= q1_scale(params), Z/X < kappa/2 and Y
    between the no-return level and ``(1 - band)`` times that level. From
    its first sample the orbit leaves either by crossing the level or by
    turning up more than ``depart_tol * |level|`` above its running
    minimum.
    """
    states = traj.xyz()
    X, Y, Z = states[:, 0], states[:, 1], states[:, 2]
    level = params.no_return_level
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = np.where(X > 0, Z / X, np.inf)
        near = (X >= q1_scale(params)) & (ratio < kappa(params) / 2) & (Y > level) & (Y < level * (1 - band))
    inside = np.nonzero(near)[0]
    if inside.size == 0:
        return None
    start = int(inside[0])
    s = traj.s
    tail = Y[start:]
    crossed = [ev.s for ev in traj.events_of(EventKind.NO_RETURN) if ev.s >= s[start]]
    below = np.nonzero(tail <= level)[0]
    stop = len(tail) if below.size == 0 else int(below[0])
    if crossed:
        stop = min(stop, int(np.searchsorted(s[start:], crossed[0], side='right')))
    stop = max(stop, 1)
    running = np.minimum.accumulate(tail[:stop])
    up = np.nonzero(tail[:stop] > running + depart_tol * abs(level))[0]
    if up.size:
        end = start + int(np.argmin(tail[:up[0]]))
        departure = 'upturn'
    else:
        end = start + stop - 1
        departure = 'no-return' if stop < len(tail) else ''
    return Q1Approach(start, end, float(s[start]), float(s[end]), departure)
