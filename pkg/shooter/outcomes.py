"""Results of shots and connection searches.

Defines:
- Family: the one-parameter families of orbits that are shot.
- ShotOutcome: one integrated and analysed orbit of a family.
- ConnectionResult: a located boundary between two behaviours.
- q1_signature(): whether an orbit enters the slow approach to Q1.
- minima_before_no_return(): minima counted up to the no-return crossing.

Notes:
    - Outcomes hold their trajectory only on request; sweep outcomes travel
      between processes without it.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings
from django.db import models

from analyze.oscillations import OscillationCount
from analyze.terminal import TerminalInfo, q1_approach
from integrate.solver import EventKind

logger = logging.getLogger(__name__)


class Family(models.TextChoices):
    P0_C = 'P0_C', 'Unstable manifold of P0, parameter C'
    Q5_THETA = 'Q5_theta', 'Unstable manifold of Q5, angle theta'
    P3_P = 'P3_p', 'Unstable orbit of P3, exponent p'


@dataclass(frozen=True)
class ShotOutcome:
    """
    Attributes:
        family (Family): Family shot.
        value (float): Family parameter (C, theta or p).
        seed (dict): Seed record.
        count (OscillationCount | None): Oscillations along the whole orbit.
        terminal (TerminalInfo | None): Fate of the orbit.
        minima (int): Transversal minima before the no-return crossing.
        tangent (bool): A Y-zero crossing before the no-return crossing was
            tangential.
        y_max (float): Largest Y along the orbit.
        error (str): Failure message; empty on success.
        trajectory (Trajectory | None): Kept on request only.
    """
    family: Family
    value: float
    seed: dict = field(default_factory=dict)
    count: OscillationCount = None
    terminal: TerminalInfo = None
    minima: int = 0
    tangent: bool = False
    y_max: float = -math.inf
    error: str = ''
    trajectory: object = field(default=None, repr=False, compare=False)

    @property
    def ok(self):
        return not self.error

    def as_row(self):
        """CSV row ``param, n_max, n_min, fate``."""
        if not self.ok:
            return [self.value, -1, -1, 'Error']
        return [self.value, self.count.n_max, self.count.n_min, self.terminal.fate.value]

    def as_dict(self):
        data = {
            'family': self.family.value, 'value': self.value, 'seed': self.seed,
            'minima': self.minima, 'tangent': self.tangent, 'y_max': self.y_max, 'error': self.error,
        }
        if self.ok:
            data.update(count=self.count.as_dict(), terminal=self.terminal.as_dict())
        return data


@dataclass(frozen=True)
class ConnectionResult:
    """
    Attributes:
        family (Family): Family searched.
        parameter_star (float): Estimate of the connecting parameter.
        bracket (tuple[float, float]): Final bracket; the first end shows at
            least ``oscillations + 1`` minima (or reaches Y > 0), the second
            does not.
        oscillations (int): Minima of the connecting orbit.
        fate_at_bracket_ends (tuple[TerminalInfo, TerminalInfo]): Fates at both ends.
        q1_signature (bool): The orbit at ``parameter_star`` passes near Q1.
        controls (dict): Integrator settings of the search.
        midpoint (ShotOutcome): Outcome at ``parameter_star``, trajectory kept.
        params (Params): Parameters of the connecting orbit.
        profile_ref (str | int | None): Ledger id or file name of the profile.
    """
    family: Family
    parameter_star: float
    bracket: tuple
    oscillations: int
    fate_at_bracket_ends: tuple
    q1_signature: bool
    controls: dict
    midpoint: ShotOutcome
    params: object = None
    profile_ref: object = None

    def as_dict(self):
        return {
            'family': self.family.value,
            'parameter_star': self.parameter_star,
            'bracket': list(self.bracket),
            'oscillations': self.oscillations,
            'fate_at_bracket_ends': [info.as_dict() for info in self.fate_at_bracket_ends],
            'q1_signature': self.q1_signature,
            'controls': self.controls,
            'midpoint': self.midpoint.as_dict(),
            'params': self.params.as_dict() if self.params is not None else None,
            'profile_ref': self.profile_ref,
        }


def q1_signature(traj, params):
    """Whether ``traj`` enters the slow approach to Q1 (see ``q1_approach``)."""
    return q1_approach(traj, params) is not None


def minima_before_no_return(traj, tangency_tol=None, s_limit=None):
    """
    Transversal ascending Y-zeros before the first no-return crossing, and
    before ``s_limit`` when given.

    Returns:
        tuple[int, bool]: The count and whether a Y-zero crossing in that
        range was tangential.
    """
    tol = settings.BLOWUP['TANGENCY_TOL'] if tangency_tol is None else tangency_tol
    crossed = traj.events_of(EventKind.NO_RETURN)
    limit = crossed[0].s if crossed else np.inf
    if s_limit is not None:
        limit = min(limit, s_limit)
    minima, tangent = 0, False
    for ev in traj.events_of(EventKind.Y_ZERO_UP, EventKind.Y_ZERO_DOWN):
        if ev.s >= limit:
            break
        if abs(ev.rate) < tol:
            tangent = True
        elif ev.kind == EventKind.Y_ZERO_UP:
            minima += 1
    return minima, tangent
