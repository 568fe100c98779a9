"""Closed-form flow expressions across the barrier surfaces.

Defines:
- BarrierFlows: values of the flow expressions at one phase point.
- barrier_flows(): evaluation at a point of the finite chart.
- no_return_predicate(): the no-return test with its accuracy check.
- AccuracyAlarm: an orbit came back above the no-return plane.

Notes:
    - Expressions are evaluated formally everywhere; their sign is only
      meaningful on the domain the caller has in mind.
    - E and H carry the factor 1/(N-2) and are NaN for N <= 2.
"""

import logging
import math
from dataclasses import asdict, dataclass

from integrate.solver import EventKind
from params.exponents import exponent_table
from phasespace.charts import Chart, ChartPoint, to_chart
from phasespace.fields import p3_plane_flow

logger = logging.getLogger(__name__)


class AccuracyAlarm(RuntimeError):
    """A sample after the no-return crossing lies above the no-return plane."""


@dataclass(frozen=True)
class BarrierFlows:
    """
    Attributes:
        F1 (float): Flow across the plane Z = (N+sigma)(X/N - Y).
        F2 (float): Flow across the surface Z = sup(X, Y).
        E (float): Flow across the cylinder over the curve through P0 and P1.
        H (float): Flow along that curve inside the plane X = 0.
        Fplane2 (float): Flow across the no-return plane Y = -(sigma+2)/(p-m).
        pln (float): Height of the first plane.
        sup (float): Height of the surface of F2.
        G (float): Flow across Y = 2/(m-1).
    """
    F1: float
    F2: float
    E: float
    H: float
    Fplane2: float
    pln: float
    sup: float
    G: float

    def as_dict(self):
        return asdict(self)


def _coords(point):
    if isinstance(point, ChartPoint):
        point = to_chart(point, Chart.XYZ).coords
    X, Y, *rest = (float(v) for v in point)
    return X, Y, rest[0] if rest else 0.0


def barrier_flows(point, params):
    """
    Evaluate the barrier expressions at ``point``.

    Args:
        point (ChartPoint | tuple): (X, Y, Z), or (X, Y) when Z is irrelevant.
        params (Params): Problem parameters.

    Returns:
        BarrierFlows
    """
    X, Y, Z = _coords(point)
    m, N, p, sigma = params.m, params.N, params.p, params.sigma
    L = params.L
    gap = p - m
    s = N + sigma

    pln = s * (X / N - Y)
    F1 = -p * s * Y * (Y - (gap * s + L) / (N * p * (sigma + 2)) * X)

    sup = pln - p * Y ** 2 + gap * s / (N * (sigma + 2)) * X * Y
    C = s * (m - 1) - 2 * p * sigma
    F2 = (Y + (sigma + 2) / gap) * (
        sigma * gap ** 2 * s / (N ** 2 * (sigma + 2) ** 2) * X ** 2
        + gap * C / (N * (sigma + 2)) * X * Y
        + gap * p * Y ** 2
    )

    Fplane2 = -(sigma + 2) * (m * s - p * (N - 2)) / gap ** 2 - Z

    if N > 2:
        p_s = exponent_table(params).p_s
        E = s / (N - 2) * (
            (p_s - p) * Y ** 2 * (m * Y + N - 2)
            + X * (1 + gap / (sigma + 2) * Y) * (2 * m * Y + N - 2)
        )
        H = s * (p_s - p) / (N - 2) * Y ** 2 * (m * Y + N - 2)
    else:
        E = H = math.nan

    G = p3_plane_flow((X, Y, Z), params)
    return BarrierFlows(F1, F2, E, H, Fplane2, pln, sup, G)


def no_return_predicate(traj, params, tol=1e-9):
    """
    Whether ``traj`` crossed the no-return plane Y = -(sigma+2)/(p-m).

    Raises:
        AccuracyAlarm: A later sample is back above the plane by more than
            ``tol`` (relative), which no exact orbit does.
    """
    crossed = traj.events_of(EventKind.NO_RETURN)
    if not crossed:
        return False
    level = params.no_return_level
    after = traj.s > crossed[0].s
    Y = traj.xyz()[after, 1]
    if Y.size and Y.max() > level + tol * (1 + abs(level)):
        logger.error('orbit returned above the no-return plane (Y=%.6g > %.6g) at %s', Y.max(), level, params)
        raise AccuracyAlarm(f'Y={Y.max():.6g} above the no-return level {level:.6g} after the crossing')
    return True
