"""Seed points on the invariant manifolds the shooting starts from.

Defines:
- Seed / SeedOrder: a point near a critical point plus its family parameter.
- ManifoldExpansion: second-order Taylor coefficients of the unstable
  manifold of P0.
- seed_p0, seed_p3, seed_q5: the three shooting families.
- seed_q5_prime, seed_q1_prime: seeds of the w-plane system.
- amplitude_of_C, q1_center_y: closed-form helpers tied to the seeds.

Notes:
    - The unstable manifold of P0 is the graph
      Z = (N+sigma)(X/N - Y) + a X^2 + b X Y + c Y^2 + o(|(X,Y)|^2).
    - Eigenvectors follow the phasespace convention (unit length); seeds
      re-orient them so that the chart sign constraints hold.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError
from django.db import models

from params.exponents import derive
from phasespace.charts import Chart, ChartPoint
from phasespace.points import PointId, p3_coordinates, point_by_id

logger = logging.getLogger(__name__)

EPSILON_MAX = 1e-2


class SeedOrder(models.TextChoices):
    FIRST = 'first', 'First order (tangent plane)'
    SECOND = 'second', 'Second order (Taylor expansion)'


@dataclass(frozen=True)
class Seed:
    """
    Starting point of one shot.

    Attributes:
        origin (PointId): Critical point the seed leaves from.
        parameter (float): Family parameter (C for P0, theta for Q5, the
            signed offset for P3, y0 for Q1').
        epsilon (float): Distance scale of the seed.
        point (ChartPoint): The seed itself.
        order (SeedOrder): Expansion order used.
        infinite (bool): True for the l_infinity orbit of the P0 family.
    """
    origin: PointId
    parameter: float
    epsilon: float
    point: ChartPoint
    order: SeedOrder = SeedOrder.FIRST
    infinite: bool = False

    @property
    def chart(self):
        return self.point.chart

    def as_dict(self):
        return {
            'origin': str(self.origin),
            'parameter': 'inf' if self.infinite else self.parameter,
            'epsilon': self.epsilon,
            'chart': self.chart.value,
            'coords': list(self.point.coords),
            'order': str(self.order),
        }


@dataclass(frozen=True)
class ManifoldExpansion:
    """Coefficients a, b, c of the second-order graph of the P0 unstable manifold."""
    a: float
    b: float
    c: float

    def quadratic(self, X, Y):
        return self.a * X * X + self.b * X * Y + self.c * Y * Y


def _check_epsilon(epsilon):
    if not 0 < epsilon <= EPSILON_MAX:
        raise ValidationError({'epsilon': f'epsilon must lie in (0, {EPSILON_MAX}] (got {epsilon}).'})


def unstable_expansion(params):
    """
    Second-order coefficients of the unstable manifold of P0.

    The coefficients solve the invariance equation of the graph
    Z = (N+sigma)(X/N - Y) + aX^2 + bXY + cY^2 order by order; on the
    plane Y = X/N they add (N+sigma)(p-p_F)/(N(N+2)(sigma+2)) X^2.
    b is solved from the XY coefficient of the invariance equation; the
    closed form through A(m, N, p, sigma) that circulates for it does not
    satisfy that equation, so it is not used.
    """
    m, N, p, s = params.m, params.N, params.p, params.sigma
    c = -p * (N + s) / (N + 2 * s + 2)
    b = (N + s) / (N + s + 2) * (
        (p - 1) / N + (p - m) / (s + 2) - 2 * p * s / (N * (N + 2 * s + 2))
    )
    a = s * b / (N * (N + 2))
    return ManifoldExpansion(a=a, b=b, c=c)


def seed_p0(C, epsilon, params, order=SeedOrder.FIRST, infinite=False):
    """
    Seed on the two-dimensional unstable manifold of P0.

    Args:
        C (float): Family parameter, Z ~ C X^{(sigma+2)/2}; C = 0 is the
            orbit l_0 in {Z = 0}.
        epsilon (float): X-distance from P0 (Z-distance for ``infinite``).
        params (Params): Problem parameters.
        order (SeedOrder): First order uses the tangent plane, second order
            adds the quadratic terms of ``unstable_expansion``.
        infinite (bool): Return the l_infinity seed in {X = 0} instead.

    Returns:
        Seed: In the XYZ chart.

    Raises:
        ValidationError: If epsilon is out of range or C < 0.
    """
    _check_epsilon(epsilon)
    order = SeedOrder(order)
    N, sigma = params.N, params.sigma
    if infinite:
        Z = epsilon
        if order == SeedOrder.SECOND:
            c = unstable_expansion(params).c
            Y = -2 * Z / ((N + sigma) + math.sqrt((N + sigma) ** 2 + 4 * c * Z))
        else:
            Y = -Z / (N + sigma)
        return Seed(PointId.P0, math.inf, epsilon, ChartPoint(Chart.XYZ, (0.0, Y, Z)), order, True)

    if C < 0:
        raise ValidationError({'C': 'C must be non-negative.'})
    X = epsilon
    Z = C * X ** ((sigma + 2) / 2)
    if Z > math.sqrt(epsilon):
        # keep the seed close to P0 when Z would dominate (sigma < 0, large C)
        X = (math.sqrt(epsilon) / C) ** (2 / (sigma + 2))
        Z = math.sqrt(epsilon)
    Y = X / N - Z / (N + sigma)
    if order == SeedOrder.SECOND and Z > 0:
        Z = max(0.0, Z + unstable_expansion(params).quadratic(X, Y))
    return Seed(PointId.P0, float(C), epsilon, ChartPoint(Chart.XYZ, (X, Y, Z)), order)


def amplitude_of_C(C, params):
    """
    Profile amplitude f(0) reached by the P0 seeds of parameter C as epsilon -> 0.

    f(0) = [C m (alpha/m)^{(sigma+2)/2}]^{2/L}.

    Raises:
        ValidationError: If C <= 0 or sigma < 0 (no finite f(0) there).
    """
    if not C > 0:
        raise ValidationError({'C': 'C must be positive.'})
    if params.sigma < 0:
        raise ValidationError({'sigma': 'f(0) is finite only for sigma >= 0.'})
    alpha = derive(params).alpha
    m = params.m
    return (C * m * (alpha / m) ** ((params.sigma + 2) / 2)) ** (2 / params.L)


def C_of_amplitude(D, params):
    """Inverse of ``amplitude_of_C``."""
    alpha = derive(params).alpha
    m = params.m
    return D ** (params.L / 2) / (m * (alpha / m) ** ((params.sigma + 2) / 2))


def seed_p3(epsilon, params, offset=1.0):
    """
    Seed on the one-dimensional unstable manifold of P3.

    The displacement is ``offset * epsilon`` along the eigenvector of
    lambda_3 = L/(m-1), oriented with positive Z-component.
    """
    _check_epsilon(epsilon)
    if offset <= 0:
        raise ValidationError({'offset': 'offset must be positive.'})
    info = point_by_id(params, PointId.P3)
    lam3 = params.L / (params.m - 1)
    vec = np.real(info.eigenvector_for(lam3))
    if abs(vec[2]) < 1e-14:
        raise ValidationError('degenerate unstable eigenvector at P3.')
    if vec[2] < 0:
        vec = -vec
    base = np.array(p3_coordinates(params))
    point = base + offset * epsilon * vec
    return Seed(PointId.P3, float(offset), epsilon, ChartPoint(Chart.XYZ, point), SeedOrder.FIRST)


def q5_directions(params):
    """
    Unit eigenvectors e1 (eigenvalue (m-1)k, x-component > 0) and e3 = (0, 0, 1) at Q5.

    The y-component of e1 carries the factor m in its denominator, as the
    Jacobian at Q5 requires; dropping it gives a vector off the eigenline.
    """
    m, N, p, sigma = params.m, params.N, params.p, params.sigma
    e1 = np.array([1.0, (sigma + 2 - N * (p - m)) / (m * (p - m)), 0.0])
    e1 /= np.linalg.norm(e1)
    return e1, np.array([0.0, 0.0, 1.0])


def seed_q5(theta, epsilon, params):
    """
    Seed near Q5 in the X-projection, mixing the two unstable directions.

    point = Q5 + epsilon (cos(theta) e1 + sin(theta) e3), theta in [0, pi/2].
    """
    _check_epsilon(epsilon)
    if not 0 <= theta <= math.pi / 2:
        raise ValidationError({'theta': 'theta must lie in [0, pi/2].'})
    e1, e3 = q5_directions(params)
    base = np.array([0.0, params.k, 0.0])
    point = base + epsilon * (math.cos(theta) * e1 + math.sin(theta) * e3)
    point[0] = max(point[0], 0.0)
    return Seed(PointId.Q5, float(theta), epsilon, ChartPoint(Chart.XPROJ, point), SeedOrder.FIRST)


def seed_q5_prime(epsilon, params):
    """Seed on the unstable manifold of Q5' in the w-plane, entering w > 0."""
    _check_epsilon(epsilon)
    k = params.k
    vec = np.array([-1.0, (params.m + params.p - 1) * k])
    vec /= np.linalg.norm(vec)
    point = np.array([k, 0.0]) + epsilon * vec
    return Seed(PointId.Q5PRIME, 0.0, epsilon, ChartPoint(Chart.WCHART, point), SeedOrder.FIRST)


def seed_q1_prime(y0, params):
    """Point w = k y0 - (m+p-1) y0^2 on a center manifold of Q1' (y0 > 0 small)."""
    if not 0 < y0 <= EPSILON_MAX:
        raise ValidationError({'y0': f'y0 must lie in (0, {EPSILON_MAX}].'})
    w = params.k * y0 - (params.m + params.p - 1) * y0 ** 2
    return Seed(PointId.Q1PRIME, float(y0), y0, ChartPoint(Chart.WCHART, (y0, w)), SeedOrder.SECOND)


def q1_center_y(x, z, params):
    """
    Second-order center manifold of Q1 in the X-projection, y as a function of (x, z).

    Orbits entering Q1 satisfy y = q1_center_y(x, z) + o(|(x,z)|^2). With
    y = h(x, z), invariance reads y' = h_x x' + h_z z'. The linear part
    gives h = -x/k. At second order x' = -(2 + (m-1)/k) x^2, z' is of order
    xz and z carries no pure z^2 term, so
    h = (-x + A x^2 + x z) / k with A = (m + (2-N) k) / k^2, which equals
    (sigma+2)(m(N+sigma) - p(N-2)) / (p-m)^2.
    """
    m, N, p, sigma = params.m, params.N, params.p, params.sigma
    ratio = (sigma + 2) / (p - m)
    quad = (sigma + 2) * (m * (N + sigma) - p * (N - 2)) / (p - m) ** 2
    return ratio * (-x + quad * x * x + x * z)
