"""Critical points of the phase space, their linearization and type.

Defines:
- PointId / Kind: enumerations of catalogued points and their types.
- CriticalPointInfo: coordinates, existence, Jacobian and eigenpairs.
- critical_points(): the full catalogue for given Params.
- classify_point(): type from the real parts of the eigenvalues.

Notes:
    - Finite points live in the XYZ chart, Q1, Q5 and Q_gamma0 in the
      X-projection, Q2/Q3 in the two Y-projections, Q1'/Q5' in the w-plane.
    - Q4 sits on the equator of the Poincare sphere; it is catalogued
      without a linearization.
    - Eigenvectors are unit length with their largest-magnitude component
      having positive real part.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from django.db import models

from params.exponents import derive, exponent_table

from .charts import Chart, ChartPoint
from .fields import jacobian

logger = logging.getLogger(__name__)


class PointId(models.TextChoices):
    P0 = 'P0', 'P0'
    P1 = 'P1', 'P1'
    P2 = 'P2', 'P2'
    P3 = 'P3', 'P3'
    Q1 = 'Q1', 'Q1'
    Q2 = 'Q2', 'Q2'
    Q3 = 'Q3', 'Q3'
    Q4 = 'Q4', 'Q4'
    Q5 = 'Q5', 'Q5'
    QGAMMA0 = 'Qgamma0', 'Q_gamma0'
    Q1PRIME = "Q1'", "Q1' (w-plane)"
    Q5PRIME = "Q5'", "Q5' (w-plane)"


class Kind(models.TextChoices):
    NODE = 'node', 'Unstable node'
    STABLE_NODE = 'stable-node', 'Stable node'
    SADDLE = 'saddle', 'Saddle'
    SADDLE_NODE = 'saddle-node', 'Saddle-node'
    FOCUS_UNSTABLE = 'focus-unstable', 'Unstable focus'
    FOCUS_STABLE = 'focus-stable', 'Stable focus'
    CENTER_DEGENERATE = 'center-degenerate', 'Degenerate (all eigenvalues zero)'


@dataclass(frozen=True)
class CriticalPointInfo:
    """
    One catalogued critical point.

    Attributes:
        id (PointId): Point label.
        coords (ChartPoint | None): Location; None when the point lies outside
            the admissible quadrant (P2 below p_c).
        exists (bool): Whether the point is a valid critical point for Params.
        jacobian (np.ndarray | None): Linearization matrix.
        eigenpairs (tuple): (eigenvalue, eigenvector) pairs, stored as complex.
        kind (Kind | None): Type of the point.
        kappa (float | None): Z/X level of Q_gamma0.
        notes (tuple[str, ...]): Bifurcation or degeneracy remarks.
    """
    id: PointId
    coords: ChartPoint = None
    exists: bool = True
    jacobian: np.ndarray = field(default=None, compare=False)
    eigenpairs: tuple = field(default=(), compare=False)
    kind: Kind = None
    kappa: float = None
    notes: tuple = ()

    @property
    def eigenvalues(self):
        return np.array([value for value, _ in self.eigenpairs], dtype=complex)

    def eigenvector_for(self, target):
        """Eigenvector whose eigenvalue is closest to ``target``."""
        values = self.eigenvalues
        i = int(np.argmin(np.abs(values - target)))
        return self.eigenpairs[i][1]

    def as_dict(self):
        """JSON-ready record; eigenvalues as [real, imag] pairs."""
        return {
            'id': self.id.value,
            'chart': self.coords.chart.value if self.coords is not None else None,
            'coords': list(self.coords.coords) if self.coords is not None else None,
            'exists': self.exists,
            'kind': self.kind.value if self.kind is not None else None,
            'eigenvalues': [[float(v.real), float(v.imag)] for v in self.eigenvalues],
            'kappa': self.kappa,
            'notes': list(self.notes),
        }


def eigenpairs(matrix):
    """Eigenpairs of ``matrix`` with the module's normalization convention."""
    values, vectors = np.linalg.eig(np.asarray(matrix, dtype=float))
    pairs = []
    for i, value in enumerate(values):
        vec = np.asarray(vectors[:, i], dtype=complex)
        vec = vec / np.linalg.norm(vec)
        lead = vec[int(np.argmax(np.abs(vec)))]
        if lead.real < 0 or (lead.real == 0 and lead.imag < 0):
            vec = -vec
        pairs.append((complex(value), vec))
    return tuple(pairs)


def classify_point(info, params=None, tol=1e-9):
    """
    Type of a critical point from the real parts of its eigenvalues.

    Behavior:
        - All eigenvalues (numerically) zero: center-degenerate.
        - Some zero real part: saddle-node.
        - Mixed signs: saddle.
        - All positive / all negative: node or focus (focus when any
          eigenvalue is complex).

    Notes:
        Passing ``params`` enables the p = p_c bifurcation warning for P1/P2.
    """
    values = info.eigenvalues
    if values.size == 0:
        return Kind.CENTER_DEGENERATE
    scale = max(1.0, float(np.max(np.abs(values))))
    re = values.real
    zero = np.abs(re) < tol * scale
    if params is not None and info.id in (PointId.P1, PointId.P2):
        p_c = exponent_table(params).p_c
        if abs(params.p - p_c) < tol * max(1.0, p_c):
            logger.warning('p = p_c: P1 and P2 collide and the system bifurcates (%s)', params)
    if zero.all():
        return Kind.CENTER_DEGENERATE
    if zero.any():
        return Kind.SADDLE_NODE
    complex_pair = bool(np.any(np.abs(values.imag) > tol * scale))
    if (re > 0).all():
        return Kind.FOCUS_UNSTABLE if complex_pair else Kind.NODE
    if (re < 0).all():
        return Kind.FOCUS_STABLE if complex_pair else Kind.STABLE_NODE
    return Kind.SADDLE


def p3_coordinates(params):
    m, N = params.m, params.N
    X3 = 2 * (params.sigma + 2) * (m * N - N + 2) / (params.L * (m - 1))
    return (X3, 2 / (m - 1), 0.0)


def p2_coordinates(params):
    """(X, Y, Z) of P2; Z may be negative when P2 does not exist."""
    m, N, p, sigma = params.m, params.N, params.p, params.sigma
    Z = (sigma + 2) * (p * (N - 2) - m * (N + sigma)) / (p - m) ** 2
    return (0.0, -(sigma + 2) / (p - m), Z)


def kappa(params):
    """Z/X level of Q_gamma0, 1/(alpha (p-1))."""
    return 1.0 / (derive(params).alpha * (params.p - 1))


def q1_scale(params):
    """
    X at which the approach to Q1 becomes slow-fast: the growth rate
    2 - (m-1)Y of X at the no-return level divided by k.
    """
    return (2 - (params.m - 1) * params.no_return_level) / params.k


def _build(point_id, chart, coords, params, exists=True, notes=(), **extra):
    point = ChartPoint(chart, coords)
    matrix = jacobian(point, params)
    pairs = eigenpairs(matrix)
    info = CriticalPointInfo(point_id, point, exists, matrix, pairs, None, notes=tuple(notes), **extra)
    return _with_kind(info, params)


def _with_kind(info, params):
    return CriticalPointInfo(
        info.id, info.coords, info.exists, info.jacobian, info.eigenpairs,
        classify_point(info, params), info.kappa, info.notes,
    )


def critical_points(params):
    """
    Catalogue of every critical point for ``params``.

    Returns:
        list[CriticalPointInfo]: P0..P3, Q1..Q5, Q_gamma0, Q1', Q5' in that order.
    """
    m, N, p, sigma = params.m, params.N, params.p, params.sigma
    k = params.k
    table = exponent_table(params)
    points = []

    p0_notes = ['N = 2: P0 and P1 coincide, saddle-node'] if N == 2 else []
    points.append(_build(PointId.P0, Chart.XYZ, (0.0, 0.0, 0.0), params, notes=p0_notes))

    collide = N >= 3 and abs(p - table.p_c) <= 1e-12 * table.p_c
    bif = ['p = p_c: P1 and P2 coincide'] if collide else []
    points.append(_build(PointId.P1, Chart.XYZ, (0.0, -(N - 2) / m, 0.0), params, notes=bif))

    p2 = p2_coordinates(params)
    p2_exists = N >= 3 and p > table.p_c
    if p2[2] >= -1e-12 and N >= 3:
        points.append(_build(PointId.P2, Chart.XYZ, p2, params, exists=p2_exists, notes=bif))
    else:
        points.append(CriticalPointInfo(PointId.P2, None, False))

    points.append(_build(PointId.P3, Chart.XYZ, p3_coordinates(params), params))
    points.append(_build(PointId.Q1, Chart.XPROJ, (0.0, 0.0, 0.0), params))
    points.append(_build(PointId.Q2, Chart.YPROJ_MINUS, (0.0, 0.0, 0.0), params))
    points.append(_build(PointId.Q3, Chart.YPROJ_PLUS, (0.0, 0.0, 0.0), params))
    points.append(CriticalPointInfo(
        PointId.Q4, ChartPoint(Chart.EQUATOR, (0.0, 0.0, 1.0)), True,
        kind=Kind.CENTER_DEGENERATE, notes=('no orbit enters Q4',),
    ))
    points.append(_build(PointId.Q5, Chart.XPROJ, (0.0, k, 0.0), params))
    kap = kappa(params)
    points.append(_build(PointId.QGAMMA0, Chart.XPROJ, (0.0, 0.0, kap), params, kappa=kap))
    points.append(_build(PointId.Q1PRIME, Chart.WCHART, (0.0, 0.0), params))
    points.append(_build(PointId.Q5PRIME, Chart.WCHART, (k, 0.0), params))
    logger.debug('catalogued %d critical points for %s', len(points), params)
    return points


def point_by_id(params, point_id):
    for info in critical_points(params):
        if info.id == point_id:
            return info
    raise KeyError(point_id)
