"""Coordinate charts of the phase space and conversions between them.

Defines:
- Chart: tag of every coordinate system in use.
- ChartPoint: a state tagged with its chart and independent variable value.
- to_chart: exact algebraic conversion between charts.

Notes:
    - The independent variables of the charts (eta, eta1, eta2) differ by
      state dependent time changes; ``to_chart`` carries ``s`` over as a
      label and never converts it.
    - Chart sign constraints are enforced with a -1e-12 tolerance.
"""

from dataclasses import dataclass, field

import numpy as np
from django.db import models

SIGN_TOL = 1e-12


class ChartError(ValueError):
    """Invalid chart coordinates or an undefined conversion."""


class Chart(models.TextChoices):
    """Coordinate systems of the profile dynamics."""
    XYZ = 'XYZ', 'Finite part (X, Y, Z)'
    XPROJ = 'XProj', 'Projection on X (x, y, z)'
    YPROJ_PLUS = 'YProjPlus', 'Projection on Y, Y<0 side (x, z, w)'
    YPROJ_MINUS = 'YProjMinus', 'Projection on Y, Y>0 side (x, z, w)'
    WCHART = 'WChart', 'Invariant plane x=0 with w=xz (y, w)'
    PLANE_X0 = 'PlaneX0', 'Invariant plane X=0 (Y, Z)'
    PLANE_Z0 = 'PlaneZ0', 'Invariant plane Z=0 (X, Y)'
    EQUATOR = 'Equator', 'Poincare sphere equator'


COORD_NAMES = {
    Chart.XYZ: ('X', 'Y', 'Z'),
    Chart.XPROJ: ('x', 'y', 'z'),
    Chart.YPROJ_PLUS: ('x', 'z', 'w'),
    Chart.YPROJ_MINUS: ('x', 'z', 'w'),
    Chart.WCHART: ('y', 'w'),
    Chart.PLANE_X0: ('Y', 'Z'),
    Chart.PLANE_Z0: ('X', 'Y'),
    Chart.EQUATOR: ('Xb', 'Yb', 'Zb'),
}

# indices that must stay non-negative
_NONNEGATIVE = {
    Chart.XYZ: (0, 2),
    Chart.XPROJ: (0, 2),
    Chart.WCHART: (1,),
    Chart.PLANE_X0: (1,),
    Chart.PLANE_Z0: (0,),
}


def dimension(chart):
    return len(COORD_NAMES[Chart(chart)])


def nonnegative_indices(chart):
    return _NONNEGATIVE.get(Chart(chart), ())


@dataclass(frozen=True)
class ChartPoint:
    """
    A phase-space state in one chart.

    Attributes:
        chart (Chart): Coordinate system.
        coords (tuple[float, ...]): Coordinates, ordered as COORD_NAMES[chart].
        s (float): Value of the chart's independent variable.
        checked (bool): Enforce the sign constraints of the chart; off for
            states that are validated downstream.
    """
    chart: Chart
    coords: tuple
    s: float = 0.0
    checked: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        chart = Chart(self.chart)
        coords = tuple(float(c) for c in self.coords)
        object.__setattr__(self, 'chart', chart)
        object.__setattr__(self, 'coords', coords)
        if len(coords) != dimension(chart):
            raise ChartError(f'{chart.label} expects {dimension(chart)} coordinates, got {len(coords)}.')
        for i in nonnegative_indices(chart) if self.checked else ():
            if coords[i] < -SIGN_TOL:
                name = COORD_NAMES[chart][i]
                raise ChartError(f'{name} must be non-negative in {chart.label} (got {coords[i]}).')

    @property
    def array(self):
        return np.array(self.coords, dtype=float)

    def as_dict(self):
        return dict(zip(COORD_NAMES[self.chart], self.coords))

    def __str__(self):
        body = ', '.join(f'{k}={v:.6g}' for k, v in self.as_dict().items())
        return f'{self.chart.value}({body})'


def xyz(X, Y, Z, s=0.0):
    return ChartPoint(Chart.XYZ, (X, Y, Z), s)


def _nonzero(value, what):
    if value == 0:
        raise ChartError(f'conversion undefined: {what} is zero')
    return value


def _to_xyz(point):
    c = point.coords
    chart = point.chart
    if chart == Chart.XYZ:
        return c
    if chart == Chart.XPROJ:
        x = _nonzero(c[0], 'x')
        return (1.0 / x, c[1] / x, c[2] / x)
    if chart in (Chart.YPROJ_PLUS, Chart.YPROJ_MINUS):
        w = _nonzero(c[2], 'w')
        return (c[0] / w, 1.0 / w, c[1] / w)
    if chart == Chart.PLANE_X0:
        return (0.0, c[0], c[1])
    if chart == Chart.PLANE_Z0:
        return (c[0], c[1], 0.0)
    raise ChartError(f'no conversion from {chart.label} to the finite part')


def _from_xyz(coords, target):
    X, Y, Z = coords
    if target == Chart.XYZ:
        return coords
    if target == Chart.XPROJ:
        _nonzero(X, 'X')
        return (1.0 / X, Y / X, Z / X)
    if target in (Chart.YPROJ_PLUS, Chart.YPROJ_MINUS):
        _nonzero(Y, 'Y')
        return (X / Y, Z / Y, 1.0 / Y)
    if target == Chart.WCHART:
        _nonzero(X, 'X')
        return (Y / X, Z / X ** 2)
    if target == Chart.PLANE_X0:
        if abs(X) > SIGN_TOL:
            raise ChartError('point is not on the invariant plane X=0')
        return (Y, Z)
    if target == Chart.PLANE_Z0:
        if abs(Z) > SIGN_TOL:
            raise ChartError('point is not on the invariant plane Z=0')
        return (X, Y)
    raise ChartError(f'no conversion to {target.label}')


def to_chart(point, target):
    """
    Convert ``point`` to the ``target`` chart.

    Raises:
        ChartError: When a denominator vanishes or the conversion is undefined
            (WChart and the equator keep no finite-part information).
    """
    target = Chart(target)
    if point.chart == target:
        return point
    if point.chart == Chart.XPROJ and target == Chart.WCHART:
        x, y, z = point.coords
        return ChartPoint(target, (y, x * z), point.s)
    if point.chart in (Chart.WCHART, Chart.EQUATOR) or target == Chart.EQUATOR:
        raise ChartError(f'no conversion from {point.chart.label} to {target.label}')
    return ChartPoint(target, _from_xyz(_to_xyz(point), target), point.s)
