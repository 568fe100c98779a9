"""The separating surface S built over the orbit r_0.

Defines:
- SurfaceMode: exact plane (sigma = 0) or numeric cylinder (sigma > 0).
- Side: S-, S, S+.
- SurfaceS: the surface, with the profile psi(X) of r_0 projected on (X, Y).
- side_of_S(): region membership of a phase point.

Notes:
    - For sigma > 0, S is the cylinder {Y = min(psi(X), 2/(m-1))} over the
      projection of r_0; when r_0 reaches the level 2/(m-1) the surface
      continues as the plane Y = 2/(m-1) from that X on (the plateau).
    - Values of X outside the stored table are extrapolated (plateau value,
      else the slope at the table end) and flagged.
"""

import logging
from dataclasses import dataclass

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError
from django.db import models

from phasespace.charts import Chart, ChartPoint, to_chart

logger = logging.getLogger(__name__)


class SurfaceMode(models.TextChoices):
    EXACT = 'ExactPlane', 'Plane Y = 0'
    NUMERIC = 'NumericCylinder', 'Cylinder over r_0'


class Side(models.TextChoices):
    BELOW = 'S-', 'Below S'
    ON = 'S', 'On S'
    ABOVE = 'S+', 'Above S'


@dataclass(frozen=True, eq=False)
class SurfaceS:
    """
    Attributes:
        mode (SurfaceMode): Plane or cylinder.
        params (Params): Parameters the surface was built for.
        table_x, table_y (np.ndarray): psi samples, table_x strictly increasing.
        plateau (tuple | None): (X at which r_0 reaches 2/(m-1), 2/(m-1)).
    """
    mode: SurfaceMode
    params: object
    table_x: np.ndarray = None
    table_y: np.ndarray = None
    plateau: tuple = None

    @classmethod
    def exact(cls, params):
        """The plane {Y = 0}; only valid for sigma = 0."""
        if params.sigma != 0:
            raise ValidationError({'sigma': 'S is the plane Y = 0 only for sigma = 0.'})
        return cls(SurfaceMode.EXACT, params)

    @classmethod
    def from_r0(cls, traj, params):
        """
        Cylinder over the (X, Y) projection of a traced r_0.

        An orbit on the line Y = 0 (sigma = 0) gives the exact plane.
        """
        if params.sigma == 0:
            return cls.exact(params)
        states = traj.xyz()
        X, Y = states[:, 0], states[:, 1]
        level = 2 / (params.m - 1)
        plateau = None
        above = np.nonzero(Y >= level)[0]
        if above.size:
            cut = int(above[0])
            plateau = (float(X[cut]), level)
            X, Y = X[:cut + 1], np.minimum(Y[:cut + 1], level)
        keep = np.concatenate([[True], X[1:] > np.maximum.accumulate(X)[:-1]])
        X, Y = X[keep], Y[keep]
        if X.size < 2:
            raise ValidationError('r_0 projection is too short to build S.')
        logger.debug('surface S built from %d samples of r_0 (plateau=%s)', X.size, plateau)
        return cls(SurfaceMode.NUMERIC, params, X, Y, plateau)

    @property
    def level(self):
        return 2 / (self.params.m - 1)

    def psi(self, X):
        """
        Height of S above X.

        Returns:
            tuple[float, bool]: The value and whether it was extrapolated.
        """
        if self.mode == SurfaceMode.EXACT:
            return 0.0, False
        tx, ty = self.table_x, self.table_y
        if tx[0] <= X <= tx[-1]:
            return float(np.interp(X, tx, ty)), False
        if X > tx[-1] and self.plateau is not None:
            return self.level, True
        if X < tx[0]:
            slope = (ty[1] - ty[0]) / (tx[1] - tx[0])
            return float(ty[0] + slope * (X - tx[0])), True
        slope = (ty[-1] - ty[-2]) / (tx[-1] - tx[-2])
        return float(ty[-1] + slope * (X - tx[-1])), True

    def event_value(self, X, Y, Z=0.0):
        """Signed distance in Y from S: positive in S+, negative in S-."""
        if self.mode == SurfaceMode.EXACT:
            return Y
        return Y - min(self.psi(X)[0], self.level)

    def as_dict(self):
        data = {'mode': self.mode.value, 'plateau': self.plateau}
        if self.mode == SurfaceMode.NUMERIC:
            data.update(points=int(self.table_x.size), x_range=[float(self.table_x[0]), float(self.table_x[-1])])
        return data


def side_of_S(point, surface, band_tol=None):
    """
    Region of ``point`` relative to ``surface``.

    Args:
        point (ChartPoint | tuple): Phase point; chart points are converted
            to the finite chart, tuples are read as (X, Y, Z).
        surface (SurfaceS): Surface of the same parameters.
        band_tol (float | None): Half width of the band reported as S,
            scaled by 1 + |Y|; BAND_TOL by default.

    Returns:
        Side
    """
    band_tol = settings.BLOWUP['BAND_TOL'] if band_tol is None else band_tol
    if isinstance(point, ChartPoint):
        point = to_chart(point, Chart.XYZ).coords
    X, Y, Z = (float(v) for v in point)
    if surface.mode == SurfaceMode.NUMERIC:
        _, extrapolated = surface.psi(X)
        if extrapolated:
            logger.warning('X=%.6g lies outside the psi table; side of S uses an extrapolated height', X)
    value = surface.event_value(X, Y, Z)
    if abs(value) < band_tol * (1 + abs(Y)):
        return Side.ON
    return Side.ABOVE if value > 0 else Side.BELOW
