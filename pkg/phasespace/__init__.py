from .charts import COORD_NAMES, Chart, ChartError, ChartPoint, to_chart, xyz  # noqa: F401
from .fields import iso_curve_z, jacobian, p3_plane_flow, system, vf  # noqa: F401
from .points import (  # noqa: F401
    CriticalPointInfo,
    Kind,
    PointId,
    classify_point,
    critical_points,
    kappa,
    p3_coordinates,
    point_by_id,
)
