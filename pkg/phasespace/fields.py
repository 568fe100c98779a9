"""Polynomial vector fields and analytic Jacobians of every chart.

The finite system in the variables
X = (alpha/m) xi^2 f^{1-m}, Y = xi f'/f, Z = xi^{sigma+2} f^{p-m}/m, eta = ln xi
reads

    X' = X (2 - (m-1) Y)
    Y' = X - (N-2) Y - Z - m Y^2 + k X Y          k = (p-m)/(sigma+2)
    Z' = Z (sigma + 2 + (p-m) Y)

The other charts are its projections (x = 1/X, y = Y/X, z = Z/X), its
Y-projections (x = X/Y, z = Z/Y, w = 1/Y), the invariant planes X = 0 and
Z = 0 and the plane x = 0 of the X-projection written with w = x z.
"""

import numpy as np

from .charts import Chart, ChartError, ChartPoint


def _xyz(params):
    m, N, p, sigma = params.m, params.N, params.p, params.sigma
    k = params.k

    def rhs(s, u):
        X, Y, Z = u[0], u[1], u[2]
        return np.array([
            X * (2 - (m - 1) * Y),
            X - (N - 2) * Y - Z - m * Y * Y + k * X * Y,
            Z * (sigma + 2 + (p - m) * Y),
        ])

    def jac(u):
        X, Y, Z = u[0], u[1], u[2]
        return np.array([
            [2 - (m - 1) * Y, -(m - 1) * X, 0.0],
            [1 + k * Y, -(N - 2) - 2 * m * Y + k * X, -1.0],
            [0.0, (p - m) * Z, sigma + 2 + (p - m) * Y],
        ])

    return rhs, jac


def _xproj(params):
    m, N, p, sigma = params.m, params.N, params.p, params.sigma
    k = params.k

    def rhs(s, u):
        x, y, z = u[0], u[1], u[2]
        return np.array([
            x * ((m - 1) * y - 2 * x),
            -y * y + k * y + x - N * x * y - x * z,
            z * ((p - 1) * y + sigma * x),
        ])

    def jac(u):
        x, y, z = u[0], u[1], u[2]
        return np.array([
            [(m - 1) * y - 4 * x, (m - 1) * x, 0.0],
            [1 - N * y - z, -2 * y + k - N * x, -x],
            [sigma * z, (p - 1) * z, (p - 1) * y + sigma * x],
        ])

    return rhs, jac


def _yproj(params, sign):
    # sign = +1: independent variable with d eta2 = -Y d eta (Y < 0 side)
    # sign = -1: d eta2 = Y d eta (Y > 0 side)
    N, p, sigma, m = params.N, params.p, params.sigma, params.m
    k = params.k

    def rhs(s, u):
        x, z, w = u[0], u[1], u[2]
        return sign * np.array([
            -x - N * x * w + k * x * x + x * x * w - x * z * w,
            -p * z - (N + sigma) * z * w + k * x * z + x * z * w - z * z * w,
            -m * w - (N - 2) * w * w + k * x * w + x * w * w - z * w * w,
        ])

    def jac(u):
        x, z, w = u[0], u[1], u[2]
        return sign * np.array([
            [-1 - N * w + 2 * k * x + 2 * x * w - z * w, -x * w, -N * x + x * x - x * z],
            [k * z + z * w, -p - (N + sigma) * w + k * x + x * w - 2 * z * w, -(N + sigma) * z + x * z - z * z],
            [k * w + w * w, -w * w, -m - 2 * (N - 2) * w + k * x + 2 * x * w - 2 * z * w],
        ])

    return rhs, jac


def _wchart(params):
    m, p = params.m, params.p
    k = params.k
    if m + p - 2 == 0:
        raise ChartError('the w-plane system needs m + p - 2 != 0')

    def rhs(s, u):
        y, w = u[0], u[1]
        return np.array([-y * y + k * y - w, (m + p - 2) * y * w])

    def jac(u):
        y, w = u[0], u[1]
        return np.array([[-2 * y + k, -1.0], [(m + p - 2) * w, (m + p - 2) * y]])

    return rhs, jac


def _plane_x0(params):
    m, N, p, sigma = params.m, params.N, params.p, params.sigma

    def rhs(s, u):
        Y, Z = u[0], u[1]
        return np.array([-(N - 2) * Y - Z - m * Y * Y, Z * (sigma + 2 + (p - m) * Y)])

    def jac(u):
        Y, Z = u[0], u[1]
        return np.array([[-(N - 2) - 2 * m * Y, -1.0], [(p - m) * Z, sigma + 2 + (p - m) * Y]])

    return rhs, jac


def _plane_z0(params):
    m, N = params.m, params.N
    k = params.k

    def rhs(s, u):
        X, Y = u[0], u[1]
        return np.array([X * (2 - (m - 1) * Y), X - (N - 2) * Y - m * Y * Y + k * X * Y])

    def jac(u):
        X, Y = u[0], u[1]
        return np.array([[2 - (m - 1) * Y, -(m - 1) * X], [1 + k * Y, -(N - 2) - 2 * m * Y + k * X]])

    return rhs, jac


_BUILDERS = {
    Chart.XYZ: _xyz,
    Chart.XPROJ: _xproj,
    Chart.YPROJ_PLUS: lambda params: _yproj(params, 1.0),
    Chart.YPROJ_MINUS: lambda params: _yproj(params, -1.0),
    Chart.WCHART: _wchart,
    Chart.PLANE_X0: _plane_x0,
    Chart.PLANE_Z0: _plane_z0,
}


def system(chart, params):
    """
    Return ``(rhs, jac)`` for a chart.

    ``rhs(s, u)`` has the signature expected by ``scipy.integrate.solve_ivp``;
    ``jac(u)`` returns the analytic Jacobian matrix.

    Raises:
        ChartError: For the equator chart, which carries no vector field.
    """
    try:
        builder = _BUILDERS[Chart(chart)]
    except KeyError:
        raise ChartError(f'{Chart(chart).label} has no vector field') from None
    return builder(params)


def vf(point, params):
    """Exact right-hand side of the chart's system at ``point``."""
    rhs, _ = system(point.chart, params)
    return rhs(point.s, point.array)


def jacobian(point, params):
    """Exact analytic Jacobian of the chart's system at ``point``."""
    _, jac = system(point.chart, params)
    return jac(point.array)


def iso_curve_z(Y, params):
    """Candidate invariant curve Z = -(N+sigma)/(N-2) (mY+N-2) Y of the plane X = 0 (N >= 3)."""
    N, m = params.N, params.m
    if N <= 2:
        raise ChartError('the curve is defined for N >= 3 only')
    return -(N + params.sigma) / (N - 2) * (m * Y + N - 2) * Y


def p3_plane_flow(point, params):
    """
    Flux G(X, Z) across the plane Y = 2/(m-1) that contains P3.

    Positive values cross towards larger Y.
    """
    X, _, Z = _finite(point)
    m, sigma = params.m, params.sigma
    L = params.L
    x3 = 2 * (sigma + 2) * (m * params.N - params.N + 2) / (L * (m - 1))
    return L / ((sigma + 2) * (m - 1)) * (X - x3) - Z


def _finite(point):
    if isinstance(point, ChartPoint):
        if point.chart != Chart.XYZ:
            raise ChartError('expected a point of the finite chart')
        return point.coords
    return tuple(point)
