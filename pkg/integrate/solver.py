"""Adaptive integration of the chart systems with event location.

Defines:
- Controls: tolerances, limits and the event set of one integration.
- EventKind / Event: located crossings along an orbit.
- Trajectory: immutable numeric orbit with its events and stop reason.
- integrate(): one orbit from a seed or chart point.
- integrate_q5(): two-stage orbit out of Q5 reported in the finite chart.
- refine_event(): re-localization of an event on the dense output.
- GluedSolution: dense output of an orbit assembled from pieces.

Notes:
    - The system is autonomous; s = point.s at the seed fixes the gauge.
    - Non-negative coordinates undershooting by less than SIGN_TOL are
      clamped to zero; larger undershoots abort with IntegrationError.
    - Event observables are chart generic: in the X-projection the sign of
      Y is the sign of y; in the w-plane the Y-zero events are the extrema
      of y.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError
from django.db import models
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from phasespace.charts import COORD_NAMES, SIGN_TOL, Chart, ChartError, ChartPoint, nonnegative_indices
from phasespace.fields import system

from . import io

logger = logging.getLogger(__name__)

Y_FLOOR_FACTOR = 10.0
Q5_SWITCH_X = 1e-3
ETA_NEWTON = 4
_IMPLICIT = ('Radau', 'BDF', 'LSODA')


class IntegrationError(RuntimeError):
    """
    Failed integration.

    Attributes:
        last_state (tuple | None): Last accepted state, in the chart of the run.
    """

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = None if last_state is None else tuple(float(v) for v in last_state)


class EventMissing(LookupError):
    """Requested event kind not recorded on the trajectory."""


class EventKind(models.TextChoices):
    Y_ZERO_UP = 'YZeroUp', 'Y crosses zero upwards'
    Y_ZERO_DOWN = 'YZeroDown', 'Y crosses zero downwards'
    NO_RETURN = 'NoReturnCross', 'No-return plane crossed'
    SURFACE_S = 'SurfaceSCross', 'Surface S crossed'
    RADIUS = 'RadiusExceeded', 'Radius limit reached'
    NEAR_POINT = 'NearCriticalPoint', 'Critical point neighbourhood entered'
    Y_FLOOR = 'YFloor', 'Y below the floor level'


class StopReason(models.TextChoices):
    S_MAX = 's-max', 'Independent variable limit'
    RADIUS = 'radius', 'Radius limit'
    Y_FLOOR = 'y-floor', 'Y floor'
    NEAR_POINT = 'near-point', 'Near a critical point'


DEFAULT_EVENTS = frozenset({
    EventKind.Y_ZERO_UP, EventKind.Y_ZERO_DOWN, EventKind.NO_RETURN,
    EventKind.Y_FLOOR, EventKind.RADIUS,
})

_TERMINAL = {EventKind.RADIUS: StopReason.RADIUS, EventKind.Y_FLOOR: StopReason.Y_FLOOR,
             EventKind.NEAR_POINT: StopReason.NEAR_POINT}

_DIRECTION = {
    EventKind.Y_ZERO_UP: 1.0, EventKind.Y_ZERO_DOWN: -1.0, EventKind.NO_RETURN: -1.0,
    EventKind.Y_FLOOR: -1.0, EventKind.RADIUS: -1.0, EventKind.NEAR_POINT: -1.0,
    EventKind.SURFACE_S: 0.0,
}


@dataclass(frozen=True)
class Controls:
    """
    Integrator settings of one run.

    Attributes:
        rel_tol, abs_tol (float): Local error control of the Runge-Kutta pair.
        s_max (float): Length of the integration interval in s.
        radius_max (float): Max-norm bound of the state.
        max_step (float): Largest step in s.
        method (str): ``solve_ivp`` method name.
        events (frozenset[EventKind]): Recorded events.
        near_points (tuple): Chart coordinates that stop the run when approached.
        near_tol (float): Radius of the stopping neighbourhoods.
    """
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    s_max: float = 200.0
    radius_max: float = 1e6
    max_step: float = 0.05
    method: str = 'DOP853'
    events: frozenset = DEFAULT_EVENTS
    near_points: tuple = ()
    near_tol: float = 1e-6

    def __post_init__(self):
        errors = {}
        for name in ('rel_tol', 'abs_tol', 's_max', 'radius_max', 'max_step', 'near_tol'):
            if not getattr(self, name) > 0:
                errors[name] = f'{name} must be positive.'
        if errors:
            raise ValidationError(errors)
        object.__setattr__(self, 'events', frozenset(EventKind(k) for k in self.events))

    @classmethod
    def from_settings(cls, **overrides):
        """Defaults from ``settings.BLOWUP``; ``None`` overrides are ignored."""
        conf = settings.BLOWUP
        values = {
            'rel_tol': conf['REL_TOL'],
            'abs_tol': conf['ABS_TOL'],
            's_max': conf['S_MAX'],
            'radius_max': conf['RADIUS_MAX'],
            'max_step': conf['MAX_STEP'],
            'method': conf['METHOD'],
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    def tightened(self, factor=10.0):
        return replace(self, rel_tol=self.rel_tol / factor, abs_tol=self.abs_tol / factor)

    def with_events(self, *extra, near_points=None):
        events = self.events | {EventKind(k) for k in extra}
        near = self.near_points if near_points is None else tuple(tuple(p) for p in near_points)
        return replace(self, events=events, near_points=near)

    def as_dict(self):
        return {
            'rel_tol': self.rel_tol, 'abs_tol': self.abs_tol, 's_max': self.s_max,
            'radius_max': self.radius_max, 'max_step': self.max_step, 'method': self.method,
            'events': sorted(str(k) for k in self.events),
        }


@dataclass(frozen=True)
class Event:
    """
    A located event.

    Attributes:
        kind (EventKind): What was crossed.
        s (float): Location in the trajectory's independent variable.
        coords (tuple[float, ...]): State at the event, in the trajectory's chart.
        rate (float): Derivative of the event function along the flow.
    """
    kind: EventKind
    s: float
    coords: tuple
    rate: float = 0.0

    def as_dict(self):
        return {'kind': str(self.kind), 's': self.s, 'coords': list(self.coords), 'rate': self.rate}

    @classmethod
    def from_dict(cls, data):
        return cls(EventKind(data['kind']), float(data['s']), tuple(data['coords']), float(data.get('rate', 0.0)))


def states_to_xyz(chart, states):
    """Vectorized conversion of an (n, d) state array to finite coordinates."""
    chart = Chart(chart)
    u = np.atleast_2d(np.asarray(states, dtype=float))
    with np.errstate(divide='ignore', invalid='ignore'):
        if chart == Chart.XYZ:
            return u.copy()
        if chart == Chart.XPROJ:
            return np.column_stack([1.0 / u[:, 0], u[:, 1] / u[:, 0], u[:, 2] / u[:, 0]])
        if chart in (Chart.YPROJ_PLUS, Chart.YPROJ_MINUS):
            return np.column_stack([u[:, 0] / u[:, 2], 1.0 / u[:, 2], u[:, 1] / u[:, 2]])
        if chart == Chart.PLANE_X0:
            return np.column_stack([np.zeros(len(u)), u[:, 0], u[:, 1]])
        if chart == Chart.PLANE_Z0:
            return np.column_stack([u[:, 0], u[:, 1], np.zeros(len(u))])
    raise ChartError(f'{chart.label} has no finite-part image')


def observable(kind, chart, params, surface=None, controls=None):
    """
    Scalar event function g(u) of ``kind`` in ``chart``, or None when the
    event has no meaning there.
    """
    kind, chart = EventKind(kind), Chart(chart)
    if kind in (EventKind.Y_ZERO_UP, EventKind.Y_ZERO_DOWN):
        if chart in (Chart.XYZ, Chart.XPROJ, Chart.PLANE_Z0):
            return lambda u: u[1]
        if chart == Chart.PLANE_X0:
            return lambda u: u[0]
        if chart == Chart.WCHART:
            k = params.k
            return lambda u: -u[0] * u[0] + k * u[0] - u[1]
        return None
    if kind in (EventKind.NO_RETURN, EventKind.Y_FLOOR):
        level = params.no_return_level
        target = level if kind == EventKind.NO_RETURN else Y_FLOOR_FACTOR * level
        if chart in (Chart.XYZ, Chart.PLANE_Z0):
            return lambda u: u[1] - target
        if chart == Chart.PLANE_X0:
            return lambda u: u[0] - target
        if chart == Chart.XPROJ:
            return lambda u: u[1] - target * u[0]
        return None
    if kind == EventKind.SURFACE_S:
        if surface is None or chart not in (Chart.XYZ, Chart.PLANE_X0, Chart.PLANE_Z0):
            return None
        if chart == Chart.XYZ:
            return lambda u: surface.event_value(u[0], u[1], u[2])
        if chart == Chart.PLANE_X0:
            return lambda u: surface.event_value(0.0, u[0], u[1])
        return lambda u: surface.event_value(u[0], u[1], 0.0)
    if kind == EventKind.RADIUS:
        radius = (controls or Controls()).radius_max
        return lambda u: radius - float(np.max(np.abs(u)))
    return None


def _near_observable(target, tol):
    target = np.asarray(target, dtype=float)
    return lambda u: float(np.linalg.norm(np.asarray(u[:target.size]) - target)) - tol


def _event_functions(chart, params, controls, surface, project=None):
    project = project or (lambda u: u)
    kinds, functions = [], []
    for kind in sorted(controls.events):
        if kind == EventKind.NEAR_POINT:
            continue
        g = observable(kind, chart, params, surface, controls)
        if g is None:
            continue
        kinds.append(kind)
        functions.append((g, kind in _TERMINAL, _DIRECTION[kind]))
    if EventKind.NEAR_POINT in controls.events:
        for target in controls.near_points:
            kinds.append(EventKind.NEAR_POINT)
            functions.append((_near_observable(target, controls.near_tol), True, -1.0))
    events = []
    for g, terminal, direction in functions:
        def fn(s, u, g=g):
            return g(project(u))
        fn.terminal = terminal
        fn.direction = direction
        events.append(fn)
    return kinds, events, [g for g, _, _ in functions]


def _rate(g, rhs, s, u):
    u = np.asarray(u, dtype=float)
    F = rhs(s, u)
    h = 1e-7 * (1.0 + float(np.max(np.abs(u)))) / (1.0 + float(np.max(np.abs(F))))
    return (g(u + h * F) - g(u - h * F)) / (2 * h)


def _guarded(rhs):
    def wrapped(s, u):
        out = rhs(s, u)
        if not np.all(np.isfinite(out)):
            raise IntegrationError(f'non-finite right-hand side at s={s:.6g}', u)
        return out
    return wrapped


def _clamp(chart, states):
    states = np.array(states, dtype=float)
    for i in nonnegative_indices(chart):
        column = states[:, i]
        scale = np.maximum(1.0, np.max(np.abs(states), axis=1))
        bad = np.nonzero(column < -SIGN_TOL * scale)[0]
        if bad.size:
            j = int(bad[0])
            name = COORD_NAMES[chart][i]
            raise IntegrationError(f'{name} left the admissible region ({column[j]:.3g})', states[max(j - 1, 0)])
        states[:, i] = np.maximum(column, 0.0)
    return states


def _check_start(point):
    u = point.array
    scale = max(1.0, float(np.max(np.abs(u))))
    for i in nonnegative_indices(point.chart):
        if u[i] < -SIGN_TOL * scale:
            name = COORD_NAMES[point.chart][i]
            raise IntegrationError(f'{name} of the initial state is negative ({u[i]:.3g})', u)


def _solve(rhs, jac, span, u0, controls, events):
    kwargs = dict(
        method=controls.method, rtol=controls.rel_tol, atol=controls.abs_tol,
        max_step=controls.max_step, dense_output=True, events=events or None,
    )
    if controls.method in _IMPLICIT:
        kwargs['jac'] = lambda s, u: jac(u)
    sol = solve_ivp(_guarded(rhs), span, u0, **kwargs)
    if sol.status == -1:
        last = sol.y[:, -1] if sol.y.size else u0
        raise IntegrationError(f'integration failed: {sol.message}', last)
    return sol


def _stop_reason(sol, kinds):
    if sol.status != 1:
        return StopReason.S_MAX
    last_s, reason = -np.inf, StopReason.S_MAX
    for kind, times in zip(kinds, sol.t_events):
        if kind in _TERMINAL and len(times) and times[-1] >= last_s:
            last_s, reason = times[-1], _TERMINAL[kind]
    return reason


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Numeric orbit of one chart system.

    Attributes:
        chart (Chart): Coordinate system of ``states``.
        s (np.ndarray): Strictly increasing independent variable.
        states (np.ndarray): (n, d) array of accepted states.
        events (tuple[Event, ...]): Located events ordered by s.
        stop (StopReason): Why the integration ended.
        params (Params): Problem parameters of the run.
        meta (dict): Provenance (seed, controls, extra markers such as the
            dead-core edge of Q5 orbits).
        sol (callable | None): Dense output, s -> state.
    """
    chart: Chart
    s: np.ndarray
    states: np.ndarray
    events: tuple = ()
    stop: StopReason = StopReason.S_MAX
    params: object = None
    meta: dict = field(default_factory=dict)
    sol: object = field(default=None, repr=False)

    def __len__(self):
        return len(self.s)

    @property
    def final(self):
        return ChartPoint(self.chart, self.states[-1], float(self.s[-1]))

    def point(self, i):
        return ChartPoint(self.chart, self.states[i], float(self.s[i]))

    def samples(self):
        return [(float(s), tuple(row)) for s, row in zip(self.s, self.states)]

    def events_of(self, *kinds):
        kinds = {EventKind(k) for k in kinds}
        return tuple(ev for ev in self.events if ev.kind in kinds)

    def has_event(self, kind):
        return bool(self.events_of(kind))

    def xyz(self):
        """States in the finite chart."""
        return states_to_xyz(self.chart, self.states)

    def column(self, name):
        return self.states[:, COORD_NAMES[self.chart].index(name)]

    def resample(self, s_grid):
        """States at ``s_grid`` from the dense output, else a cubic spline of the samples."""
        s_grid = np.atleast_1d(np.asarray(s_grid, dtype=float))
        if self.sol is not None:
            return np.atleast_2d(self.sol(s_grid).T)
        spline = CubicSpline(self.s, self.states, axis=0)
        return spline(s_grid)

    def with_meta(self, **extra):
        return replace(self, meta={**self.meta, **extra})

    def events_json(self):
        return [ev.as_dict() for ev in self.events]

    def to_csv(self, path, meta=None):
        columns = ['s', *COORD_NAMES[self.chart]]
        rows = np.column_stack([self.s, self.states])
        header = {'chart': self.chart.value, 'stop': self.stop.value, **(meta or {})}
        if self.params is not None:
            header['params'] = self.params.as_dict()
        return io.write_table(path, columns, rows, header)

    @classmethod
    def from_csv(cls, path, params=None, events=()):
        table = io.read_table(path)
        chart = Chart(table.meta.get('chart', Chart.XYZ))
        stop = StopReason(table.meta.get('stop', StopReason.S_MAX))
        return cls(chart, table.data[:, 0].copy(), table.data[:, 1:].copy(), tuple(events), stop, params,
                   {key: value for key, value in table.meta.items() if key not in ('chart', 'stop')})


class GluedSolution:
    """
    Dense output made of consecutive pieces.

    Args:
        pieces (list[tuple[float, callable]]): ``(s_end, fn)`` in increasing
            ``s_end``; ``fn`` maps an array of s to a (d, n) array and serves
            s up to ``s_end``. The last piece also serves anything beyond.
    """

    def __init__(self, pieces):
        self.pieces = list(pieces)
        self.ends = np.array([end for end, _ in self.pieces], dtype=float)

    def __call__(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        which = np.minimum(np.searchsorted(self.ends, s, side='left'), len(self.pieces) - 1)
        out = None
        for j, (_, fn) in enumerate(self.pieces):
            mask = which == j
            if not mask.any():
                continue
            values = np.atleast_2d(fn(s[mask]))
            if out is None:
                out = np.empty((values.shape[0], s.size))
            out[:, mask] = values
        return out


def _eta_solution(sol, t, eta):
    """Stage one dense output reparametrized by eta; Newton on eta(t) with d eta/dt = x."""
    def fn(query):
        guess = np.interp(query, eta, t)
        for _ in range(ETA_NEWTON):
            u = sol(guess)
            guess = np.clip(guess - (u[3] - query) / u[0], t[0], t[-1])
        return states_to_xyz(Chart.XPROJ, sol(guess)[:3].T).T
    return fn


def _collect_events(sol, kinds, observables, rhs, project=None):
    project = project or (lambda u: u)
    found = []
    for kind, g, times, states in zip(kinds, observables, sol.t_events, sol.y_events):
        for s, u in zip(times, states):
            u = project(u)
            found.append(Event(kind, float(s), tuple(float(v) for v in u), float(_rate(g, rhs, s, u))))
    found.sort(key=lambda ev: ev.s)
    return tuple(found)


def integrate(seed, params, controls=None, surface=None):
    """
    Integrate the orbit through ``seed`` forward in its chart's variable.

    Args:
        seed (Seed | ChartPoint): Starting point; a Seed contributes its point.
        params (Params): Problem parameters.
        controls (Controls | None): Defaults to ``Controls.from_settings()``.
        surface (SurfaceS | None): Needed for SurfaceSCross events.

    Returns:
        Trajectory

    Raises:
        IntegrationError: Solver failure, non-finite right-hand side or a
            sign-constraint violation beyond SIGN_TOL.
    """
    controls = controls or Controls.from_settings()
    point = getattr(seed, 'point', seed)
    _check_start(point)
    rhs, jac = system(point.chart, params)
    kinds, events, observables = _event_functions(point.chart, params, controls, surface)
    s0 = point.s
    sol = _solve(rhs, jac, (s0, s0 + controls.s_max), point.array, controls, events)
    states = _clamp(point.chart, sol.y.T)
    meta = {'controls': controls.as_dict()}
    if hasattr(seed, 'as_dict') and seed is not point:
        meta['seed'] = seed.as_dict()
    traj = Trajectory(
        point.chart, sol.t.copy(), states, _collect_events(sol, kinds, observables, rhs),
        _stop_reason(sol, kinds), params, meta, sol.sol,
    )
    logger.debug('integrated %s orbit: %d steps, stop=%s, %d events',
                 point.chart.value, len(traj), traj.stop.value, len(traj.events))
    return traj


def integrate_q5(seed, params, controls=None, x_switch=Q5_SWITCH_X, surface=None):
    """
    Orbit out of Q5 expressed in the finite chart with s = eta.

    Stage one integrates the X-projection augmented with eta (d eta / d eta1 = x)
    until x reaches ``x_switch``; stage two continues in the finite chart.
    The seed is placed at eta = 0, so the dead-core edge (eta of the limit
    point Q5) is ``-x_seed / ((m-1)k)`` and is stored as ``meta['deadcore_eta']``.
    The dense output of both stages is kept, stage one evaluated at eta
    through a Newton inversion of eta(eta1).

    Raises:
        IntegrationError: Seed with x <= 0 or a failure of either stage.
    """
    controls = controls or Controls.from_settings()
    point = getattr(seed, 'point', seed)
    if point.chart != Chart.XPROJ:
        raise ChartError('Q5 orbits start in the X-projection')
    x0 = point.coords[0]
    if not x0 > 0:
        raise IntegrationError('Q5 seed must have x > 0', point.coords)
    m, k = params.m, params.k
    base_rhs, base_jac = system(Chart.XPROJ, params)

    def rhs(s, u):
        return np.append(base_rhs(s, u[:3]), u[0])

    def jac(u):
        out = np.zeros((4, 4))
        out[:3, :3] = base_jac(u[:3])
        out[3, 0] = 1.0
        return out

    def head(u):
        return np.asarray(u)[:3]

    kinds, events, observables = _event_functions(Chart.XPROJ, params, controls, None, project=head)

    def switch(s, u):
        return u[0] - x_switch
    switch.terminal = True
    switch.direction = 1.0

    u0 = np.append(point.array, 0.0)
    sol = _solve(rhs, jac, (0.0, controls.s_max), u0, controls, events + [switch])
    stage = _clamp(Chart.XPROJ, sol.y[:3].T)
    eta = sol.y[3].copy()
    xyz_rhs, _ = system(Chart.XYZ, params)
    deadcore_eta = -x0 / ((m - 1) * k)

    def to_xyz_event(kind, u):
        state = states_to_xyz(Chart.XPROJ, u[:3])[0]
        g = observable(kind, Chart.XYZ, params, None, controls) if kind != EventKind.NEAR_POINT else None
        rate = _rate(g, xyz_rhs, 0.0, state) if g is not None else 0.0
        return Event(kind, float(u[3]), tuple(float(v) for v in state), float(rate))

    found = []
    for kind, states in zip(kinds, sol.y_events[:len(kinds)]):
        found.extend(to_xyz_event(kind, u) for u in states)

    switched = sol.status == 1 and len(sol.t_events[-1]) > 0
    stage_sol = _eta_solution(sol.sol, sol.t, eta)
    xyz_states = states_to_xyz(Chart.XPROJ, stage)
    meta = {'controls': controls.as_dict(), 'deadcore_eta': deadcore_eta}
    if hasattr(seed, 'as_dict') and seed is not point:
        meta['seed'] = seed.as_dict()
    if not switched:
        stop = _stop_reason(sol, kinds)
        found.sort(key=lambda ev: ev.s)
        logger.debug('Q5 orbit ended before leaving the X-projection (stop=%s)', stop.value)
        dense = GluedSolution([(float(eta[-1]), stage_sol)])
        return Trajectory(Chart.XYZ, eta, xyz_states, tuple(found), stop, params, meta, dense)

    start = ChartPoint(Chart.XYZ, xyz_states[-1], float(eta[-1]))
    tail = integrate(start, params, controls, surface)
    found.extend(tail.events)
    found.sort(key=lambda ev: ev.s)
    s = np.concatenate([eta, tail.s[1:]])
    states = np.vstack([xyz_states, tail.states[1:]])
    meta['switch_eta'] = float(eta[-1])
    logger.debug('Q5 orbit switched charts at eta=%.6g, dead-core edge at eta=%.6g', eta[-1], deadcore_eta)
    glued = GluedSolution([(float(eta[-1]), stage_sol), (float(tail.s[-1]), tail.sol)])
    return Trajectory(Chart.XYZ, s, states, tuple(found), tail.stop, params, meta, glued)


def refine_event(traj, kind, surface=None, xtol=1e-13):
    """
    First event of ``kind`` with s re-localized on the dense output.

    Raises:
        EventMissing: If the trajectory recorded no such event.
    """
    kind = EventKind(kind)
    found = traj.events_of(kind)
    if not found:
        raise EventMissing(f'no {kind.value} event on the trajectory')
    event = found[0]
    g = observable(kind, traj.chart, traj.params, surface)
    if g is None or len(traj) < 2:
        return event

    def value(s):
        return g(traj.resample([s])[0])

    i = int(np.searchsorted(traj.s, event.s))
    lo = traj.s[max(i - 1, 0)]
    hi = traj.s[min(i, len(traj) - 1)]
    g_lo, g_hi = value(lo), value(hi)
    if g_lo == 0:
        s_star = lo
    elif g_hi == 0:
        s_star = hi
    elif np.sign(g_lo) == np.sign(g_hi):
        return event
    else:
        s_star = brentq(value, lo, hi, xtol=xtol)
    coords = traj.resample([s_star])[0]
    return Event(kind, float(s_star), tuple(float(v) for v in coords), event.rate)
