"""Profiles f(xi) rebuilt from phase-space orbits.

Defines:
- Anchor: how the xi gauge of a reconstruction is fixed.
- Profile: a sampled profile with its provenance.
- reconstruct(): inversion of the phase-space change of variables.
- q1_tail_end(): where an orbit stops following the approach to Q1.
- q1_slow_orbit(), continue_q1_tail(): orbits of the slow approach to Q1
  and their use to extend a connecting orbit.
- connection_profile(): profile of the orbit at a located connection.
- ReconstructionError.

Notes:
    - X = (alpha/m) xi^2 f^{1-m}, Y = xi f'/f, Z = xi^{sigma+2} f^{p-m}/m
      and s = ln(xi) up to a translation; the anchor picks the translation.
    - Samples with X = inf (the dead-core edge seen from the X-projection)
      give f = 0.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings
from django.db import models
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from analyze.terminal import q1_approach
from integrate import io
from integrate.solver import GluedSolution, StopReason, Trajectory, states_to_xyz
from manifolds.seeds import amplitude_of_C
from params.exponents import Params, derive
from phasespace.charts import Chart
from phasespace.fields import system
from phasespace.points import q1_scale

logger = logging.getLogger(__name__)

CROSS_CHECK_TOL = 1e-4
CORE_POINTS = 9
TAIL_X_FAR = 1e9
MATCH_FACTOR = 4.0
TAIL_SAMPLES = 400
TAIL_GAP_TOL = 1e-6
BRACKET_EXPANSIONS = 6


class ReconstructionError(ValueError):
    """The orbit cannot be mapped back to a profile."""


class Anchor(models.TextChoices):
    CONSISTENCY = 'consistency', 'xi fixed jointly by X and Z'
    AMPLITUDE = 'amplitude', 'f at the first sample equals the seed amplitude'
    XI_REF = 'xi_ref', 'xi at the first sample given explicitly'
    DEADCORE = 'deadcore', 'dead-core edge placed at a given xi0'


@dataclass(frozen=True, eq=False)
class Profile:
    """
    Sampled self-similar profile.

    Attributes:
        xi (np.ndarray): Strictly increasing positive grid.
        f (np.ndarray): Profile values, f >= 0.
        fprime (np.ndarray): Derivative values.
        params (Params): Problem parameters.
        deadcore_edge (float | None): xi0 of a dead core.
        amplitude (float | None): f(0) when known.
        meta (dict): Provenance (anchor, seed, gauge defect, ...).
    """
    xi: np.ndarray
    f: np.ndarray
    fprime: np.ndarray
    params: Params
    deadcore_edge: float = None
    amplitude: float = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.xi)

    @property
    def positive(self):
        return self.f > 0

    def phase_coordinates(self):
        """(X, Y, Z) recomputed from (xi, f, f') where f > 0; NaN elsewhere."""
        params = self.params
        m, p, sigma = params.m, params.p, params.sigma
        alpha = derive(params).alpha
        out = np.full((len(self.xi), 3), np.nan)
        pos = self.positive
        xi, f, fp = self.xi[pos], self.f[pos], self.fprime[pos]
        out[pos, 0] = alpha / m * xi ** 2 * f ** (1 - m)
        out[pos, 1] = xi * fp / f
        out[pos, 2] = xi ** (sigma + 2) * f ** (p - m) / m
        return out

    def to_csv(self, path, meta=None):
        header = {
            'params': self.params.as_dict(),
            'deadcore_edge': self.deadcore_edge,
            'amplitude': self.amplitude,
            **{k: v for k, v in self.meta.items() if k != 'seed'},
            **(meta or {}),
        }
        return io.write_table(path, ['xi', 'f', 'fprime'], np.column_stack([self.xi, self.f, self.fprime]), header)

    @classmethod
    def from_csv(cls, path):
        table = io.read_table(path)
        meta = dict(table.meta)
        params = Params(**meta.pop('params'))
        return cls(
            table.column('xi').copy(), table.column('f').copy(), table.column('fprime').copy(), params,
            meta.pop('deadcore_edge', None), meta.pop('amplitude', None), meta,
        )


def _window(traj, s_range):
    s = traj.s
    lo, hi = s_range if s_range is not None else (None, None)
    keep = np.ones(len(s), dtype=bool)
    if lo is not None:
        keep &= s >= lo
    if hi is not None:
        keep &= s <= hi
    if keep.sum() < 2:
        raise ReconstructionError('fewer than two samples in the reconstruction window.')
    return keep


def _gauge_from_consistency(s, X, Z, params, alpha):
    """Median of ln(xi) - s over samples where X and Z are positive and finite."""
    m, p, L = params.m, params.p, params.L
    ok = np.isfinite(X) & np.isfinite(Z) & (X > 0) & (Z > 0)
    if not ok.any():
        return None, math.nan
    ln_xi = ((m - 1) * np.log(m * Z[ok]) + (p - m) * np.log(m * X[ok] / alpha)) / L
    shifts = ln_xi - s[ok]
    shift = float(np.median(shifts))
    return shift, float(np.max(np.abs(shifts - shift)))


def _seed_C(traj):
    seed = traj.meta.get('seed') or {}
    if seed.get('origin') != 'P0' or seed.get('parameter') in (None, 'inf'):
        return None
    return float(seed['parameter'])


def _default_anchor(traj, Z):
    if np.any(np.isfinite(Z) & (Z > 0)):
        return Anchor.CONSISTENCY
    if 'deadcore_eta' in traj.meta:
        return Anchor.DEADCORE
    return Anchor.XI_REF


def reconstruct(traj, params, anchor=None, xi_ref=None, amplitude=None, points=None, s_range=None):
    """
    Profile of the orbit ``traj``.

    Args:
        traj (Trajectory): Orbit in any chart with a finite image.
        params (Params): Problem parameters.
        anchor (Anchor | None): Gauge choice; CONSISTENCY when the orbit
            has Z > 0 samples, otherwise DEADCORE for Q5 orbits and XI_REF.
        xi_ref (float | None): xi at the first sample (XI_REF) or the
            dead-core edge xi0 (DEADCORE); 1 by default.
        amplitude (float | None): f at the first sample for AMPLITUDE;
            ``amplitude_of_C`` of the seed by default.
        points (int | None): Resample on this many points, uniform in s,
            so that the xi grid is geometric; raw samples otherwise.
        s_range (tuple | None): (s_min, s_max) window, either end None.

    Returns:
        Profile

    Raises:
        ReconstructionError: X vanishing inside the window, a missing gauge
            or a cross-check mismatch above CROSS_CHECK_TOL.
    """
    keep = _window(traj, s_range)
    s = traj.s[keep]
    if points is not None:
        if points < 5:
            raise ReconstructionError('at least five resampling points are needed.')
        s = np.linspace(s[0], s[-1], int(points))
        states = states_to_xyz(traj.chart, traj.resample(s))
    else:
        states = traj.xyz()[keep]
    X, Y, Z = states[:, 0], states[:, 1], states[:, 2]
    if np.any(~np.isnan(X) & (X <= 0)):
        raise ReconstructionError('X vanishes inside the reconstruction window.')
    if np.any(np.isnan(states)):
        raise ReconstructionError('orbit has no finite image inside the window.')

    m = params.m
    alpha = derive(params).alpha
    anchor = Anchor(anchor) if anchor is not None else _default_anchor(traj, Z)
    gauge_defect = math.nan
    deadcore = None

    if anchor == Anchor.CONSISTENCY:
        shift, gauge_defect = _gauge_from_consistency(s, X, Z, params, alpha)
        if shift is None:
            raise ReconstructionError('consistency anchor needs samples with Z > 0.')
    elif anchor == Anchor.AMPLITUDE:
        if amplitude is None:
            C = _seed_C(traj)
            if C is None:
                raise ReconstructionError('amplitude anchor needs a P0 seed or an explicit amplitude.')
            amplitude = amplitude_of_C(C, params)
        xi0 = math.sqrt(m * X[0] * amplitude ** (m - 1) / alpha)
        shift = math.log(xi0) - s[0]
    elif anchor == Anchor.XI_REF:
        shift = math.log(xi_ref or 1.0) - s[0]
    else:
        if 'deadcore_eta' not in traj.meta:
            raise ReconstructionError('dead-core anchor needs a Q5 orbit.')
        shift = math.log(xi_ref or 1.0) - traj.meta['deadcore_eta']

    xi = np.exp(s + shift)
    with np.errstate(divide='ignore', over='ignore'):
        f = np.where(np.isinf(X), 0.0, (alpha * xi ** 2 / (m * X)) ** (1 / (m - 1)))
    fprime = np.where(f > 0, Y * f / xi, 0.0)
    if amplitude is None and _seed_C(traj) is not None and s_range is None:
        amplitude = float(f[0])

    if 'deadcore_eta' in traj.meta:
        deadcore = float(np.exp(traj.meta['deadcore_eta'] + shift))
        if xi[0] > deadcore:
            core = np.linspace(deadcore / 2, deadcore, CORE_POINTS)
            xi = np.concatenate([core, xi])
            f = np.concatenate([np.zeros(CORE_POINTS), f])
            fprime = np.concatenate([np.zeros(CORE_POINTS), fprime])

    meta = {
        'anchor': anchor.value,
        'gauge_defect': gauge_defect,
        'seed': traj.meta.get('seed'),
        'resampled': points is not None,
    }
    profile = Profile(xi, f, fprime, params, deadcore, amplitude, meta)
    mismatch = _cross_check(profile, X, Y, Z, check_z=anchor == Anchor.CONSISTENCY)
    meta['cross_check'] = mismatch
    if mismatch > CROSS_CHECK_TOL:
        raise ReconstructionError(f'reconstructed profile does not reproduce the orbit (mismatch {mismatch:.3g}).')
    logger.debug('reconstructed %d samples (anchor=%s, mismatch=%.3g)', len(profile), anchor.value, mismatch)
    return profile


def _cross_check(profile, X, Y, Z, check_z):
    coords = profile.phase_coordinates()[-len(X):]
    finite = np.isfinite(X) & profile.positive[-len(X):]
    if not finite.any():
        return 0.0
    errors = [
        np.abs(coords[finite, 0] - X[finite]) / np.abs(X[finite]),
        np.abs(coords[finite, 1] - Y[finite]) / (1 + np.abs(Y[finite])),
    ]
    if check_z:
        zpos = finite & (Z > 0)
        errors.append(np.abs(coords[zpos, 2] - Z[zpos]) / Z[zpos])
    return float(max(np.max(e) if e.size else 0.0 for e in errors))


def q1_tail_end(traj, params):
    """
    s at which ``traj`` stops following its approach to Q1: the turning
    sample of ``q1_approach``.

    Returns:
        float | None: None if the orbit never enters the approach.
    """
    approach = q1_approach(traj, params)
    return None if approach is None else approach.s_end


def _match_index(X, approach, match_factor):
    target = X[approach.end] / match_factor
    span = X[approach.start:approach.end + 1]
    return approach.start + min(int(np.searchsorted(span, target)), len(span) - 1)


def q1_slow_orbit(params, x_far, x_match, z_far, rel_tol=None, abs_tol=None):
    """
    Orbit of the slow approach to Q1 through (x_far, Y, z_far), integrated
    backward in Radau until X = x_match.

    Returns:
        OdeResult: ``solve_ivp`` result with dense output; the state at
        X = x_match is ``y_events[0][0]`` at ``t_events[0][0]`` < 0.
    """
    conf = settings.BLOWUP
    rel_tol = conf['REL_TOL'] if rel_tol is None else rel_tol
    abs_tol = conf['ABS_TOL'] if abs_tol is None else abs_tol
    m, N, k = params.m, params.N, params.k
    level = params.no_return_level
    y_far = level + (level * (m * level + N - 2) + z_far) / (k * x_far)
    rhs, jac = system(Chart.XYZ, params)

    def reached(s, u):
        return u[0] - x_match
    reached.terminal = True
    reached.direction = -1.0

    rate = 2 - (m - 1) * level
    span = 4.0 * math.log(x_far / x_match) / rate + 1.0
    sol = solve_ivp(rhs, (0.0, -span), [x_far, y_far, z_far], method='Radau', jac=lambda s, u: jac(u),
                    rtol=rel_tol, atol=abs_tol, events=[reached], dense_output=True)
    if sol.status != 1 or not len(sol.t_events[0]):
        raise ReconstructionError(f'backward tail integration did not reach X={x_match:.6g}: {sol.message}')
    return sol


def continue_q1_tail(traj, params, approach=None, x_far=TAIL_X_FAR, match_factor=MATCH_FACTOR):
    """
    ``traj`` up to a matching sample on its approach to Q1, continued by the
    orbit of the slow manifold through that sample out to X = ``x_far``.

    The matching sample lies where X is ``match_factor`` times below its
    value at the turning sample. The continuation starts at X = x_far on the
    leading order slow graph Y = level + (m level^2 + (N-2) level + Z)/(kX)
    and is integrated backward; its Z at x_far is tuned with brentq until Z
    matches at the matching sample. ``meta['q1_tail']`` records the match
    and the Y gap there relative to the level.

    Raises:
        ReconstructionError: No approach to Q1 or a failed continuation.
    """
    approach = approach or q1_approach(traj, params)
    if approach is None:
        raise ReconstructionError('the orbit never approaches Q1.')
    states = traj.xyz()
    X, Y, Z = states[:, 0], states[:, 1], states[:, 2]
    i = _match_index(X, approach, match_factor)
    x_m, y_m, z_m, s_m = float(X[i]), float(Y[i]), float(Z[i]), float(traj.s[i])
    if not (z_m > 0 and x_far > x_m):
        raise ReconstructionError(f'cannot continue the tail from X={x_m:.6g}, Z={z_m:.6g}.')
    if x_m < q1_scale(params):
        logger.warning('tail matched at X=%.6g below the slow scale %.6g', x_m, q1_scale(params))
    controls = traj.meta.get('controls') or {}
    rel_tol = controls.get('rel_tol', settings.BLOWUP['REL_TOL'])
    abs_tol = controls.get('abs_tol', settings.BLOWUP['ABS_TOL'])

    def mismatch(ln_z):
        sol = q1_slow_orbit(params, x_far, x_m, math.exp(ln_z), rel_tol, abs_tol)
        return math.log(sol.y_events[0][0][2]) - math.log(z_m)

    lo, hi = math.log(z_m) - 1.0, math.log(z_m) + 1.0
    for _ in range(BRACKET_EXPANSIONS):
        if mismatch(lo) < 0 < mismatch(hi):
            break
        lo, hi = lo - 2.0, hi + 2.0
    else:
        raise ReconstructionError('no tail continuation matches Z at the matching sample.')
    z_far = math.exp(brentq(mismatch, lo, hi, xtol=1e-14))
    sol = q1_slow_orbit(params, x_far, x_m, z_far, rel_tol, abs_tol)
    eta_m = float(sol.t_events[0][0])
    y_tail = float(sol.y_events[0][0][1])
    gap = abs(y_tail - y_m) / abs(params.no_return_level)
    if gap > TAIL_GAP_TOL:
        logger.warning('tail continuation meets the orbit with a Y gap of %.3g', gap)

    grid = np.linspace(eta_m, 0.0, TAIL_SAMPLES)[1:]
    tail_s = s_m + grid - eta_m
    tail_states = sol.sol(grid).T

    def forward(s):
        return states_to_xyz(traj.chart, traj.resample(s)).T

    def backward(s):
        return sol.sol(np.asarray(s) - s_m + eta_m)

    meta = {**traj.meta, 'q1_tail': {'match_s': s_m, 'match_X': x_m, 'x_far': x_far, 'tail_gap': gap,
                                     'departure': approach.departure}}
    dense = GluedSolution([(s_m, forward), (float(tail_s[-1]), backward)])
    logger.info('Q1 tail continued from X=%.6g to X=%.3g (gap %.3g)', x_m, x_far, gap)
    return Trajectory(
        Chart.XYZ, np.concatenate([traj.s[:i + 1], tail_s]), np.vstack([states[:i + 1], tail_states]),
        tuple(ev for ev in traj.events if ev.s <= s_m), StopReason.RADIUS, params, meta, dense,
    )


def connection_profile(result, points=None, continue_tail=True):
    """
    Profile of the orbit at ``result.parameter_star``.

    With ``continue_tail`` the orbit is continued along the slow manifold of
    Q1 (``continue_q1_tail``); otherwise it is cut where it leaves Q1.

    Raises:
        ReconstructionError: The result carries no trajectory or the orbit
            never approaches Q1.
    """
    traj = result.midpoint.trajectory
    if traj is None:
        raise ReconstructionError('connection result has no trajectory.')
    params = result.params
    approach = q1_approach(traj, params)
    if approach is None:
        raise ReconstructionError('the connecting orbit never approaches Q1.')
    if continue_tail:
        return reconstruct(continue_q1_tail(traj, params, approach), params, points=points)
    return reconstruct(traj, params, points=points, s_range=(None, approach.s_end))
