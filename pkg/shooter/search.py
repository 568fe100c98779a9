"""Shooting along orbit families and bisection for connections.

Defines:
- shoot(): integrate and analyse one member of a family.
- sweep(): a grid of shots, run on a process pool.
- find_connection(), find_deadcore(), find_p3_connection(),
  find_negative_sigma(): bisection searches for connections to Q1.
- NoBracket, TangencyFlag: search failures.

Notes:
    - A search compares two behaviours: orbits with at least k+1 minima
      before the no-return crossing (or, for sigma < 0, orbits reaching
      Y > 0) against the rest. The boundary between them is the connection
      estimate.
    - Brackets are scanned from the side expected to lack the behaviour:
      large C, theta near pi/2, p near p_s.
    - Bisection is geometric in C and arithmetic in theta and p; it stops at
      a relative width of ``tol``.
    - Orbits that fit neither behaviour are skipped by scans; a scan without
      a bracket is repeated on finer grids between neighbours whose
      outcomes differ. A bisection midpoint of that kind ends the search.
    - The orbit at the estimate must enter the approach to Q1; its minima
      are counted up to where it leaves that approach.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import replace

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError

from analyze.oscillations import count_oscillations
from analyze.terminal import Fate, classify_terminal, q1_approach
from integrate.solver import Controls, EventKind, IntegrationError, integrate, integrate_q5
from manifolds.seeds import seed_p0, seed_p3, seed_q5
from params.exponents import exponent_table
from phasespace.charts import ChartError

from .outcomes import ConnectionResult, Family, ShotOutcome, minima_before_no_return, q1_signature

logger = logging.getLogger(__name__)

MAX_BISECTIONS = 200
FAILURES = (IntegrationError, ChartError, ValidationError, FloatingPointError)


class NoBracket(LookupError):
    """
    The search indicator takes one value over the whole bracket or grid.

    Attributes:
        seen (dict): Indicator values observed, keyed by parameter.
    """

    def __init__(self, message, seen=None):
        super().__init__(message)
        self.seen = seen or {}


class TangencyFlag(RuntimeError):
    """A bisection midpoint crossed Y = 0 tangentially; the bracket is not trusted."""

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


def _run_params(params, family, value):
    if Family(family) == Family.P3_P:
        return params.with_p(float(value)).clean()
    return params.clean()


def shoot(params, family, value, controls=None, epsilon=None, surface=None, keep_trajectory=False):
    """
    Integrate and analyse the member ``value`` of ``family``.

    Args:
        params (Params): Problem parameters; for P3_p, p is replaced by ``value``.
        family (Family): P0_C, Q5_theta or P3_p.
        value (float): C, theta or p.
        controls (Controls | None): Integrator settings.
        epsilon (float | None): Seed distance; EPS_P0, EPS_Q5 or EPS_P3 by default.
        surface (SurfaceS | None): Also record and count crossings of S.
        keep_trajectory (bool): Keep the trajectory on the outcome.

    Returns:
        ShotOutcome

    Raises:
        ValidationError, IntegrationError, ChartError: Propagated.
    """
    family = Family(family)
    conf = settings.BLOWUP
    controls = controls or Controls.from_settings()
    if surface is not None:
        controls = controls.with_events(EventKind.SURFACE_S)
    run_params = _run_params(params, family, value)
    if family == Family.P0_C:
        seed = seed_p0(float(value), epsilon or conf['EPS_P0'], run_params)
        traj = integrate(seed, run_params, controls, surface)
    elif family == Family.Q5_THETA:
        seed = seed_q5(float(value), epsilon or conf['EPS_Q5'], run_params)
        traj = integrate_q5(seed, run_params, controls, surface=surface)
    else:
        seed = seed_p3(epsilon or conf['EPS_P3'], run_params)
        traj = integrate(seed, run_params, controls, surface)

    minima, tangent = minima_before_no_return(traj)
    return ShotOutcome(
        family=family,
        value=float(value),
        seed=seed.as_dict(),
        count=count_oscillations(traj, surface),
        terminal=classify_terminal(traj, run_params),
        minima=minima,
        tangent=tangent,
        y_max=float(np.max(traj.xyz()[:, 1])),
        trajectory=traj if keep_trajectory else None,
    )


def _safe_shot(params, family, value, controls, epsilon, surface):
    try:
        return shoot(params, family, value, controls, epsilon, surface)
    except FAILURES as exc:
        logger.warning('shot %s=%.15g failed: %s', Family(family).value, value, exc)
        return ShotOutcome(family=Family(family), value=float(value), error=str(exc))


def sweep(params, family, grid, controls=None, epsilon=None, surface=None, workers=None):
    """
    Shoot every value of ``grid``.

    Failures are recorded on their outcome and the sweep goes on. With more
    than one worker the shots run on a process pool; outcomes come back in
    grid order either way.

    Raises:
        ValidationError: If ``grid`` is empty or not sorted.
    """
    grid = [float(v) for v in grid]
    if not grid:
        raise ValidationError({'grid': 'the grid is empty.'})
    if grid != sorted(grid):
        raise ValidationError({'grid': 'the grid must be sorted.'})
    controls = controls or Controls.from_settings()
    workers = workers or settings.BLOWUP['THREADS']
    logger.info('sweep %s over %d values at %s (%d workers)', Family(family).value, len(grid), params, workers)

    if workers <= 1 or len(grid) == 1:
        outcomes = [_safe_shot(params, family, v, controls, epsilon, surface) for v in grid]
    else:
        outcomes = [None] * len(grid)
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futures = {
                ex.submit(_safe_shot, params, family, v, controls, epsilon, surface): i
                for i, v in enumerate(grid)
            }
            for fut in as_completed(futures):
                outcomes[futures[fut]] = fut.result()
    failed = sum(1 for o in outcomes if not o.ok)
    if failed:
        logger.warning('%d of %d shots failed', failed, len(grid))
    return outcomes


def default_grid(params, family, points=None):
    """
    Values scanned for a bracket, ordered from the side expected to lack
    the searched behaviour.
    """
    conf = settings.BLOWUP
    points = points or conf['BRACKET_POINTS']
    family = Family(family)
    if family == Family.P0_C:
        return list(np.geomspace(conf['BRACKET_C_MIN'], conf['BRACKET_C_MAX'], points)[::-1])
    if family == Family.Q5_THETA:
        return list(np.linspace(0.0, math.pi / 2, points + 2)[1:-1][::-1])
    upper = exponent_table(params).p_s
    if not math.isfinite(upper):
        upper = params.m + 10.0
    return list(np.linspace(params.m, upper, points + 2)[1:-1][::-1])


def _minima_side(k):
    def side(outcome):
        return 1 if outcome.minima >= k + 1 else -1
    return side


def _positive_y_side(outcome):
    """+1 once Y > 0, -1 for Q3, None (skipped) for any other fate."""
    if outcome.y_max > 0:
        return 1
    if outcome.terminal.fate == Fate.Q3:
        return -1
    return None


def _behaviour(outcome):
    count = outcome.count
    return (outcome.terminal.fate, outcome.minima, count.n_min if count else None, outcome.y_max > 0)


class _Search:
    """State of one bracket-and-bisect search."""

    def __init__(self, params, family, side, controls, epsilon, geometric):
        self.params = params
        self.family = Family(family)
        self.side = side
        self.controls = controls or Controls.from_settings()
        self.epsilon = epsilon
        self.geometric = geometric
        self.seen = {}
        self.outcomes = {}

    def evaluate(self, value):
        value = float(value)
        if value in self.outcomes:
            return self.seen[value], self.outcomes[value]
        outcome = shoot(self.params, self.family, value, self.controls, self.epsilon)
        value = outcome.value
        self.outcomes[value] = outcome
        self.seen[value] = self.side(outcome)
        return self.seen[value], outcome

    def from_hint(self, hint):
        a, b = (float(v) for v in hint)
        side_a, _ = self.evaluate(a)
        side_b, _ = self.evaluate(b)
        if side_a is None or side_b is None:
            raise NoBracket(f'unresolved orbit at an end of [{a:g}, {b:g}]', self.seen)
        if side_a == side_b:
            raise NoBracket(f'indicator is {side_a:+d} at both ends of [{a:g}, {b:g}]', self.seen)
        return (a, b) if side_a > 0 else (b, a)

    def scan(self, values):
        previous = None
        for value in values:
            try:
                current, outcome = self.evaluate(value)
            except FAILURES as exc:
                logger.warning('bracket scan skips %s=%.6g: %s', self.family.value, value, exc)
                continue
            if outcome.tangent:
                logger.warning('bracket scan skips %s=%.6g: tangential crossing', self.family.value, value)
                continue
            if current is None:
                logger.debug('bracket scan skips %s=%.6g: unresolved (%s)',
                             self.family.value, value, outcome.terminal.fate.value)
                continue
            if current > 0 and previous is not None:
                return value, previous
            if current < 0:
                previous = value
        raise NoBracket(f'no change of behaviour over {len(values)} values of {self.family.value}', self.seen)

    def subgrid(self, a, b, points):
        if self.geometric:
            return list(np.geomspace(a, b, points + 2))
        return list(np.linspace(a, b, points + 2))

    def changes(self, values):
        """Neighbouring scanned values whose outcomes differ in fate, minima or Y > 0."""
        shot = [float(v) for v in values if float(v) in self.outcomes]
        return [(a, b) for a, b in zip(shot, shot[1:])
                if _behaviour(self.outcomes[a]) != _behaviour(self.outcomes[b])]

    def locate(self, values, depth=None):
        """
        Scan ``values``; without a bracket, rescan between neighbours whose
        behaviour differs, up to RESCAN_DEPTH levels.
        """
        conf = settings.BLOWUP
        depth = conf['RESCAN_DEPTH'] if depth is None else depth
        try:
            return self.scan(values)
        except NoBracket:
            if depth <= 0:
                raise
        for a, b in self.changes(values):
            logger.info('rescanning %s between %.9g and %.9g', self.family.value, a, b)
            try:
                return self.locate(self.subgrid(a, b, conf['RESCAN_POINTS']), depth - 1)
            except NoBracket:
                continue
        raise NoBracket(f'no change of behaviour over {len(self.seen)} values of {self.family.value}', self.seen)

    def midpoint(self, a, b):
        if self.geometric:
            return math.sqrt(a * b)
        return 0.5 * (a + b)

    def bisect(self, good, bad, tol):
        for _ in range(MAX_BISECTIONS):
            if abs(good - bad) <= tol * max(abs(good), abs(bad)):
                break
            mid = self.midpoint(good, bad)
            if mid in (good, bad):
                break
            side, outcome = self.evaluate(mid)
            if outcome.tangent:
                raise TangencyFlag(f'tangential crossing at {self.family.value}={mid:.17g}', mid)
            if side is None:
                raise NoBracket(f'unresolved orbit ({outcome.terminal.fate.value}) at '
                                f'{self.family.value}={mid:.17g}', self.seen)
            if side > 0:
                good = mid
            else:
                bad = mid
        else:
            logger.warning('bisection stopped after %d steps with width %.3g', MAX_BISECTIONS, abs(good - bad))
        return good, bad

    def confirm(self, star):
        """
        Outcome at ``star`` with its trajectory, minima recounted up to the
        end of the approach to Q1.

        Raises:
            NoBracket: The orbit shows no approach to Q1.
        """
        mid = shoot(self.params, self.family, star, self.controls, self.epsilon, keep_trajectory=True)
        run_params = _run_params(self.params, self.family, star)
        if not q1_signature(mid.trajectory, run_params):
            raise NoBracket(f'orbit at {self.family.value}={star:.15g} shows no approach to Q1', self.seen)
        approach = q1_approach(mid.trajectory, run_params) if mid.trajectory is not None else None
        if approach is not None:
            minima, tangent = minima_before_no_return(mid.trajectory, s_limit=approach.s_end)
            mid = replace(mid, minima=minima, tangent=tangent)
        return mid, run_params

    def run(self, values, hint, tol, oscillations):
        good, bad = self.from_hint(hint) if hint is not None else self.locate(values)
        logger.info('bracket for %s: [%.15g, %.15g]', self.family.value, min(good, bad), max(good, bad))
        good, bad = self.bisect(good, bad, tol)
        if self.seen[good] == self.seen[bad]:
            raise NoBracket('bracket ends show the same behaviour after bisection', self.seen)
        star = self.midpoint(good, bad)
        mid, run_params = self.confirm(star)
        if mid.minima != oscillations:
            logger.warning('orbit at %s=%.15g has %d minima before leaving Q1, expected %d',
                           self.family.value, star, mid.minima, oscillations)
        logger.info('connection %s=%.15g located with %d minima', self.family.value, star, oscillations)
        return ConnectionResult(
            family=self.family,
            parameter_star=star,
            bracket=(good, bad),
            oscillations=oscillations,
            fate_at_bracket_ends=(self.outcomes[good].terminal, self.outcomes[bad].terminal),
            q1_signature=True,
            controls=self.controls.as_dict(),
            midpoint=mid,
            params=run_params,
        )


def _tol(tol):
    return settings.BLOWUP['BISECTION_TOL'] if tol is None else tol


def _check_k(k):
    if int(k) != k or k < 0:
        raise ValidationError({'k': 'k must be a non-negative integer.'})
    return int(k)


def find_connection(params, k=0, bracket=None, tol=None, controls=None, epsilon=None, family=Family.P0_C):
    """
    Locate an orbit of the P0 family connecting to Q1 with exactly k minima.

    Args:
        params (Params): Problem parameters, sigma >= 0.
        k (int): Number of minima of the connecting orbit.
        bracket (tuple | None): Hint (C_a, C_b); scanned from large C otherwise.
        tol (float | None): Relative bracket width, BISECTION_TOL by default.

    Raises:
        NoBracket: The indicator does not change on the hint or the grid.
        TangencyFlag: A bisection midpoint crossed Y = 0 tangentially.
    """
    k = _check_k(k)
    params.clean()
    if params.sigma < 0:
        raise ValidationError({'sigma': 'use find_negative_sigma for sigma < 0.'})
    geometric = Family(family) == Family.P0_C
    search = _Search(params, family, _minima_side(k), controls, epsilon, geometric)
    return search.run(default_grid(params, family), bracket, _tol(tol), k)


def find_deadcore(params, k=0, bracket=None, tol=None, controls=None, epsilon=None):
    """Dead-core connection: the same search over theta in the Q5 family."""
    k = _check_k(k)
    params.clean()
    search = _Search(params, Family.Q5_THETA, _minima_side(k), controls, epsilon, geometric=False)
    return search.run(default_grid(params, Family.Q5_THETA), bracket, _tol(tol), k)


def find_p3_connection(params, p_interval=None, k=0, tol=None, controls=None, epsilon=None):
    """
    Exponent p at which the unstable orbit of P3 connects to Q1 with k minima.

    ``params.p`` is ignored; ``p_interval`` defaults to the subcritical range.
    """
    k = _check_k(k)
    search = _Search(params, Family.P3_P, _minima_side(k), controls, epsilon, geometric=False)
    return search.run(default_grid(params, Family.P3_P), p_interval, _tol(tol), k)


def find_negative_sigma(params, bracket=None, tol=None, controls=None, epsilon=None):
    """
    Decreasing profile for -2 < sigma < 0: boundary in C between orbits that
    reach Y > 0 and orbits that cross the no-return plane.

    Raises:
        ValidationError: For sigma >= 0, sigma <= -N or p >= p_s.
    """
    params.clean()
    errors = {}
    if not params.sigma < 0:
        errors['sigma'] = 'sigma must be negative (use find_connection otherwise).'
    elif not params.sigma > -params.N:
        errors['sigma'] = 'sigma must exceed -N.'
    if not params.p < exponent_table(params).p_s:
        errors['p'] = 'p must be below p_s.'
    if errors:
        raise ValidationError(errors)
    search = _Search(params, Family.P0_C, _positive_y_side, controls, epsilon, geometric=True)
    return search.run(default_grid(params, Family.P0_C), bracket, _tol(tol), 0)
