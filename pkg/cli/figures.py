"""Plot-data bundles of the four reference figures.

Defines:
- FigureSpec / FIGURES: parameters and series of each bundle.
- shot_profile(): profile of a shot, cut where its behaviour is resolved.
- build_figure(): integrate every series, emit its files and the manifest.

Notes:
    - A bundle is data only: trajectory CSVs, profile CSVs and a JSON
      manifest naming series, files and axes. Any plotting tool reproduces
      the figures from it.
    - A failing series is listed under ``failures`` and the bundle is still
      emitted.
"""

import logging
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from integrate.solver import EventKind, integrate
from manifolds.seeds import seed_q1_prime, seed_q5_prime
from params.exponents import Params
from profiles.reconstruct import ReconstructionError, q1_tail_end, reconstruct
from shooter.outcomes import Family
from shooter.search import FAILURES, shoot

from . import emit

logger = logging.getLogger(__name__)

Q1_PRIME_HEIGHTS = (0.002, 0.004, 0.006, 0.008)
EPS_Q5_PRIME = 1e-4


@dataclass(frozen=True)
class FigureSpec:
    """
    Attributes:
        figure_id (str): fig1 ... fig4.
        title (str): Short description written to the manifest.
        params (Params): Parameters of every series.
        points (int): Default number of C values (P0 figures).
        plane (str): 'XYZ' for P0 figures, 'w' for the WChart portrait.
    """
    figure_id: str
    title: str
    params: Params
    points: int = 9
    plane: str = 'XYZ'


FIGURES = {
    'fig1': FigureSpec('fig1', 'Orbits l_C with none or one oscillation', Params(2.0, 5, 2.1, 0.5), points=9),
    'fig2': FigureSpec('fig2', 'Orbits l_C with different numbers of oscillations', Params(2.0, 5, 2.1, 0.1),
                       points=25),
    'fig3': FigureSpec('fig3', 'Orbits l_C crossing the no-return plane', Params(2.0, 5, 2.1, 1.0), points=9),
    'fig4': FigureSpec('fig4', "Orbits of the w-plane leaving Q5' and Q1'", Params(2.0, 5, 2.1, 0.5), plane='w'),
}


def shot_profile(traj, params):
    """
    Profile of a shot: cut where it leaves Q1 when it approaches Q1,
    whole otherwise.

    Returns:
        Profile | None: None when the orbit cannot be turned into a profile.
    """
    end = q1_tail_end(traj, params)
    try:
        return reconstruct(traj, params, s_range=None if end is None else (None, end))
    except ReconstructionError as exc:
        logger.warning('no profile for the orbit seeded at %s: %s', traj.meta.get('seed'), exc)
        return None


def _c_grid(points):
    conf = settings.BLOWUP
    return [float(c) for c in np.geomspace(conf['SWEEP_C_MIN'], conf['SWEEP_C_MAX'], points)]


def _p0_series(config, figure, points):
    params = figure.params
    series, failures = [], []
    for i, C in enumerate(_c_grid(points)):
        name = f'l_C{i:02d}'
        try:
            outcome = shoot(params, Family.P0_C, C, config.controls, keep_trajectory=True)
        except FAILURES as exc:
            logger.warning('%s series %s (C=%.6g) failed: %s', figure.figure_id, name, C, exc)
            failures.append({'name': name, 'value': C, 'error': str(exc)})
            continue
        traj = outcome.trajectory
        trajectory_file = emit.emit_trajectory(config, f'{figure.figure_id}_{name}', traj, series=name)
        profile = shot_profile(traj, params)
        profile_file = None
        if profile is not None:
            profile_file = emit.emit_profile(config, f'{figure.figure_id}_{name}_profile', profile, series=name)
        crossed = traj.events_of(EventKind.NO_RETURN)
        series.append({
            'name': name,
            'family': Family.P0_C.value,
            'value': C,
            'trajectory': trajectory_file.name,
            'axes': ['X', 'Y', 'Z'],
            'profile': profile_file.name if profile_file else None,
            'profile_axes': ['xi', 'f'],
            'n_max': outcome.count.n_max,
            'n_min': outcome.count.n_min,
            'minima': outcome.minima,
            'fate': outcome.terminal.fate.value,
            'no_return_y': crossed[0].coords[1] if crossed else None,
        })
    return series, failures


def _w_series(config, figure):
    params = figure.params
    seeds = [('q5prime', lambda: seed_q5_prime(EPS_Q5_PRIME, params))]
    seeds += [(f'q1prime_{i}', lambda y0=y0: seed_q1_prime(y0, params))
              for i, y0 in enumerate(Q1_PRIME_HEIGHTS)]
    series, failures = [], []
    for name, make_seed in seeds:
        try:
            seed = make_seed()
            traj = integrate(seed, params, config.controls)
        except FAILURES as exc:
            logger.warning('%s series %s failed: %s', figure.figure_id, name, exc)
            failures.append({'name': name, 'error': str(exc)})
            continue
        y = traj.column('y')
        trajectory_file = emit.emit_trajectory(config, f'{figure.figure_id}_{name}', traj, series=name)
        series.append({
            'name': name,
            'origin': seed.origin.value,
            'value': seed.parameter,
            'trajectory': trajectory_file.name,
            'axes': ['y', 'w'],
            'profile': None,
            'y_maxima': len(traj.events_of(EventKind.Y_ZERO_DOWN)),
            'monotone_y': bool(np.all(np.diff(y) >= 0) or np.all(np.diff(y) <= 0)),
        })
    return series, failures


def build_figure(config, figure_id, points=None):
    """
    Integrate the series of ``figure_id`` with ``config.controls`` and emit
    the bundle into ``config.output_dir``.

    Returns:
        tuple[Path, dict]: Manifest file and manifest.
    """
    figure = FIGURES[figure_id]
    if figure.plane == 'w':
        series, failures = _w_series(config, figure)
    else:
        series, failures = _p0_series(config, figure, points or figure.points)
    manifest = {
        'figure': figure.figure_id,
        'title': figure.title,
        'params': figure.params.as_dict(),
        'plane': figure.plane,
        'series': series,
        'failures': failures,
    }
    if figure.plane != 'w':
        manifest['no_return_level'] = figure.params.no_return_level
    path = emit.emit_document(config, f'{figure.figure_id}_manifest', manifest)
    logger.info('%s: %d series, %d failures', figure_id, len(series), len(failures))
    return path, manifest
