"""Diagnostic record of one orbit: fate, oscillation counts and crossings."""

from .oscillations import compare_counts, count_oscillations
from .terminal import classify_terminal


def diagnostics(traj, params, surface=None):
    """
    JSON-ready summary of ``traj``.

    Returns:
        dict: ``fate``, ``n_max``, ``n_min``, ``crossings`` (event records),
        ``evidence``, ``anomaly``, ``flags`` and, when ``surface`` is given,
        the comparison of the two counters under ``counts``.
    """
    info = classify_terminal(traj, params)
    count = count_oscillations(traj)
    report = {
        'fate': info.fate.value,
        'n_max': count.n_max,
        'n_min': count.n_min,
        'crossings': traj.events_json(),
        'evidence': info.evidence,
        'anomaly': info.anomaly,
        'flags': {'tangencies': list(count.tangencies), 'degenerate': count.degenerate},
    }
    if surface is not None:
        report['counts'] = compare_counts(traj, surface)
    return report
