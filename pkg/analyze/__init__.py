from .barriers import AccuracyAlarm, BarrierFlows, barrier_flows, no_return_predicate  # noqa: F401
from .oscillations import CountMode, OscillationCount, compare_counts, count_oscillations  # noqa: F401
from .report import diagnostics  # noqa: F401
from .surface import Side, SurfaceMode, SurfaceS, side_of_S  # noqa: F401
from .terminal import Fate, TerminalInfo, classify_terminal, is_q3  # noqa: F401
