from .solver import (  # noqa: F401
    DEFAULT_EVENTS,
    Controls,
    Event,
    EventKind,
    EventMissing,
    IntegrationError,
    StopReason,
    Trajectory,
    integrate,
    integrate_q5,
    observable,
    refine_event,
    states_to_xyz,
)
