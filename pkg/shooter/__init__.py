from .outcomes import ConnectionResult, Family, ShotOutcome, minima_before_no_return, q1_signature  # noqa: F401
from .search import (  # noqa: F401
    NoBracket,
    TangencyFlag,
    default_grid,
    find_connection,
    find_deadcore,
    find_negative_sigma,
    find_p3_connection,
    shoot,
    sweep,
)
