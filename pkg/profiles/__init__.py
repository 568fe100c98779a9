from .asymptotics import AsymptoticFit, Law, WindowTooShort, contact_derivative, expected_law, fit_asymptotics  # noqa: F401
from .nonexistence import Criterion, NonexistenceVerdict, nonexistence_predicate  # noqa: F401
from .pohozaev import PohozaevReport, pohozaev  # noqa: F401
from .reconstruct import (  # noqa: F401
    Anchor, Profile, ReconstructionError, connection_profile, continue_q1_tail, q1_slow_orbit, q1_tail_end,
    reconstruct,
)
from .residuals import GridTooCoarse, iso_curve_defect, ode_residual, stationary_residual  # noqa: F401
