from .r0 import R0NotFound, r0_side, trace_r0  # noqa: F401
from .seeds import (  # noqa: F401
    ManifoldExpansion,
    Seed,
    SeedOrder,
    C_of_amplitude,
    amplitude_of_C,
    q1_center_y,
    q5_directions,
    seed_p0,
    seed_p3,
    seed_q1_prime,
    seed_q5,
    seed_q5_prime,
    unstable_expansion,
)
