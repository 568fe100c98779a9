from .exponents import (  # noqa: F401
    DerivedExponents,
    ExponentTable,
    Params,
    constant_profile_value,
    derive,
    exponent_table,
    pk_zero,
    pohozaev_thresholds,
    q_value,
)
