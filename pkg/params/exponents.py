"""Problem parameters and closed-form exponents.

Defines:
- Params: the quadruple (m, N, p, sigma) with its validation rules.
- DerivedExponents: the self-similar exponents alpha, beta and L.
- ExponentTable: critical exponents (Sobolev, critical, Fujita, ...).
- Helper functions deriving thresholds used by the search and the
  non-existence certificates.

Notes:
    - Infinite critical exponents (N in {1, 2}) are ``math.inf``, so that
      comparisons such as ``p < table.p_s`` stay total.
    - All values are plain double precision floats.
"""

import math
from dataclasses import asdict, dataclass, replace

from django.core.exceptions import ValidationError


@dataclass(frozen=True)
class Params:
    """
    Exponents of u_t = Δu^m + |x|^σ u^p and the space dimension.

    Attributes:
        m (float): Diffusion exponent, m > 1.
        N (int): Space dimension, N >= 1.
        p (float): Reaction exponent, p > m (p = m allowed in inspection mode).
        sigma (float): Weight exponent, sigma > -2.
    """
    m: float
    N: int
    p: float
    sigma: float

    @property
    def L(self):
        return self.sigma * (self.m - 1) + 2 * (self.p - 1)

    @property
    def k(self):
        """Ratio (p - m)/(sigma + 2) that appears in every chart."""
        return (self.p - self.m) / (self.sigma + 2)

    @property
    def no_return_level(self):
        """Y-level -(sigma+2)/(p-m) of the no-return plane."""
        return -(self.sigma + 2) / (self.p - self.m)

    def clean(self, inspection=False):
        """
        Validate the parameter invariants.

        Args:
            inspection (bool): Allow p = m (limit-case inspection only).

        Raises:
            ValidationError: With a per-field message dictionary.
        """
        errors = {}
        if not self.m > 1:
            errors['m'] = 'm must be greater than 1.'
        if int(self.N) != self.N or self.N < 1:
            errors['N'] = 'N must be an integer >= 1.'
        if not self.sigma > -2:
            errors['sigma'] = 'sigma must be greater than -2.'
        if inspection:
            if not self.p >= self.m:
                errors['p'] = 'p must satisfy p >= m in inspection mode.'
        elif not self.p > self.m:
            errors['p'] = 'p must be greater than m.'
        if not errors and not self.L > 0:
            errors['p'] = f'L = sigma(m-1) + 2(p-1) must be positive (got {self.L}).'
        if errors:
            raise ValidationError(errors)
        return self

    def with_p(self, p):
        return replace(self, p=p)

    def with_sigma(self, sigma):
        return replace(self, sigma=sigma)

    def as_dict(self):
        return asdict(self)

    def __str__(self):
        return f"m={self.m:g} N={self.N} p={self.p:g} sigma={self.sigma:g}"


@dataclass(frozen=True)
class DerivedExponents:
    """
    Exponents of the self-similar ansatz u = (T-t)^{-alpha} f(|x|(T-t)^{-beta}).

    Attributes:
        alpha (float): Time exponent (sigma+2)/L.
        beta (float): Space exponent (p-m)/L.
        L (float): Common denominator sigma(m-1) + 2(p-1).
    """
    alpha: float
    beta: float
    L: float


@dataclass(frozen=True)
class ExponentTable:
    """
    Critical exponents attached to (m, N, sigma).

    Attributes:
        p_s (float): Sobolev critical exponent (math.inf for N <= 2).
        p_c (float): Critical exponent where P1 and P2 collide (math.inf for N <= 2).
        p_F (float): Fujita exponent m + (sigma+2)/N.
        sigma_star (float): Weight above which no profile exists, (mN+2)/(m-1).
        sigma_lower (float): N(m-1)/(m+1).
        sigma_c (float): 2(N-1)(m-1)/(3m+1).
        K_mN (float): (mN-N+2m+2)/(4m).
    """
    p_s: float
    p_c: float
    p_F: float
    sigma_star: float
    sigma_lower: float
    sigma_c: float
    K_mN: float

    def as_dict(self):
        return asdict(self)


def derive(params):
    """
    Compute alpha, beta and L.

    Raises:
        ValidationError: If m <= 1, sigma <= -2 or L <= 0.
    """
    params.clean(inspection=True)
    L = params.L
    return DerivedExponents(alpha=(params.sigma + 2) / L, beta=(params.p - params.m) / L, L=L)


def sobolev_exponent(m, N, sigma):
    if N <= 2:
        return math.inf
    return m * (N + 2 * sigma + 2) / (N - 2)


def critical_exponent(m, N, sigma):
    if N <= 2:
        return math.inf
    return m * (N + sigma) / (N - 2)


def fujita_exponent(m, N, sigma):
    return m + (sigma + 2) / N


def exponent_table(params):
    """Return the ExponentTable of (m, N, sigma); p is not used."""
    m, N, sigma = params.m, params.N, params.sigma
    if not m > 1 or N < 1 or not sigma > -2:
        raise ValidationError('exponent_table requires m > 1, N >= 1 and sigma > -2.')
    return ExponentTable(
        p_s=sobolev_exponent(m, N, sigma),
        p_c=critical_exponent(m, N, sigma),
        p_F=fujita_exponent(m, N, sigma),
        sigma_star=(m * N + 2) / (m - 1),
        sigma_lower=N * (m - 1) / (m + 1),
        sigma_c=2 * (N - 1) * (m - 1) / (3 * m + 1),
        K_mN=(m * N - N + 2 * m + 2) / (4 * m),
    )


def pk_zero(m, k, N=None):
    """
    Multiplicity threshold p_k(0) = min{(mk-1)/(k-1), p_s(0)}.

    Args:
        m (float): Diffusion exponent, m > 1.
        k (int): Index, k >= 2.
        N (int | None): Dimension used for the p_s(0) cap; None leaves it uncapped.

    Raises:
        ValidationError: If k < 2 or m <= 1.
    """
    if k < 2:
        raise ValidationError('pk_zero requires k >= 2.')
    if not m > 1:
        raise ValidationError('pk_zero requires m > 1.')
    cap = math.inf if N is None else sobolev_exponent(m, N, 0.0)
    return min((m * k - 1) / (k - 1), cap)


def pohozaev_thresholds(params):
    """
    Return (p1_poh, p2_barrier).

    p1_poh is where Q(m,N,p,sigma) changes sign; p2_barrier bounds the
    range where the barrier surface certificate works. p2_barrier is None
    when sigma <= 0 (undefined there).
    """
    m, N, sigma = params.m, params.N, params.sigma
    p1 = m + (sigma + 2) * (sigma * (m + 1) - N * (m - 1)) / (N * (N + 2 * sigma + 2))
    p2 = (N + sigma) * (m - 1) / (2 * sigma) if sigma > 0 else None
    return p1, p2


def q_value(params):
    """Q(m,N,p,sigma), the coefficient whose sign decides the Pohozaev argument."""
    m, N, p, s = params.m, params.N, params.p, params.sigma
    return (m + 1) * s ** 2 + (m + 1) * (N + 2) * s + N * (m * N + 2) - N * (N + 2 * s + 2) * p


def constant_profile_value(params):
    """Height (1/(p-1))^{1/(p-1)} of the constant solution at sigma = 0."""
    return (1.0 / (params.p - 1)) ** (1.0 / (params.p - 1))
