"""Parameter ranges where no decaying profile exists for sigma > 0.

Defines:
- Criterion: which certificate applies.
- NonexistenceVerdict: the Combined verdict with the other certificates and thresholds.
- nonexistence_predicate().
"""

import logging
from dataclasses import dataclass, field

from django.core.exceptions import ValidationError
from django.db import models

from params.exponents import exponent_table, pohozaev_thresholds

logger = logging.getLogger(__name__)


class Criterion(models.TextChoices):
    COMBINED = 'Combined', 'sigma >= sigma* and m < p < p_s'
    POHOZAEV = 'PohozaevRange', 'sigma > sigma_lower and p <= p1'
    BARRIER = 'BarrierRange', 'p > max(p_F, p2)'
    NONE = 'None', 'No certificate applies'


@dataclass(frozen=True)
class NonexistenceVerdict:
    """
    Attributes:
        verdict (bool): sigma >= sigma* and m < p < p_s.
        criterion (Criterion): Strongest certificate that applies.
        sub_criteria (dict): Each certificate and whether it applies.
        certificates (list): Pohozaev and barrier certificates that hold.
            They never change the verdict.
        thresholds (dict): sigma*, sigma_lower, p_s, p_F, p1 and p2.
    """
    verdict: bool
    criterion: Criterion
    sub_criteria: dict = field(default_factory=dict)
    certificates: list = field(default_factory=list)
    thresholds: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            'verdict': self.verdict,
            'criterion': self.criterion.value,
            'sub_criteria': self.sub_criteria,
            'certificates': self.certificates,
            'thresholds': self.thresholds,
        }


def nonexistence_predicate(params):
    """
    Decide whether the certificates exclude a decaying profile.

    The verdict is the Combined condition: sigma >= sigma* with m < p < p_s.
    The narrower certificates are reported next to it and never change the
    verdict: PohozaevRange when sigma > sigma_lower and p <= p1, BarrierRange
    when p exceeds both p_F and p2, each inside m < p < p_s.

    Raises:
        ValidationError: If sigma <= 0 or the parameters are invalid.
    """
    params.clean()
    if not params.sigma > 0:
        raise ValidationError({'sigma': 'the non-existence certificates need sigma > 0.'})
    table = exponent_table(params)
    p1, p2 = pohozaev_thresholds(params)
    m, p, sigma = params.m, params.p, params.sigma
    subcritical = m < p < table.p_s
    checks = {
        Criterion.COMBINED: subcritical and sigma >= table.sigma_star,
        Criterion.POHOZAEV: subcritical and sigma > table.sigma_lower and p <= p1,
        Criterion.BARRIER: subcritical and p > max(table.p_F, p2),
    }
    criterion = next((c for c, holds in checks.items() if holds), Criterion.NONE)
    verdict = checks[Criterion.COMBINED]
    certificates = [c.value for c in (Criterion.POHOZAEV, Criterion.BARRIER) if checks[c]]
    logger.debug('non-existence at %s: %s (%s)', params, verdict, criterion.value)
    return NonexistenceVerdict(
        verdict=verdict,
        criterion=criterion,
        sub_criteria={c.value: holds for c, holds in checks.items()},
        certificates=certificates,
        thresholds={
            'sigma_star': table.sigma_star, 'sigma_lower': table.sigma_lower,
            'p_s': table.p_s, 'p_F': table.p_F, 'p1': p1, 'p2': p2,
        },
    )
