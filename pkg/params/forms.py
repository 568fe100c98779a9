"""
Form validating user supplied problem parameters.

Provides:
- ParamsForm: turns raw (m, N, p, sigma) input into a validated Params.

Example:
    >>> form = ParamsForm({'m': 2, 'N': 5, 'p': 2.1, 'sigma': 0.1})
    >>> form.is_valid()
    True
    >>> form.params.N
    5
"""

from django import forms
from django.core.exceptions import ValidationError

from .exponents import Params


class ParamsForm(forms.Form):
    """
    Validate (m, N, p, sigma) against the Params invariants.

    Behavior:
    - Field level: numeric parsing, N as an integer >= 1.
    - Form level: Params.clean() invariants (m > 1, sigma > -2, p > m or
      p >= m with ``inspection``, L > 0) reported on the offending field.
    """
    m = forms.FloatField()
    N = forms.IntegerField(min_value=1)
    p = forms.FloatField(required=False)
    sigma = forms.FloatField()
    inspection = forms.BooleanField(required=False)

    def __init__(self, *args, require_p=True, **kwargs):
        super().__init__(*args, **kwargs)
        self.require_p = require_p

    def clean(self):
        cleaned = super().clean()
        m, N, sigma = cleaned.get('m'), cleaned.get('N'), cleaned.get('sigma')
        p = cleaned.get('p')
        if m is None or N is None or sigma is None:
            return cleaned
        if p is None:
            if self.require_p:
                self.add_error('p', 'This field is required.')
                return cleaned
            # exponent tables do not depend on p
            p = m + 1.0
        try:
            cleaned['params'] = Params(m=m, N=N, p=p, sigma=sigma).clean(
                inspection=cleaned.get('inspection', False))
        except ValidationError as exc:
            for field, messages in exc.message_dict.items():
                self.add_error(field if field in self.fields else None, messages)
        return cleaned

    @property
    def params(self):
        return self.cleaned_data['params']
