"""
Form validating the options common to every command.

Provides:
- RunConfigForm: parameters, integrator overrides and output settings,
  turned into a RunConfig.

Example:
    >>> form = RunConfigForm({'m': 2, 'N': 5, 'p': 2.1, 'sigma': 0.1, 'rel_tol': 1e-11})
    >>> form.is_valid()
    True
    >>> form.run_config('shoot').controls.rel_tol
    1e-11
"""

from pathlib import Path

from django import forms
from django.core.exceptions import ValidationError

from integrate.solver import Controls
from params.forms import ParamsForm

from .config import CONTROL_KEYS, OutputFormat, RunConfig


class RunConfigForm(ParamsForm):
    """
    ParamsForm plus integrator overrides and output settings.

    Behavior:
    - Blank tolerances and limits fall back to ``settings.BLOWUP``.
    - Non-positive overrides are reported on their own field.
    """
    rel_tol = forms.FloatField(required=False)
    abs_tol = forms.FloatField(required=False)
    s_max = forms.FloatField(required=False)
    radius_max = forms.FloatField(required=False)
    output_dir = forms.CharField(required=False)
    format = forms.ChoiceField(choices=OutputFormat.choices, required=False)

    def clean(self):
        cleaned = super().clean()
        overrides = {key: cleaned.get(key) for key in CONTROL_KEYS}
        for key, value in overrides.items():
            if value is not None and not value > 0:
                self.add_error(key, f'{key} must be positive.')
        if not self.errors:
            try:
                cleaned['controls'] = Controls.from_settings(**overrides)
            except ValidationError as exc:
                self.add_error(None, exc)
        return cleaned

    def run_config(self, command, options=None):
        """RunConfig of ``command`` from the validated data."""
        data = self.cleaned_data
        return RunConfig(
            command=command,
            params=data.get('params'),
            controls=data['controls'],
            options=dict(options or {}),
            output_dir=Path(data.get('output_dir') or 'output'),
            format=OutputFormat(data.get('format') or OutputFormat.CSV),
        )
