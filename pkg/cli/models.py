"""Run ledger models for the CLI app.

Defines:
- Run: one recorded command execution with its RunConfig.
- ShotRecord: one row of a recorded sweep.
- ConnectionRecord: one located connection.

Notes:
    - The ledger is append-only: commands create records, never update
      them, except for the exit code written when a run finishes.
    - Recording is opt-in through ``--record``.
"""

from django.db import models


class Run(models.Model):
    """
    Recorded command execution.

    Attributes:
        command (str): Management command name.
        config (dict): RunConfig as a JSON document.
        version (str): Tool version at execution time.
        exit_code (int | None): 0 on success, 2/3/4 on failures, None while running.
        created_at (datetime): Creation timestamp; auto-populated.
    """
    command = models.CharField(max_length=32)
    config = models.JSONField()
    version = models.CharField(max_length=16)
    exit_code = models.IntegerField(null=True, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    def __str__(self):
        """Human-readable representation used in listings and logs."""
        return f"#{self.pk} {self.command} ({self.created_at:%Y-%m-%d %H:%M}, exit {self.exit_code})"

    class Meta:
        ordering = ['-created_at', '-pk']


class ShotRecord(models.Model):
    """
    Sweep row: family parameter, oscillation counts and fate.

    Attributes:
        run (Run): Run that produced the row.
        family (str): Family shot (P0_C, Q5_theta, P3_p).
        parameter (float): Family parameter value.
        n_max (int): Descending Y-zero crossings (-1 on failure).
        n_min (int): Ascending Y-zero crossings (-1 on failure).
        fate (str): Terminal fate, or 'Error'.
    """
    run = models.ForeignKey(Run, on_delete=models.CASCADE, related_name='shots')
    family = models.CharField(max_length=16)
    parameter = models.FloatField()
    n_max = models.IntegerField()
    n_min = models.IntegerField()
    fate = models.CharField(max_length=32)

    def __str__(self):
        return f"{self.family}={self.parameter:g}: {self.fate} ({self.n_max}/{self.n_min})"

    class Meta:
        ordering = ['run', 'pk']


class ConnectionRecord(models.Model):
    """
    Located connection.

    Attributes:
        run (Run): Run that located it.
        family (str): Family searched.
        parameter_star (float): Connecting parameter.
        bracket_low, bracket_high (float): Final bracket, sorted.
        oscillations (int): Minima of the connecting orbit.
        q1_signature (bool): The orbit passes near Q1.
        profile_file (str): Emitted profile file, empty when none.
    """
    run = models.ForeignKey(Run, on_delete=models.CASCADE, related_name='connections')
    family = models.CharField(max_length=16)
    parameter_star = models.FloatField()
    bracket_low = models.FloatField()
    bracket_high = models.FloatField()
    oscillations = models.IntegerField()
    q1_signature = models.BooleanField(default=False)
    profile_file = models.CharField(max_length=255, blank=True)

    def __str__(self):
        return f"{self.family}* = {self.parameter_star:.12g} (k={self.oscillations})"
