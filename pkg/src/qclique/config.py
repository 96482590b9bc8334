"""Global numerical settings shared by every module.

All validation tolerances live in one mutable :class:`Settings` instance so
that the CLI ``--tol`` / ``--max-qubits`` flags (and tests) can adjust them in
one place.  Use :func:`override` for temporary changes.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, fields, replace


@dataclass
class Settings:
    # validation of density operators / pure states
    herm: float = 1e-10
    trace: float = 1e-10
    psd: float = 1e-10
    norm: float = 1e-10
    # reconstruction checks (eigen / SVD round trips)
    eig: float = 1e-9
    # orthogonality of certificate states, channel completeness (sum of Kraus)
    orth: float = 1e-8
    channel: float = 1e-8
    unitary: float = 1e-10
    # desk-scale limits
    max_qubits: int = 12

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


settings = Settings()


def set_validation_tolerance(tol: float) -> None:
    """Set every validation tolerance (herm, trace, psd, norm, unitary) to ``tol``."""
    settings.herm = settings.trace = settings.psd = settings.norm = tol
    settings.unitary = tol


@contextlib.contextmanager
def override(**changes):
    """Temporarily replace fields of the global settings."""
    saved = replace(settings)
    for name, value in changes.items():
        if not hasattr(saved, name):
            raise AttributeError(f"unknown setting {name!r}")
        setattr(settings, name, value)
    try:
        yield settings
    finally:
        for f in fields(saved):
            setattr(settings, f.name, getattr(saved, f.name))
