"""Physical constants and numerical tolerances.

Default units are natural (hbar = c = eps0 = 1); SI values can be passed
instead, every formula carries the constants explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError


@dataclass(frozen=True)
class Config:
    hbar: float = 1.0
    c: float = 1.0
    eps0: float = 1.0
    fd_order: int = 4
    tol_quad: float = 1e-7
    tol_fd: float = 1e-3
    mu0: float = field(init=False)

    def __post_init__(self):
        if self.hbar <= 0 or self.c <= 0 or self.eps0 <= 0:
            raise ConfigError("hbar, c, eps0 must all be positive")
        if self.fd_order not in (2, 4):
            raise ConfigError(f"fd_order must be 2 or 4, got {self.fd_order}")
        if self.tol_quad <= 0 or self.tol_fd <= 0:
            raise ConfigError("tolerances must be positive")
        object.__setattr__(self, "mu0", 1.0 / (self.eps0 * self.c**2))

    def omega(self, k):
        """Dispersion relation omega = c * |k|."""
        return self.c * k
