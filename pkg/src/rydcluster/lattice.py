"""Lattice and drive parameters, the interaction law and the resonance condition.

Times are dimensionless in units of 1/Omega0 whenever ``omega0 == 1``.
Sites are 1-based throughout the public API.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

ZETA_TERM_CUTOFF = 1e-12


class Boundary(str, enum.Enum):
    PERIODIC = "periodic"
    OPEN = "open"


@dataclass(frozen=True)
class LatticeParams:
    n_sites: int
    v0: float = 5.0
    alpha: int = 6
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        # a single site is a valid full model (driven two-level atom); clusters need N >= 2
        if int(self.n_sites) != self.n_sites or self.n_sites < 1:
            raise ValueError(f"n_sites must be a positive integer, got {self.n_sites}")
        if not self.v0 > 0:
            raise ValueError(f"v0 must be positive, got {self.v0}")
        if self.alpha not in (3, 6):
            raise ValueError(f"alpha must be 3 or 6, got {self.alpha}")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        object.__setattr__(self, "boundary", Boundary(self.boundary))


@dataclass(frozen=True)
class DriveParams:
    omega0: float = 1.0
    omega: float = 5.0867

    def __post_init__(self):
        # omega0 == 0 is allowed as a frozen-dynamics control.
        if self.omega0 < 0:
            raise ValueError(f"omega0 must be nonnegative, got {self.omega0}")
        if self.omega < 0:
            raise ValueError(f"omega must be nonnegative, got {self.omega}")


@dataclass(frozen=True)
class IntegratorParams:
    dt: float
    t_end: float
    sample_stride: int = 1

    def __post_init__(self):
        if not (0 < self.dt <= self.t_end):
            raise ValueError(f"need 0 < dt <= t_end, got dt={self.dt}, t_end={self.t_end}")
        if int(self.sample_stride) != self.sample_stride or self.sample_stride < 1:
            raise ValueError(f"sample_stride must be a positive integer, got {self.sample_stride}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


def drive_amplitude(p: DriveParams, t):
    """Omega(t) = Omega0 cos(omega t); vectorises over ``t``."""
    return p.omega0 * np.cos(p.omega * t)


def site_distance(p: LatticeParams, i: int, j: int) -> int:
    d = abs(i - j)
    if p.boundary is Boundary.PERIODIC:
        d = min(d, p.n_sites - d)
    return d


def interaction_strength(p: LatticeParams, i: int, j: int) -> float:
    """V0 / d**alpha between 1-based sites ``i`` and ``j`` (minimal image on a ring)."""
    n = p.n_sites
    if not (1 <= i <= n and 1 <= j <= n):
        raise ValueError(f"sites must lie in 1..{n}, got ({i}, {j})")
    if i == j:
        raise ValueError("interaction_strength is undefined for i == j")
    return p.v0 / site_distance(p, i, j) ** p.alpha


def pair_interactions(p: LatticeParams) -> np.ndarray:
    """Dense symmetric matrix of V_ij with zero diagonal (0-based indices)."""
    n = p.n_sites
    idx = np.arange(n)
    d = np.abs(idx[:, None] - idx[None, :]).astype(float)
    if p.boundary is Boundary.PERIODIC:
        d = np.minimum(d, n - d)
    with np.errstate(divide="ignore"):
        v = p.v0 / d**p.alpha
    np.fill_diagonal(v, 0.0)
    return v


def _tail_length(p: LatticeParams) -> int:
    # smallest l with v0 / l**alpha < cutoff
    return int(math.ceil((p.v0 / ZETA_TERM_CUTOFF) ** (1.0 / p.alpha))) + 1


def resonant_frequency(p: LatticeParams, r: float = math.inf) -> float:
    """Potential gradient F(r) = sum_{l=1}^{r-1} V0 / l**alpha.

    ``r = math.inf`` gives the asymptotic value V0 * zeta(alpha), summed until
    terms drop below 1e-12. Finite ``r`` must be an integer >= 2.
    """
    if math.isinf(r):
        l_max = _tail_length(p)
    else:
        if int(r) != r or r < 2:
            raise ValueError(f"cluster size must be an integer >= 2 or inf, got {r}")
        l_max = int(r) - 1
    l = np.arange(1, l_max + 1, dtype=float)
    terms = p.v0 / l**p.alpha
    if math.isinf(r):
        terms = terms[terms >= ZETA_TERM_CUTOFF]
    # smallest terms first
    return float(np.sum(terms[::-1]))
