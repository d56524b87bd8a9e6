"""Wannier-Stark rung amplitudes C_m(t) for a single momentum block.

With block hopping J_k(t) = J0 cos(omega t), J0 = 2 scale Omega0 cos(k/2),
and potential gradient F, the rung amplitudes obey

    full      dC_m/dt = -(J0 omega / F) sin(omega t) [C_{m-1} e^{iFt} - C_{m+1} e^{-iFt}]
    rwa       i dC_m/dt = a [C_{m-1} e^{-i dw t} + C_{m+1} e^{i dw t}],  a = J0 omega / (2F)
    resonant  i dC_m/dt = (J0 / 2) [C_{m-1} + C_{m+1}]

where dw = omega - F. The near-resonant ("detuned") form is the rwa
equation written in terms of dw; the phase carries the factor t.
All generators are (anti-)Hermitian, so sum |C_m|^2 is conserved.
The ladder is open at m_min and m_max.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numba
import numpy as np
from scipy.special import jv

from .cluster_model import DEFAULT_CONVENTION, HoppingConvention
from .integrate import rk4_evolve_jit
from .lattice import DriveParams, IntegratorParams

RWA_MAX_RELATIVE_DETUNING = 0.1
VARIANTS = ("full", "rwa", "resonant", "detuned")


@dataclass
class AmplitudeLadder:
    k: float
    rungs: np.ndarray
    m_min: int
    f: float
    convention: HoppingConvention = DEFAULT_CONVENTION

    def __post_init__(self):
        self.rungs = np.asarray(self.rungs, dtype=np.complex128)
        if self.m_min < 2:
            raise ValueError(f"m_min must be >= 2, got {self.m_min}")

    @property
    def m(self) -> np.ndarray:
        return np.arange(self.m_min, self.m_min + self.rungs.size)

    @property
    def m_max(self) -> int:
        return self.m_min + self.rungs.size - 1

    def delta_omega(self, d: DriveParams) -> float:
        return d.omega - self.f

    def hopping0(self, d: DriveParams) -> float:
        """J0 = 2 scale Omega0 cos(k/2)."""
        return 2.0 * self.convention.scale * d.omega0 * math.sin((math.pi - self.k) / 2)

    def populations(self) -> np.ndarray:
        return np.abs(self.rungs) ** 2


def ladder_window(m0: int, omega0: float, t_end: float, margin: int = 20) -> tuple[int, int]:
    spread = 4.0 * omega0 * t_end + margin
    return max(2, int(math.floor(m0 - spread))), int(math.ceil(m0 + spread))


def single_rung_ladder(
    m0: int,
    k: float,
    f: float,
    d: DriveParams,
    t_end: float,
    conv: HoppingConvention = DEFAULT_CONVENTION,
) -> AmplitudeLadder:
    lo, hi = ladder_window(m0, d.omega0, t_end)
    rungs = np.zeros(hi - lo + 1, dtype=np.complex128)
    rungs[m0 - lo] = 1.0
    return AmplitudeLadder(k, rungs, lo, f, conv)


def gaussian_rung_ladder(
    m0: float,
    width: float,
    k: float,
    f: float,
    m_min: int,
    m_max: int,
    conv: HoppingConvention = DEFAULT_CONVENTION,
    q0: float = 0.0,
) -> AmplitudeLadder:
    """Rung packet exp(-(m - m0)^2 / (4 width^2) + i q0 m), normalised."""
    m = np.arange(m_min, m_max + 1)
    rungs = np.exp(-((m - m0) ** 2) / (4 * width**2) + 1j * q0 * m)
    return AmplitudeLadder(k, rungs / np.linalg.norm(rungs), m_min, f, conv)


# -- generators: kernels write H C with i dC/dt = H C -------------------------


@numba.njit(cache=True)
def full_eom_kernel(c, t, out, params):
    b, omega, f = params
    # dC_m/dt = -b sin(wt) [C_{m-1} e^{iFt} - C_{m+1} e^{-iFt}];  H C = i dC/dt
    s = -b * math.sin(omega * t)
    up = np.exp(1j * f * t)
    down = np.exp(-1j * f * t)
    n = c.size
    for i in range(n):
        acc = 0j
        if i > 0:
            acc += c[i - 1] * up
        if i + 1 < n:
            acc -= c[i + 1] * down
        out[i] = 1j * s * acc


@numba.njit(cache=True)
def tight_binding_kernel(c, t, out, params):
    a, dw = params
    lower = a * np.exp(-1j * dw * t)
    upper = a * np.exp(1j * dw * t)
    n = c.size
    for i in range(n):
        acc = 0j
        if i > 0:
            acc += lower * c[i - 1]
        if i + 1 < n:
            acc += upper * c[i + 1]
        out[i] = acc


def _check_rwa_domain(l: AmplitudeLadder, d: DriveParams) -> None:
    ratio = abs(l.delta_omega(d)) / l.f
    if ratio >= RWA_MAX_RELATIVE_DETUNING:
        raise ValueError(f"rotating-wave form needs |omega - F|/F < {RWA_MAX_RELATIVE_DETUNING}, got {ratio:.3g}")


def generator(l: AmplitudeLadder, d: DriveParams, variant: str):
    """(kernel, params) for one of the EOM variants."""
    j0 = l.hopping0(d)
    if variant == "full":
        return full_eom_kernel, (j0 * d.omega / l.f, float(d.omega), float(l.f))
    if variant == "rwa":
        _check_rwa_domain(l, d)
        return tight_binding_kernel, (j0 * d.omega / (2 * l.f), l.delta_omega(d))
    if variant == "detuned":
        return tight_binding_kernel, (j0 * d.omega / (2 * l.f), l.delta_omega(d))
    if variant == "resonant":
        return tight_binding_kernel, (0.5 * j0, 0.0)
    raise ValueError(f"unknown EOM variant {variant!r}; expected one of {VARIANTS}")


def _rhs(l: AmplitudeLadder, t: float, d: DriveParams, variant: str) -> np.ndarray:
    kernel, params = generator(l, d, variant)
    out = np.empty_like(l.rungs)
    kernel(l.rungs, t, out, params)
    return -1j * out


def eom_rhs_full(l: AmplitudeLadder, t: float, d: DriveParams) -> np.ndarray:
    return _rhs(l, t, d, "full")


def eom_rhs_rwa(l: AmplitudeLadder, t: float, d: DriveParams) -> np.ndarray:
    return _rhs(l, t, d, "rwa")


def eom_rhs_resonant(l: AmplitudeLadder, t: float, d: DriveParams) -> np.ndarray:
    return _rhs(l, t, d, "resonant")


def eom_rhs_detuned(l: AmplitudeLadder, t: float, d: DriveParams) -> np.ndarray:
    return _rhs(l, t, d, "detuned")


def evolve_ladder(
    l: AmplitudeLadder,
    d: DriveParams,
    ip: IntegratorParams,
    variant: str = "resonant",
    observer=None,
    t0: float = 0.0,
) -> AmplitudeLadder:
    kernel, params = generator(l, d, variant)
    final = rk4_evolve_jit(kernel, params, l.rungs, ip, observer, t0=t0)
    return replace(l, rungs=final)


def ladder_moments(rungs: np.ndarray, m: np.ndarray) -> tuple[float, float]:
    """Population-weighted mean and variance of the rung index."""
    w = np.abs(rungs) ** 2
    w = w / w.sum()
    mean = float(np.dot(w, m))
    return mean, float(np.dot(w, (m - mean) ** 2))


def resonant_bessel_amplitudes(m: np.ndarray, m0: int, hopping: float, t: float) -> np.ndarray:
    """Closed form (-i)^{m-m0} J_{m-m0}(2 hopping t) for a uniform chain started on rung m0."""
    dm = m - m0
    return (-1j) ** dm * jv(dm, 2.0 * hopping * t)
