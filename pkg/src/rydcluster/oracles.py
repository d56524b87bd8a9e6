"""Closed-form two-level results and dense brute-force references.

These are deliberately written without the matrix-free kernels so they can
serve as independent checks of the production paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numba
import numpy as np

from .full_model import FullState
from .integrate import rk4_evolve, rk4_evolve_jit
from .lattice import Boundary, DriveParams, IntegratorParams, LatticeParams

DENSE_MAX_SITES = 6
TWO_LEVEL_DT = 1e-5


@dataclass(frozen=True)
class TwoLevelParams:
    omega0: float
    omega: float
    delta_eff: float = 0.0

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")


def p_ground_to_rydberg(p: TwoLevelParams, t):
    """sin^2[Omega0 sin(omega t) / (2 omega)], exact for a resonance-free driven atom."""
    if not p.omega > 0:
        raise ValueError("drive frequency must be positive")
    return np.sin(p.omega0 * np.sin(p.omega * t) / (2 * p.omega)) ** 2


@dataclass(frozen=True)
class PerturbativeProbability:
    value: float
    near_resonance: bool = False


def p_rydberg_to_ground(p: TwoLevelParams, t: float) -> PerturbativeProbability:
    """First-order, rotating-wave de-excitation probability of an atom detuned by delta_eff.

    At delta_eff == omega the formula degenerates; the short-time limit
    Omega0^2 t^2 / 16 is returned with ``near_resonance`` set.
    """
    if not p.omega0 <= p.delta_eff / 5:
        raise ValueError(f"perturbative regime needs omega0 <= delta_eff/5, got {p.omega0} vs {p.delta_eff}")
    det = p.delta_eff - p.omega
    if det == 0:
        return PerturbativeProbability(p.omega0**2 * t**2 / 16, near_resonance=True)
    return PerturbativeProbability(p.omega0**2 * math.sin(det * t / 2) ** 2 / (4 * det**2))


def rydberg_to_ground_envelope(p: TwoLevelParams) -> float:
    """Maximum of the first-order formula, Omega0^2 / (4 (delta_eff - omega)^2)."""
    return p.omega0**2 / (4 * (p.delta_eff - p.omega) ** 2)


def closed_form_two_level(p: TwoLevelParams, t) -> np.ndarray:
    """(amp_up, amp_down) for a ground-state start at delta_eff = 0."""
    theta = p.omega0 * np.sin(p.omega * np.asarray(t)) / (2 * p.omega)
    return np.stack([-1j * np.sin(theta), np.cos(theta) + 0j])


@numba.njit(cache=True)
def two_level_kernel(psi, t, out, params):
    # basis (up, down); H = Omega0 cos(wt) sigma^x / 2 + delta n_up
    omega0, omega, delta = params
    half = 0.5 * omega0 * np.cos(omega * t)
    out[0] = half * psi[1] + delta * psi[0]
    out[1] = half * psi[0]


def exact_two_level_evolution(p: TwoLevelParams, t: float, initial: str = "ground", dt: float = TWO_LEVEL_DT) -> np.ndarray:
    """Amplitudes (up, down) at time ``t``.

    Closed form when delta_eff == 0 and the start is the ground state;
    otherwise a dense 2x2 RK4 integration at step ``dt``.
    """
    if initial not in ("ground", "rydberg"):
        raise ValueError(f"initial must be 'ground' or 'rydberg', got {initial!r}")
    if p.delta_eff == 0 and initial == "ground":
        return closed_form_two_level(p, t)
    psi0 = np.array([0, 1] if initial == "ground" else [1, 0], dtype=np.complex128)
    if t == 0:
        return psi0
    n = max(1, int(math.ceil(t / dt)))
    ip = IntegratorParams(dt=t / n, t_end=t, sample_stride=n)
    return rk4_evolve_jit(two_level_kernel, (p.omega0, p.omega, p.delta_eff), psi0, ip)


def two_level_trajectory(p: TwoLevelParams, t_end: float, n_samples: int, initial: str = "ground", dt: float = TWO_LEVEL_DT):
    """(times, amplitudes) sampled on an even grid by RK4, for dense-grid checks."""
    psi0 = np.array([0, 1] if initial == "ground" else [1, 0], dtype=np.complex128)
    steps = int(math.ceil(t_end / dt / n_samples)) * n_samples
    ip = IntegratorParams(dt=t_end / steps, t_end=t_end, sample_stride=steps // n_samples)
    times, amps = [], []

    def observe(step, t, psi):
        times.append(t)
        amps.append(psi.copy())

    rk4_evolve_jit(two_level_kernel, (p.omega0, p.omega, p.delta_eff), psi0, ip, observe)
    return np.array(times), np.array(amps)


# -- dense many-body reference ----------------------------------------------

_SX = np.array([[0, 1], [1, 0]], dtype=float)
_N_UP = np.array([[0, 0], [0, 1]], dtype=float)  # basis (down, up) = (bit 0, bit 1)
_ID = np.eye(2)


def _site_operator(op: np.ndarray, site: int, n: int) -> np.ndarray:
    """Embed a single-site operator; site 1 is the least significant bit."""
    factors = [op if (n - k) == site else _ID for k in range(n)]
    return reduce(np.kron, factors)


def dense_full_hamiltonian_parts(p: LatticeParams) -> tuple[np.ndarray, np.ndarray]:
    """(sum_i sigma^x_i, sum_{i<j} V_ij n_i n_j) as dense 2^N x 2^N matrices from Pauli products."""
    n = p.n_sites
    if n > DENSE_MAX_SITES:
        raise ValueError(f"dense reference limited to N <= {DENSE_MAX_SITES}, got {n}")
    sx = sum(_site_operator(_SX, i, n) for i in range(1, n + 1))
    inter = np.zeros((2**n, 2**n))
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            dist = abs(i - j)
            if p.boundary is Boundary.PERIODIC:
                dist = min(dist, n - dist)
            inter += (p.v0 / dist**p.alpha) * (_site_operator(_N_UP, i, n) @ _site_operator(_N_UP, j, n))
    return sx, inter


def dense_full_hamiltonian(p: LatticeParams, d: DriveParams, t: float) -> np.ndarray:
    sx, inter = dense_full_hamiltonian_parts(p)
    return 0.5 * d.omega0 * math.cos(d.omega * t) * sx + inter


def brute_force_full_evolve(p: LatticeParams, d: DriveParams, psi0: FullState, t: float, dt: float = 1e-3) -> FullState:
    """Dense-matrix RK4 reference for N <= 6 (same stepping as the production path)."""
    sx, inter = dense_full_hamiltonian_parts(p)
    n = max(1, int(round(t / dt)))
    ip = IntegratorParams(dt=t / n, t_end=t, sample_stride=n)

    def apply_h(psi, tt):
        return 0.5 * d.omega0 * math.cos(d.omega * tt) * (sx @ psi) + inter @ psi

    return FullState(rk4_evolve(apply_h, psi0.amplitudes, ip), p.n_sites)
