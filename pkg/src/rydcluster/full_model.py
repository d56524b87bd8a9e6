"""Matrix-free dynamics of the full 2**N driven Rydberg chain.

Basis convention: site j (1-based) is bit j-1 of the basis index, so a set
bit means the atom is in the Rydberg state. The Hamiltonian is

    H(t) = sum_i Omega(t)/2 sigma^x_i + sum_{i<j} V_ij n_i n_j

applied as a bit-flip sum plus a precomputed diagonal; nothing of size
4**N is ever allocated.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numba
import numpy as np

from .errors import CapacityError
from .integrate import rk4_evolve_jit
from .lattice import DriveParams, IntegratorParams, LatticeParams, drive_amplitude, pair_interactions

MAX_SITES_ENV = "RYDCLUSTER_MAX_FULL_SITES"
DEFAULT_MAX_SITES = 24


def max_full_sites() -> int:
    """Capacity cap for the full model, lowered (or raised) via ``$RYDCLUSTER_MAX_FULL_SITES``."""
    raw = os.environ.get(MAX_SITES_ENV)
    if raw is None:
        return DEFAULT_MAX_SITES
    try:
        return int(raw)
    except ValueError:
        raise CapacityError(f"{MAX_SITES_ENV} must be an integer, got {raw!r}") from None


def check_capacity(n_sites: int) -> None:
    cap = max_full_sites()
    if n_sites > cap:
        mib = 16 * 2**n_sites / 2**20
        raise CapacityError(
            f"full model with N={n_sites} needs 2^{n_sites} amplitudes (~{mib:.0f} MiB per vector); "
            f"cap is N={cap} (set {MAX_SITES_ENV} to change)"
        )


@dataclass
class FullState:
    amplitudes: np.ndarray
    n_sites: int

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (2**self.n_sites,):
            raise ValueError(
                f"expected {2**self.n_sites} amplitudes for N={self.n_sites}, got shape {self.amplitudes.shape}"
            )

    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


@dataclass(frozen=True)
class DiagonalInteraction:
    energies: np.ndarray


def build_diagonal(p: LatticeParams) -> DiagonalInteraction:
    """Interaction energy sum_{i<j} V_ij b_i b_j for every basis index b."""
    n = p.n_sites
    check_capacity(n)
    v = pair_interactions(p)
    b = np.arange(2**n, dtype=np.int64)
    bits = [((b >> i) & 1).astype(bool) for i in range(n)]
    energies = np.zeros(2**n)
    for i in range(n):
        for j in range(i + 1, n):
            energies[bits[i] & bits[j]] += v[i, j]
    return DiagonalInteraction(energies)


def _flip_sum(psi: np.ndarray, n: int) -> np.ndarray:
    """sum_j psi[b XOR (1 << j)], via axis flips of the (2,)*n tensor view."""
    v = psi.reshape((2,) * n)
    out = np.zeros_like(v)
    for axis in range(n):
        out += np.flip(v, axis=axis)
    return out.reshape(-1)


def apply_full_hamiltonian(
    s: FullState, t: float, p: LatticeParams, d: DriveParams, diag: DiagonalInteraction
) -> FullState:
    amps = s.amplitudes
    out = 0.5 * drive_amplitude(d, t) * _flip_sum(amps, s.n_sites) + diag.energies * amps
    return FullState(out, s.n_sites)


@numba.njit(cache=True)
def full_kernel(psi, t, out, params):
    omega0, omega, n, energies = params
    half = 0.5 * omega0 * np.cos(omega * t)
    for b in range(psi.size):
        acc = 0j
        for j in range(n):
            acc += psi[b ^ (1 << j)]
        out[b] = half * acc + energies[b] * psi[b]


def kernel_params(p: LatticeParams, d: DriveParams, diag: DiagonalInteraction) -> tuple:
    return (float(d.omega0), float(d.omega), int(p.n_sites), diag.energies)


def build_cluster_full(p: LatticeParams, j1: int, j2: int) -> FullState:
    """Basis state with sites j1..j2 excited (1-based, inclusive)."""
    n = p.n_sites
    check_capacity(n)
    if not (1 <= j1 <= j2 <= n):
        raise ValueError(f"need 1 <= j1 <= j2 <= {n}, got ({j1}, {j2})")
    index = sum(1 << (j - 1) for j in range(j1, j2 + 1))
    amps = np.zeros(2**n, dtype=np.complex128)
    amps[index] = 1.0
    return FullState(amps, n)


def ground_state_full(p: LatticeParams) -> FullState:
    check_capacity(p.n_sites)
    amps = np.zeros(2**p.n_sites, dtype=np.complex128)
    amps[0] = 1.0
    return FullState(amps, p.n_sites)


def rydberg_density_full(s: FullState) -> np.ndarray:
    """<n_j> for j = 1..N."""
    n = s.n_sites
    probs = (np.abs(s.amplitudes) ** 2).reshape((2,) * n)
    # bit j-1 lives on tensor axis n-j
    return np.array([probs.take(1, axis=n - j).sum() for j in range(1, n + 1)])


def cluster_subspace_indices(p: LatticeParams) -> np.ndarray:
    """Basis indices of single contiguous clusters of size 1..N-1.

    Clusters wrapping the ring seam are included for periodic boundaries.
    """
    n = p.n_sites
    periodic = p.boundary.value == "periodic"
    out = []
    for r in range(1, n):
        block = (1 << r) - 1
        for j1 in range(n):
            if not periodic and j1 + r > n:
                continue
            # rotate the r-bit block to start at bit j1
            out.append(((block << j1) | (block >> (n - j1))) & ((1 << n) - 1))
    return np.array(sorted(set(out)), dtype=np.int64)


def evolve_full(
    psi0: FullState,
    p: LatticeParams,
    d: DriveParams,
    ip: IntegratorParams,
    observer=None,
    diag: DiagonalInteraction | None = None,
    norm_tol: float = 1e-4,
) -> FullState:
    if diag is None:
        diag = build_diagonal(p)
    final = rk4_evolve_jit(
        full_kernel, kernel_params(p, d, diag), psi0.amplitudes, ip, observer, norm_tol=norm_tol
    )
    return FullState(final, psi0.n_sites)
