"""Effective two-domain-wall model of a single spin cluster.

A cluster is stored by its left wall ``j1`` (1..N) and its size ``r``
(1..N-1): ``amplitudes[j1 - 1, r - 1]`` is the amplitude of the state with
sites j1, ..., j1 + r - 1 excited. With periodic boundaries the right wall
may wrap past site N; with open boundaries entries with j1 + r - 1 > N are
structurally zero and no move reaches them.

Each wall hops by one site with coefficient ``scale * Omega(t)`` (see
:class:`HoppingConvention`) and a cluster of size r carries the skew
potential U(r) = sum_{l<r} (r - l) V0 / l**alpha.

On the ring the model is translation invariant. Fourier transforming the
centre of mass c = j1 + (r - 1)/2 with k_m = 2 pi m / N, m = 0..2N-1
(a unitary 2N-point transform on the doubled coordinate 2c, 2x redundant)
splits it into open chains in r with hopping 2 A(t) cos(k/2).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.special import jv

from .full_model import FullState, check_capacity
from .integrate import rk4_evolve_jit
from .lattice import Boundary, DriveParams, IntegratorParams, LatticeParams, drive_amplitude, resonant_frequency

BESSEL_TRUNCATION = 1e-14
GAUSSIAN_WEIGHT_FLOOR = 1e-300


class HoppingConvention(str, enum.Enum):
    """Wall-hopping coefficient: ``Omega(t)`` as printed, or ``Omega(t)/2`` from projecting sigma^x/2."""

    PAPER_VERBATIM = "paper_verbatim"
    PROJECTOR_DERIVED = "projector_derived"

    @property
    def scale(self) -> float:
        return 1.0 if self is HoppingConvention.PAPER_VERBATIM else 0.5


DEFAULT_CONVENTION = HoppingConvention.PROJECTOR_DERIVED


def require_cluster_lattice(n_sites: int) -> None:
    if n_sites < 2:
        raise ValueError(f"the cluster model needs at least 2 sites, got {n_sites}")


def valid_mask(n_sites: int, boundary: Boundary) -> np.ndarray:
    require_cluster_lattice(n_sites)
    mask = np.ones((n_sites, n_sites - 1), dtype=bool)
    if Boundary(boundary) is Boundary.OPEN:
        j1 = np.arange(1, n_sites + 1)[:, None]
        r = np.arange(1, n_sites)[None, :]
        mask &= j1 + r - 1 <= n_sites
    return mask


@dataclass
class ClusterState:
    amplitudes: np.ndarray
    n_sites: int
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        require_cluster_lattice(self.n_sites)
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        self.boundary = Boundary(self.boundary)
        shape = (self.n_sites, self.n_sites - 1)
        if self.amplitudes.shape != shape:
            raise ValueError(f"expected amplitude grid {shape}, got {self.amplitudes.shape}")

    @classmethod
    def zeros(cls, p: LatticeParams) -> "ClusterState":
        return cls(np.zeros((p.n_sites, p.n_sites - 1), dtype=np.complex128), p.n_sites, p.boundary)

    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def amplitude(self, j1: int, j2: int) -> complex:
        r = (j2 - j1) % self.n_sites + 1
        return complex(self.amplitudes[j1 - 1, r - 1])

    def is_well_formed(self) -> bool:
        outside = ~valid_mask(self.n_sites, self.boundary)
        return not np.any(self.amplitudes[outside])


# -- potential -------------------------------------------------------------


@dataclass(frozen=True)
class SkewPotential:
    values: np.ndarray  # U(r) for r = 1..N-1
    gradient_f: float

    def __call__(self, r: int) -> float:
        return float(self.values[r - 1])


def skew_potential(p: LatticeParams, r: int) -> float:
    """U(r) = sum_{l=1}^{r-1} (r - l) V0 / l**alpha, for 1 <= r <= N-1."""
    if not (1 <= r <= p.n_sites - 1):
        raise ValueError(f"cluster size must lie in 1..{p.n_sites - 1}, got {r}")
    l = np.arange(1, r, dtype=float)
    return float(np.sum((r - l) * p.v0 / l**p.alpha))


def skew_potential_table(p: LatticeParams) -> SkewPotential:
    n = p.n_sites
    require_cluster_lattice(n)
    l = np.arange(1, n, dtype=float)
    v = p.v0 / l**p.alpha
    # U(r+1) - U(r) = sum_{l<=r} V_l, U(1) = 0
    steps = np.cumsum(v)[: n - 2]
    values = np.concatenate([[0.0], np.cumsum(steps)])
    return SkewPotential(values, resonant_frequency(p))


# -- state builders --------------------------------------------------------


def build_cluster(p: LatticeParams, j1: int, j2: int) -> ClusterState:
    """Single cluster with sites j1..j2 excited (1 <= j1 <= j2 <= N, size < N)."""
    n = p.n_sites
    if not (1 <= j1 <= j2 <= n):
        raise ValueError(f"need 1 <= j1 <= j2 <= {n}, got ({j1}, {j2})")
    r = j2 - j1 + 1
    if r > n - 1:
        raise ValueError("a cluster covering every site has no domain walls")
    s = ClusterState.zeros(p)
    s.amplitudes[j1 - 1, r - 1] = 1.0
    return s


def build_gaussian_cluster(p: LatticeParams, c0: float, k0: float, sigma: float, r0: int) -> ClusterState:
    """Fixed-size clusters with a Gaussian centre-of-mass envelope and momentum k0.

    Amplitude on (j1, j1 + r0 - 1) is exp(-(c - c0)^2 / (4 sigma^2)) exp(-i k0 c)
    with c = j1 + (r0 - 1)/2, normalised over all non-wrapping j1.
    """
    n = p.n_sites
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not (1 <= r0 <= n - 1):
        raise ValueError(f"r0 must lie in 1..{n - 1}, got {r0}")
    offset = c0 - (r0 - 1) / 2
    if abs(offset - round(offset)) > 1e-9:
        raise ValueError(f"c0={c0} is off the centre-of-mass grid for r0={r0}")
    j1 = np.arange(1, n - r0 + 2)
    c = j1 + (r0 - 1) / 2
    weight = np.exp(-((c - c0) ** 2) / (4 * sigma**2))
    keep = weight > GAUSSIAN_WEIGHT_FLOOR
    if not keep.any():
        raise ValueError("Gaussian envelope has no weight on the lattice")
    amps = np.where(keep, weight, 0.0) * np.exp(-1j * k0 * c)
    s = ClusterState.zeros(p)
    s.amplitudes[j1 - 1, r0 - 1] = amps / np.linalg.norm(amps)
    return s


# -- Hamiltonian -----------------------------------------------------------


@numba.njit(cache=True)
def cluster_kernel(psi, t, out, params):
    amp0, omega, n, wrap, u = params
    a = amp0 * np.cos(omega * t)
    rmax = n - 1
    for j in range(n):
        for ri in range(rmax):
            idx = j * rmax + ri
            r = ri + 1
            if not wrap and j + r > n:
                out[idx] = 0.0
                continue
            h = 0j
            if ri + 1 < rmax:
                # (j1, j2 + 1) and (j1 - 1, j2): size r + 1
                if wrap or j + r + 1 <= n:
                    h += psi[idx + 1]
                if j > 0:
                    h += psi[idx - rmax + 1]
                elif wrap:
                    h += psi[(n - 1) * rmax + ri + 1]
            if ri > 0:
                # (j1, j2 - 1) and (j1 + 1, j2): size r - 1
                h += psi[idx - 1]
                if j + 1 < n:
                    h += psi[idx + rmax - 1]
                elif wrap:
                    h += psi[ri - 1]
            out[idx] = a * h + u[ri] * psi[idx]


def cluster_kernel_params(p: LatticeParams, d: DriveParams, conv: HoppingConvention) -> tuple:
    u = skew_potential_table(p).values
    wrap = p.boundary is Boundary.PERIODIC
    return (conv.scale * float(d.omega0), float(d.omega), int(p.n_sites), bool(wrap), u)


def apply_effective_hamiltonian(
    s: ClusterState,
    t: float,
    p: LatticeParams,
    d: DriveParams,
    conv: HoppingConvention = DEFAULT_CONVENTION,
) -> ClusterState:
    out = np.empty(s.amplitudes.size, dtype=np.complex128)
    cluster_kernel(np.ascontiguousarray(s.amplitudes).reshape(-1), t, out, cluster_kernel_params(p, d, conv))
    return ClusterState(out.reshape(s.amplitudes.shape), s.n_sites, s.boundary)


def dense_effective_hamiltonian(p: LatticeParams, a: float) -> np.ndarray:
    """Explicit matrix with wall-hopping coefficient ``a`` on the flattened grid.

    Assembled independently of :func:`cluster_kernel`, from the (j1, j2) moves.
    """
    n = p.n_sites
    wrap = p.boundary is Boundary.PERIODIC
    mask = valid_mask(n, p.boundary)
    dim = n * (n - 1)
    u = skew_potential_table(p).values
    h = np.zeros((dim, dim))

    def index(j1, r):
        return (j1 - 1) * (n - 1) + (r - 1)

    for j1 in range(1, n + 1):
        for r in range(1, n):
            if not mask[j1 - 1, r - 1]:
                continue
            i = index(j1, r)
            h[i, i] = u[r - 1]
            # right wall outwards (j2 -> j2 + 1) and left wall inwards (j1 -> j1 + 1)
            for nj1, nr in ((j1, r + 1), (j1 + 1, r - 1)):
                if not (1 <= nr <= n - 1):
                    continue
                if nj1 > n:
                    if not wrap:
                        continue
                    nj1 -= n
                if not mask[nj1 - 1, nr - 1]:
                    continue
                jdx = index(nj1, nr)
                h[i, jdx] += a
                h[jdx, i] += a
    return h


def evolve_cluster(
    s: ClusterState,
    p: LatticeParams,
    d: DriveParams,
    ip: IntegratorParams,
    conv: HoppingConvention = DEFAULT_CONVENTION,
    observer=None,
    norm_tol: float = 1e-4,
) -> ClusterState:
    """RK4-evolve a cluster state; ``observer(step, t, amps)`` sees the (N, N-1) grid."""
    final = rk4_evolve_jit(
        cluster_kernel, cluster_kernel_params(p, d, conv), s.amplitudes, ip, observer, norm_tol=norm_tol
    )
    return ClusterState(final, s.n_sites, s.boundary)


# -- momentum blocks -------------------------------------------------------


@dataclass
class MomentumBlockState:
    m: int  # k = 2 pi m / N, m = 0..2N-1
    amplitudes: np.ndarray  # over r = 1..N-1
    n_sites: int = field(default=0)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if not self.n_sites:
            self.n_sites = self.amplitudes.size + 1

    @property
    def k(self) -> float:
        return momentum_value(self.m, self.n_sites)


def momentum_value(m: int, n_sites: int) -> float:
    return 2 * math.pi * m / n_sites


def _phase_table(n: int) -> np.ndarray:
    """exp(i k_m c(j1, r)) with shape (2N, N, N-1)."""
    m = np.arange(2 * n)[:, None, None]
    c = np.arange(1, n + 1)[None, :, None] + np.arange(n - 1)[None, None, :] / 2
    return np.exp(1j * (2 * np.pi * m / n) * c)


def momentum_decompose(s: ClusterState) -> list[MomentumBlockState]:
    n = s.n_sites
    phase = _phase_table(n)
    blocks = np.einsum("mjr,jr->mr", phase, s.amplitudes) / math.sqrt(2 * n)
    return [MomentumBlockState(m, blocks[m], n) for m in range(2 * n)]


def reassemble(blocks: list[MomentumBlockState], boundary: Boundary = Boundary.PERIODIC) -> ClusterState:
    n = blocks[0].n_sites
    if len(blocks) != 2 * n:
        raise ValueError(f"expected {2 * n} momentum blocks, got {len(blocks)}")
    stack = np.stack([b.amplitudes for b in sorted(blocks, key=lambda b: b.m)])
    phase = _phase_table(n)
    amps = np.einsum("mjr,mr->jr", phase.conj(), stack) / math.sqrt(2 * n)
    return ClusterState(amps, n, boundary)


@numba.njit(cache=True)
def hk_kernel(psi, t, out, params):
    hop0, omega, u = params
    a = hop0 * np.cos(omega * t)
    m = psi.size
    for i in range(m):
        h = u[i] * psi[i]
        if i > 0:
            h += a * psi[i - 1]
        if i + 1 < m:
            h += a * psi[i + 1]
        out[i] = h


def hk_kernel_params(k: float, p: LatticeParams, d: DriveParams, conv: HoppingConvention) -> tuple:
    hop0 = 2.0 * conv.scale * d.omega0 * math.sin((math.pi - k) / 2)
    return (hop0, float(d.omega), skew_potential_table(p).values)


def apply_hk(
    b: MomentumBlockState,
    t: float,
    p: LatticeParams,
    d: DriveParams,
    conv: HoppingConvention = DEFAULT_CONVENTION,
) -> MomentumBlockState:
    out = np.empty_like(b.amplitudes)
    hk_kernel(b.amplitudes, t, out, hk_kernel_params(b.k, p, d, conv))
    return MomentumBlockState(b.m, out, b.n_sites)


def evolve_block(
    b: MomentumBlockState,
    p: LatticeParams,
    d: DriveParams,
    ip: IntegratorParams,
    conv: HoppingConvention = DEFAULT_CONVENTION,
    observer=None,
) -> MomentumBlockState:
    final = rk4_evolve_jit(hk_kernel, hk_kernel_params(b.k, p, d, conv), b.amplitudes, ip, observer)
    return MomentumBlockState(b.m, final, b.n_sites)


# -- Wannier-Stark states --------------------------------------------------


def bessel_argument(k: float, t: float, d: DriveParams, f: float, conv: HoppingConvention = DEFAULT_CONVENTION) -> float:
    """z_k = -2 J_k(t) / F for the block hopping J_k(t) = 2 scale Omega(t) cos(k/2)."""
    hop = 2.0 * conv.scale * drive_amplitude(d, t) * math.sin((math.pi - k) / 2)
    return -2.0 * hop / f


def wannier_stark_state(
    n: int,
    k: float,
    t: float,
    p: LatticeParams,
    d: DriveParams,
    conv: HoppingConvention = DEFAULT_CONVENTION,
    f: float | None = None,
) -> np.ndarray:
    """Rung-``n`` Wannier-Stark profile J_{r-n}(z_k) over r = 1..N-1, truncated and normalised."""
    if f is None:
        f = resonant_frequency(p)
    z = bessel_argument(k, t, d, f, conv)
    if n - 3 * abs(z) < 2:
        raise ValueError(f"rung n={n} too close to the r=1 edge for |z|={abs(z):.3g} (need n - 3|z| >= 2)")
    if n > p.n_sites - 1:
        raise ValueError(f"rung n={n} outside 1..{p.n_sites - 1}")
    r = np.arange(1, p.n_sites)
    amps = jv(r - n, z)
    amps[np.abs(amps) < BESSEL_TRUNCATION] = 0.0
    return amps / np.linalg.norm(amps)


# -- embedding into the full model ----------------------------------------


def cluster_basis_index(n_sites: int, j1: int, r: int) -> int:
    block = (1 << r) - 1
    start = j1 - 1
    full = (1 << n_sites) - 1
    return ((block << start) | (block >> (n_sites - start))) & full


def embed_in_full(s: ClusterState) -> FullState:
    """Place each cluster amplitude on its contiguous-block bitstring."""
    n = s.n_sites
    check_capacity(n)
    amps = np.zeros(2**n, dtype=np.complex128)
    mask = valid_mask(n, s.boundary)
    for j1 in range(1, n + 1):
        for r in range(1, n):
            if mask[j1 - 1, r - 1]:
                amps[cluster_basis_index(n, j1, r)] = s.amplitudes[j1 - 1, r - 1]
    return FullState(amps, n)


def project_from_full(full: FullState, boundary: Boundary = Boundary.PERIODIC) -> ClusterState:
    n = full.n_sites
    amps = np.zeros((n, n - 1), dtype=np.complex128)
    mask = valid_mask(n, boundary)
    for j1 in range(1, n + 1):
        for r in range(1, n):
            if mask[j1 - 1, r - 1]:
                amps[j1 - 1, r - 1] = full.amplitudes[cluster_basis_index(n, j1, r)]
    return ClusterState(amps, n, boundary)
