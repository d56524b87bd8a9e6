import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_state
from rydcluster.errors import CapacityError
from rydcluster.full_model import (
    FullState,
    apply_full_hamiltonian,
    build_cluster_full,
    build_diagonal,
    check_capacity,
    cluster_subspace_indices,
    evolve_full,
    ground_state_full,
    max_full_sites,
    rydberg_density_full,
)
from rydcluster.lattice import DriveParams, IntegratorParams, LatticeParams
from rydcluster.oracles import brute_force_full_evolve, dense_full_hamiltonian


def test_diagonal_examples():
    p = LatticeParams(3)
    e = build_diagonal(p).energies
    assert e[0b011] == 5.0  # sites 1, 2 excited
    assert e[0] == 0.0
    assert e[0b111] == 15.0
    assert np.all(e >= 0)


def test_single_atom_apply():
    p = LatticeParams(1)
    out = apply_full_hamiltonian(ground_state_full(p), 0.0, p, DriveParams(1.0, 5.0), build_diagonal(p))
    assert np.allclose(out.amplitudes, [0.0, 0.5])


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
@pytest.mark.parametrize("boundary", ["periodic", "open"])
def test_apply_matches_dense_pauli_matrix(n, boundary, rng):
    p = LatticeParams(n, boundary=boundary)
    d = DriveParams(1.3, 5.0867)
    diag = build_diagonal(p)
    for t in (0.0, 0.37, 2.1):
        h = dense_full_hamiltonian(p, d, t)
        psi = random_state(rng, 2**n)
        out = apply_full_hamiltonian(FullState(psi, n), t, p, d, diag).amplitudes
        assert np.abs(out - h @ psi).max() < 1e-12


def test_hermiticity_random_triples(rng):
    p = LatticeParams(10)
    d = DriveParams(1.0, 5.0867)
    diag = build_diagonal(p)
    for _ in range(20):
        phi, psi = (FullState(random_state(rng, 2**10), 10) for _ in range(2))
        t = rng.uniform(0, 50)
        lhs = np.vdot(phi.amplitudes, apply_full_hamiltonian(psi, t, p, d, diag).amplitudes)
        rhs = np.conj(np.vdot(psi.amplitudes, apply_full_hamiltonian(phi, t, p, d, diag).amplitudes))
        assert abs(lhs - rhs) < 1e-12


def test_build_cluster_full_examples():
    p = LatticeParams(20)
    s = build_cluster_full(p, 9, 12)
    (idx,) = np.flatnonzero(s.amplitudes)
    assert idx == sum(1 << (j - 1) for j in range(9, 13))
    dens = rydberg_density_full(s)
    assert np.array_equal(dens, [(9 <= j <= 12) * 1.0 for j in range(1, 21)])
    single = rydberg_density_full(build_cluster_full(p, 5, 5))
    assert single.sum() == 1.0 and single[4] == 1.0


def test_uniform_superposition_density():
    n = 7
    s = FullState(np.full(2**n, 2 ** (-n / 2)), n)
    assert np.allclose(rydberg_density_full(s), 0.5)


@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_density_bounds(n, seed):
    psi = random_state(np.random.default_rng(seed), 2**n)
    dens = rydberg_density_full(FullState(psi, n))
    assert np.all((dens >= -1e-15) & (dens <= 1 + 1e-15))
    assert 0 <= dens.sum() <= n + 1e-12


@pytest.mark.parametrize("n", [3, 4, 6])
def test_evolution_matches_dense_rk4(n, rng):
    p = LatticeParams(n)
    d = DriveParams(1.0, 5.0867)
    psi0 = FullState(random_state(rng, 2**n), n)
    ref = brute_force_full_evolve(p, d, psi0, 1.0, dt=1e-3)
    out = evolve_full(psi0, p, d, IntegratorParams(1e-3, 1.0, 1000))
    assert np.abs(out.amplitudes - ref.amplitudes).max() < 1e-9


def test_norm_conserved_at_standard_step():
    p = LatticeParams(12)
    d = DriveParams(1.0, 5.0867)
    drift = []
    s0 = build_cluster_full(p, 5, 8)
    evolve_full(s0, p, d, IntegratorParams(4e-4, 2.0, 500), lambda k, t, psi: drift.append(abs(np.vdot(psi, psi).real - 1)))
    assert max(drift) < 1e-6


def _max_density(p, d, t_end):
    worst = []
    n = p.n_sites
    evolve_full(
        ground_state_full(p), p, d, IntegratorParams(4e-4, t_end, 5),
        lambda k, t, psi: worst.append(rydberg_density_full(FullState(psi, n)).max()),
    )
    return max(worst)


@pytest.mark.parametrize("n", [1, 5])
def test_far_field_freezing(n):
    # isolated (non-interacting) atoms never exceed the single-atom maximum sin^2(Omega0 / 2 omega)
    p = LatticeParams(n, v0=1e-300, boundary="open")
    d = DriveParams(1.0, 5.0867)
    assert _max_density(p, d, 10.0) <= math.sin(1.0 / (2 * 5.0867)) ** 2 + 1e-6


def test_interacting_ground_state_stays_dressed():
    # interactions add a second-order correction of about 12 % on top of the free bound
    p = LatticeParams(8, boundary="open")
    d = DriveParams(1.0, 5.0867)
    assert _max_density(p, d, 10.0) <= 1.15 * math.sin(1.0 / (2 * 5.0867)) ** 2


def test_capacity_guard(monkeypatch):
    assert max_full_sites() == 24
    with pytest.raises(CapacityError):
        check_capacity(25)
    monkeypatch.setenv("RYDCLUSTER_MAX_FULL_SITES", "10")
    with pytest.raises(CapacityError, match="RYDCLUSTER_MAX_FULL_SITES"):
        build_diagonal(LatticeParams(11))
    monkeypatch.setenv("RYDCLUSTER_MAX_FULL_SITES", "ten")
    with pytest.raises(CapacityError):
        max_full_sites()


def test_cluster_subspace_counts():
    # N (N - 1) contiguous blocks on a ring, sum_{r} (N - r + 1) on an open chain
    assert cluster_subspace_indices(LatticeParams(8)).size == 8 * 7
    assert cluster_subspace_indices(LatticeParams(8, boundary="open")).size == sum(8 - r + 1 for r in range(1, 8))
