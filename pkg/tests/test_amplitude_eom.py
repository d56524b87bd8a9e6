import math

import numpy as np
import pytest
from scipy.linalg import expm
from scipy.special import jv

from rydcluster.amplitude_eom import (
    AmplitudeLadder,
    eom_rhs_detuned,
    eom_rhs_full,
    eom_rhs_resonant,
    eom_rhs_rwa,
    evolve_ladder,
    gaussian_rung_ladder,
    ladder_moments,
    ladder_window,
    resonant_bessel_amplitudes,
    single_rung_ladder,
)
from rydcluster.analytics import find_revival_period, fit_power_law
from rydcluster.cluster_model import HoppingConvention, MomentumBlockState, evolve_block, wannier_stark_state
from rydcluster.lattice import DriveParams, IntegratorParams, LatticeParams, resonant_frequency

F = resonant_frequency(LatticeParams(100))
VERB = HoppingConvention.PAPER_VERBATIM
PROJ = HoppingConvention.PROJECTOR_DERIVED


def random_ladder(k=0.3, size=40, seed=0, conv=VERB):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=size) + 1j * rng.normal(size=size)
    return AmplitudeLadder(k, c / np.linalg.norm(c), 10, F, conv)


def trajectory(ladder, d, ip, variant):
    times, states = [], []
    evolve_ladder(ladder, d, ip, variant, lambda s, t, c: (times.append(t), states.append(c.copy())))
    return np.array(times), np.array(states)


def test_full_rhs_vanishes_at_t0_and_k_pi():
    d = DriveParams(1.0, F)
    assert np.all(eom_rhs_full(random_ladder(), 0.0, d) == 0)
    frozen = random_ladder(k=math.pi)
    for t in (0.1, 1.3, 7.0):
        assert np.abs(eom_rhs_full(frozen, t, d)).max() < 1e-15


def test_rwa_at_resonance_equals_resonant():
    l = random_ladder()
    d = DriveParams(1.0, F)
    for t in (0.0, 2.0, 13.0):
        assert np.array_equal(eom_rhs_rwa(l, t, d), eom_rhs_resonant(l, t, d))
        assert np.allclose(eom_rhs_detuned(l, t, d), eom_rhs_resonant(l, t, d), atol=1e-15)


def test_detuned_tends_to_resonant():
    l = random_ladder()
    t = 3.0
    ref = eom_rhs_resonant(l, t, DriveParams(1.0, F))
    errs = [np.abs(eom_rhs_detuned(l, t, DriveParams(1.0, F + dw)) - ref).max() for dw in (1e-2, 1e-3, 1e-4)]
    assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-3


@pytest.mark.parametrize("rhs", [eom_rhs_full, eom_rhs_rwa, eom_rhs_resonant, eom_rhs_detuned])
def test_generators_are_norm_preserving(rhs):
    d = DriveParams(1.0, F + 0.05)
    for seed in range(5):
        l = random_ladder(seed=seed)
        for t in (0.0, 0.7, 41.3):
            dn = 2 * np.vdot(l.rungs, rhs(l, t, d)).real
            assert abs(dn) < 1e-12


def test_rwa_rejects_far_detuning():
    with pytest.raises(ValueError):
        eom_rhs_rwa(random_ladder(), 0.0, DriveParams(1.0, 2 * F))


@pytest.mark.parametrize("variant", ["full", "rwa", "resonant", "detuned"])
def test_norm_drift_per_unit_time(variant):
    d = DriveParams(1.0, F + 0.05)
    l = single_rung_ladder(60, 0.0, F, d, 5.0, VERB)
    t, c = trajectory(l, d, IntegratorParams(1e-4, 5.0, 1000), variant)
    drift = np.abs(np.sum(np.abs(c) ** 2, axis=1) - 1)
    assert drift.max() < 1e-6 * 5.0


@pytest.mark.parametrize("k", [0.0, math.pi / 2])
def test_resonant_bessel_closed_form(k):
    d = DriveParams(1.0, F)
    l = single_rung_ladder(100, k, F, d, 20.0, VERB)
    t, c = trajectory(l, d, IntegratorParams(1e-3, 20.0, 500), "resonant")
    hop = d.omega0 * math.cos(k / 2)
    err = max(np.abs(ci - resonant_bessel_amplitudes(l.m, 100, hop, ti)).max() for ti, ci in zip(t, c))
    assert err < 1e-6


def test_resonant_k_pi_frozen():
    d = DriveParams(1.0, F)
    l = gaussian_rung_ladder(50, 3.0, math.pi, F, 10, 90, VERB)
    out = evolve_ladder(l, d, IntegratorParams(1e-3, 5.0, 5000), "resonant")
    assert np.array_equal(out.rungs, l.rungs)


def test_resonant_variance_is_ballistic():
    d = DriveParams(1.0, F)
    k = 0.6
    l = single_rung_ladder(100, k, F, d, 20.0, VERB)
    t, c = trajectory(l, d, IntegratorParams(1e-3, 20.0, 100), "resonant")
    var = np.array([ladder_moments(ci, l.m)[1] for ci in c])
    hop = math.cos(k / 2)
    assert np.allclose(var, 2 * hop**2 * t**2, rtol=1e-6, atol=1e-9)
    assert fit_power_law(t, var, (1.0, 20.0)).beta == pytest.approx(2.0, abs=0.02)


def test_gauge_transformed_twin():
    # C~_m = C_m exp(i m dw t) obeys a static chain a (C~_{m-1} + C~_{m+1}) - dw m C~_m
    dw = 0.05
    d = DriveParams(1.0, F + dw)
    l = gaussian_rung_ladder(70, 3.0, 0.0, F, 20, 120, VERB)
    a = l.hopping0(d) * d.omega / (2 * F)
    m = l.m
    h = np.diag(-dw * m.astype(float)) + a * (np.eye(m.size, k=1) + np.eye(m.size, k=-1))
    t, c = trajectory(l, d, IntegratorParams(1e-3, 40.0, 4000), "detuned")
    for ti, ci in zip(t, c):
        twin = expm(-1j * h * ti) @ l.rungs
        assert np.abs(ci * np.exp(1j * m * dw * ti) - twin).max() < 1e-8


def test_detuned_variance_revival():
    dw = 0.05
    d = DriveParams(1.0, F + dw)
    l = gaussian_rung_ladder(200, 3.0, 0.0, F, *ladder_window(200, 1.0, 25.0), VERB)
    t, c = trajectory(l, d, IntegratorParams(1e-3, 260.0, 100), "detuned")
    var = np.array([ladder_moments(ci, l.m)[1] for ci in c])
    period = 2 * math.pi / dw
    # the packet breathes back to its initial width once per Bloch period
    back = find_revival_period(t, -np.abs(var - var[0]), (100.0, 150.0))
    assert back.t == pytest.approx(period, abs=3.0)
    # first off-zero maximum of the variance autocorrelation
    x = var - var.mean()
    dt_s = t[1] - t[0]
    lags = np.arange(1, int(1.2 * period / dt_s) + 2)
    ac = np.array([np.dot(x[:-lag], x[lag:]) / (len(x) - lag) for lag in lags])
    peak = find_revival_period(lags * dt_s, ac, (0.6 * period, 1.2 * period))
    assert not peak.at_edge
    assert peak.t == pytest.approx(period, rel=0.02)


def _rwa_deviation(omega0):
    d = DriveParams(omega0, F + 0.05)
    period = 2 * math.pi / 0.05
    l = single_rung_ladder(300, 0.0, F, d, period, VERB)
    ip = IntegratorParams(1e-3, period, 100)
    _, full = trajectory(l, d, ip, "full")
    _, rwa = trajectory(l, d, ip, "rwa")
    return np.abs(full - rwa).max()


def test_rwa_error_scales_with_drive_amplitude():
    # over one Bloch period the deviation is dominated by micromotion of order Omega0 / omega
    big, small = _rwa_deviation(1.0), _rwa_deviation(0.5)
    assert small < big
    assert small / big == pytest.approx(0.5, abs=0.05)


def _resonant_full_and_rwa(conv, steps_per_period=2000, stride=20):
    d = DriveParams(1.0, F)
    l = single_rung_ladder(60, 0.0, F, d, 10.0, conv)
    period = 2 * math.pi / d.omega
    ip = IntegratorParams(period / steps_per_period, period * math.ceil(10 / period), stride)
    t, full = trajectory(l, d, ip, "full")
    _, rwa = trajectory(l, d, ip, "rwa")
    return t, np.abs(full) ** 2, np.abs(rwa) ** 2, l.hopping0(d)


@pytest.mark.parametrize("conv", [PROJ, VERB])
def test_rwa_tracks_full_stroboscopically(conv):
    # one sample per drive period removes the micromotion entirely
    t, pf, pr, _ = _resonant_full_and_rwa(conv)
    per_period = 2000 // 20
    assert np.abs(pf[::per_period] - pr[::per_period]).max() < 1e-2


def test_rwa_running_mean_bias_is_micromotion_sized():
    # a running mean of |C|^2 keeps the |micromotion|^2 term, of order (J0 / F)^2
    t, pf, pr, j0 = _resonant_full_and_rwa(PROJ)
    window = 2000 // 20
    kernel = np.ones(window) / window
    avg_f = np.apply_along_axis(lambda x: np.convolve(x, kernel, mode="valid"), 0, pf)
    avg_r = np.apply_along_axis(lambda x: np.convolve(x, kernel, mode="valid"), 0, pr)
    assert np.abs(avg_f - avg_r).max() < 2 * (j0 / F) ** 2 * 3


@pytest.mark.parametrize("conv", [PROJ, VERB])
def test_full_eom_matches_block_evolution(conv):
    # block dynamics projected on instantaneous Wannier-Stark states against the rung equations
    p = LatticeParams(100)
    d = DriveParams(1.0, F)
    k, n0 = 0.4, 50
    psi0 = wannier_stark_state(n0, k, 0.0, p, d, conv)
    m_block = int(round(k * p.n_sites / (2 * math.pi)))
    k = 2 * math.pi * m_block / p.n_sites if m_block else k
    psi0 = wannier_stark_state(n0, k, 0.0, p, d, conv)
    block = MomentumBlockState(m_block, psi0, p.n_sites)
    block_t = {}
    evolve_block(block, p, d, IntegratorParams(1e-4, 1.0, 1000), conv,
                 observer=lambda s, t, psi: block_t.__setitem__(round(t, 9), psi.copy()))
    ladder = AmplitudeLadder(k, np.eye(1, 61, 30)[0], n0 - 30, F, conv)
    rungs_t = {}
    evolve_ladder(ladder, d, IntegratorParams(1e-4, 1.0, 1000), "full",
                  lambda s, t, c: rungs_t.__setitem__(round(t, 9), c.copy()))
    worst = 0.0
    for t, psi in block_t.items():
        proj = np.array([np.vdot(wannier_stark_state(m, k, t, p, d, conv), psi) for m in ladder.m])
        worst = max(worst, np.abs(np.abs(proj) ** 2 - np.abs(rungs_t[t]) ** 2).max())
    assert worst < 1e-4


def test_ladder_validation_and_window():
    with pytest.raises(ValueError):
        AmplitudeLadder(0.0, np.ones(3), 1, F)
    assert ladder_window(100, 1.0, 20.0) == (2, 200)
    assert ladder_window(200, 1.0, 20.0) == (100, 300)
    assert ladder_window(10, 1.0, 20.0)[0] == 2
    l = gaussian_rung_ladder(50, 2.0, 0.0, F, 30, 70)
    assert l.populations().sum() == pytest.approx(1.0)
    assert l.m_max == 70


def test_bessel_tails_negligible_at_window_edge():
    lo, hi = ladder_window(100, 1.0, 20.0)
    assert abs(jv(hi - 100, 2 * 20.0)) < 1e-10
