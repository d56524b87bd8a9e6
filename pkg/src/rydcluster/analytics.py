"""Observables and post-processing: densities, spreading, power-law fits, revivals."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cluster_model import ClusterState


def rydberg_density_cluster(s: ClusterState) -> np.ndarray:
    """<n_j>, j = 1..N, for a cluster-basis state (wrapping clusters folded onto the ring)."""
    return density_from_grid(s.amplitudes)


def density_from_grid(amps: np.ndarray) -> np.ndarray:
    """Density from an (N, N-1) cluster amplitude grid.

    Each (j1, r) adds its weight on sites j1..j1+r-1: a +p / -p difference
    pair on a doubled axis, cumulative sum, then fold mod N.
    """
    n = amps.shape[0]
    p = amps.real**2 + amps.imag**2
    start = np.arange(n)[:, None]
    stop = start + np.arange(1, n)[None, :]
    diff = np.bincount(np.broadcast_to(start, p.shape).ravel(), weights=p.ravel(), minlength=2 * n + 1)
    diff -= np.bincount(stop.ravel(), weights=p.ravel(), minlength=2 * n + 1)
    profile = np.cumsum(diff)[: 2 * n]
    return profile[:n] + profile[n:]


def total_density(profile: np.ndarray) -> float:
    return float(np.sum(profile))


def density_variance(profile: np.ndarray) -> float:
    """sigma = sum j^2 n_j / N_tot - (sum j n_j / N_tot)^2 with absolute site labels j = 1..N."""
    profile = np.asarray(profile, dtype=float)
    norm = profile.sum()
    if not norm > 0:
        raise ValueError("density variance undefined for zero total density")
    w = profile / norm
    j = np.arange(1, profile.size + 1)
    mean = np.dot(w, j)
    # central form: no cancellation between two large sums
    return float(np.dot(w, (j - mean) ** 2))


def boundary_occupancy(profile: np.ndarray) -> float:
    """Largest density on the two seam sites 1 and N."""
    return float(max(profile[0], profile[-1]))


def autocorrelation(psi0: np.ndarray, psit: np.ndarray) -> float:
    """|<psi0|psit>|^2."""
    a = np.asarray(getattr(psi0, "amplitudes", psi0))
    b = np.asarray(getattr(psit, "amplitudes", psit))
    if a.shape != b.shape:
        raise ValueError(f"state shapes differ: {a.shape} vs {b.shape}")
    return float(abs(np.vdot(a, b)) ** 2)


@dataclass(frozen=True)
class PowerLawFit:
    beta: float
    intercept: float  # log prefactor
    window: tuple[float, float]
    residual: float  # RMS residual in log delta_sigma
    n_samples: int

    def __call__(self, t):
        return np.exp(self.intercept) * np.asarray(t) ** self.beta


MIN_FIT_SAMPLES = 10


def fit_power_law(t, y, window: tuple[float, float]) -> PowerLawFit:
    """Least-squares line through (log t, log y) for t in [t_lo, t_hi]."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    lo, hi = window
    if not lo < hi:
        raise ValueError(f"empty fit window {window}")
    sel = (t >= lo) & (t <= hi)
    if sel.sum() < MIN_FIT_SAMPLES:
        raise ValueError(f"fit window {window} holds {sel.sum()} samples, need {MIN_FIT_SAMPLES}")
    bad = np.flatnonzero(sel & ~(y > 0))
    if bad.size:
        i = bad[0]
        raise ValueError(f"nonpositive value {y[i]:.3g} at t={t[i]:.6g} (sample {i}) inside fit window")
    x, z = np.log(t[sel]), np.log(y[sel])
    design = np.column_stack([x, np.ones_like(x)])
    (beta, intercept), *_ = np.linalg.lstsq(design, z, rcond=None)
    resid = z - (beta * x + intercept)
    return PowerLawFit(float(beta), float(intercept), (float(lo), float(hi)), float(np.sqrt(np.mean(resid**2))), int(sel.sum()))


def crossing_time(early: PowerLawFit, late: PowerLawFit) -> float:
    """Time where two fitted power laws intersect on log-log axes."""
    if early.beta == late.beta:
        return float("nan")
    return float(np.exp((late.intercept - early.intercept) / (early.beta - late.beta)))


@dataclass(frozen=True)
class RevivalPeak:
    t: float
    value: float
    at_edge: bool


def find_revival_period(t, a, window: tuple[float, float]) -> RevivalPeak:
    """Maximum of ``a`` inside ``window``, refined by a parabola through three samples.

    ``at_edge`` flags a maximum sitting on the window boundary, where the
    refinement is unreliable.
    """
    t = np.asarray(t, dtype=float)
    a = np.asarray(a, dtype=float)
    lo, hi = window
    if lo < t[0] or hi > t[-1]:
        raise ValueError(f"window {window} outside sampled range [{t[0]}, {t[-1]}]")
    idx = np.flatnonzero((t >= lo) & (t <= hi))
    if idx.size < 3:
        raise ValueError(f"window {window} holds fewer than three samples")
    i = idx[np.argmax(a[idx])]
    if i == idx[0] or i == idx[-1]:
        return RevivalPeak(float(t[i]), float(a[i]), True)
    y0, y1, y2 = a[i - 1], a[i], a[i + 1]
    denom = y0 - 2 * y1 + y2
    h = 0.5 * (t[i + 1] - t[i - 1])
    shift = 0.0 if denom == 0 else 0.5 * (y0 - y2) / denom
    peak_t = t[i] + shift * h
    peak_v = y1 - 0.25 * (y0 - y2) * shift
    return RevivalPeak(float(peak_t), float(peak_v), False)


@dataclass
class TimeSeries:
    """Sampled observables; built incrementally by :meth:`record`."""

    n_sites: int
    times: list = field(default_factory=list)
    profiles: list = field(default_factory=list)
    autocorr: list = field(default_factory=list)
    norm_drift: list = field(default_factory=list)

    def record(self, t: float, profile: np.ndarray, autocorr: float = float("nan"), norm_drift: float = 0.0):
        if self.times and t <= self.times[-1]:
            raise ValueError(f"sample times must increase: {t} after {self.times[-1]}")
        self.times.append(float(t))
        self.profiles.append(np.asarray(profile, dtype=float))
        self.autocorr.append(float(autocorr))
        self.norm_drift.append(float(norm_drift))

    @property
    def t(self) -> np.ndarray:
        return np.asarray(self.times)

    @property
    def density(self) -> np.ndarray:
        return np.vstack(self.profiles) if self.profiles else np.zeros((0, self.n_sites))

    @property
    def total_density(self) -> np.ndarray:
        return self.density.sum(axis=1)

    @property
    def sigma(self) -> np.ndarray:
        return np.array([density_variance(p) if p.sum() > 0 else np.nan for p in self.profiles])

    @property
    def delta_sigma(self) -> np.ndarray:
        s = self.sigma
        return s - s[0]

    @property
    def boundary_occupancy(self) -> np.ndarray:
        return np.array([boundary_occupancy(p) for p in self.profiles])
