"""Run a configured experiment, write CSV/JSON outputs, cross-validate models."""

from __future__ import annotations

import json
import math
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import amplitude_eom as eom
from . import cluster_model as cm
from . import full_model as fm
from .analytics import (
    TimeSeries,
    autocorrelation,
    boundary_occupancy,
    crossing_time,
    density_from_grid,
    find_revival_period,
    fit_power_law,
)
from .config import ClusterInit, ExperimentConfig, GaussianInit, GroundInit, RungInit
from .errors import ConfigError, NumericalAbort
from .integrate import EnergyGauge, rk4_evolve_jit
from .lattice import resonant_frequency

CSV_FORMAT = "%.17g"


@dataclass
class RunResult:
    manifest: dict
    series: TimeSeries
    fits: dict
    final_state: np.ndarray | None = None
    output_dir: Path | None = None


def code_version() -> str:
    try:
        rev = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if rev.returncode == 0 and rev.stdout.strip():
            return f"{__version__}+g{rev.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


# -- initial states ----------------------------------------------------------


def initial_state(cfg: ExperimentConfig) -> np.ndarray:
    p, init = cfg.lattice, cfg.initial_state
    if cfg.model == "amplitude_ladder":
        return _initial_ladder(cfg).rungs
    if isinstance(init, GroundInit):
        return fm.ground_state_full(p).amplitudes
    if isinstance(init, ClusterInit):
        state = cm.build_cluster(p, init.j1, init.j2)
    elif isinstance(init, GaussianInit):
        state = cm.build_gaussian_cluster(p, init.c0, init.k0, init.sigma, init.r0)
    else:
        raise ConfigError(f"initial state {init.kind!r} unsupported for model {cfg.model!r}")
    if cfg.model == "full":
        return cm.embed_in_full(state).amplitudes
    return state.amplitudes


def _initial_ladder(cfg: ExperimentConfig) -> eom.AmplitudeLadder:
    init = cfg.initial_state
    if not isinstance(init, RungInit):
        raise ConfigError("amplitude_ladder model needs a rung initial state")
    f = resonant_frequency(cfg.lattice)
    conv = cfg.hopping_convention
    if init.width == 0:
        return eom.single_rung_ladder(init.m0, init.k, f, cfg.drive, cfg.integrator.t_end, conv)
    lo, hi = eom.ladder_window(init.m0, cfg.drive.omega0, cfg.integrator.t_end)
    return eom.gaussian_rung_ladder(init.m0, init.width, init.k, f, lo, hi, conv)


# -- main driver -------------------------------------------------------------


class _Recorder:
    """Observer collecting densities, autocorrelation and norm drift per sample."""

    def __init__(self, cfg: ExperimentConfig, psi0: np.ndarray, profile_of, monitor_boundary: bool):
        self.cfg = cfg
        self.psi0 = psi0.copy()
        self.norm0 = float(np.vdot(psi0, psi0).real)
        self.profile_of = profile_of
        self.monitor = monitor_boundary
        width = profile_of(psi0).size
        self.series = TimeSeries(width)
        self.max_drift = 0.0
        self.max_boundary = 0.0
        self.warning = None

    def __call__(self, step, t, psi):
        profile = self.profile_of(psi)
        drift = abs(float(np.vdot(psi, psi).real) - self.norm0)
        self.max_drift = max(self.max_drift, drift)
        self.series.record(t, profile, autocorrelation(self.psi0, psi), drift)
        if self.monitor:
            occ = boundary_occupancy(profile)
            self.max_boundary = max(self.max_boundary, occ)
            if self.warning is None and occ > self.cfg.analysis.boundary_warn:
                self.warning = f"boundary occupancy first exceeded {self.cfg.analysis.boundary_warn:.1e} at t={t:.6g}"
            tol = self.cfg.analysis.boundary_tol
            if occ > tol:
                raise NumericalAbort(
                    f"boundary occupancy {occ:.3e} exceeds {tol:.1e} at t={t:.6g}; "
                    "the packet reached the lattice seam",
                    t=t,
                    value=occ,
                )


def _full_profile(n):
    def profile(psi):
        return fm.rydberg_density_full(fm.FullState(psi, n))

    return profile


def _ladder_profile(psi):
    return np.abs(psi) ** 2


def run_experiment(
    cfg: ExperimentConfig,
    out_dir: str | Path | None = None,
    threads: int | None = None,
    monitor_boundary: bool = True,
) -> RunResult:
    """Evolve ``cfg``; write density.csv, scalars.csv, fits.json and manifest.json when ``out_dir`` is set.

    For the cluster model the seam sites 1 and N are watched: once the
    packet reaches them the absolute-coordinate variance stops being
    meaningful and the run aborts. A :class:`NumericalAbort` still writes
    the partial outputs (flagged in the manifest) before propagating, and
    carries the partial :class:`RunResult` as ``.result``.
    """
    if threads is not None:
        _set_threads(threads)
    out_dir = Path(out_dir) if out_dir is not None else (Path(cfg.output_dir) if cfg.output_dir else None)
    p, d, ip = cfg.lattice, cfg.drive, cfg.integrator
    psi0 = initial_state(cfg)

    gauge = None
    if cfg.model == "full":
        recorder = _Recorder(cfg, psi0, _full_profile(p.n_sites), monitor_boundary=False)
        kernel, params, gauge = _full_setup(cfg)
    elif cfg.model == "cluster":
        recorder = _Recorder(cfg, psi0, density_from_grid, monitor_boundary=monitor_boundary)
        kernel, params, gauge = _cluster_setup(cfg)
    else:
        ladder = _initial_ladder(cfg)
        recorder = _Recorder(cfg, psi0, _ladder_profile, monitor_boundary=False)
        kernel, params = eom.generator(ladder, d, cfg.eom_variant)

    status, abort = "ok", None
    final = None
    start = time.perf_counter()
    try:
        final = rk4_evolve_jit(kernel, params, psi0, ip, recorder, rebase=gauge)
        if gauge is not None:
            final = gauge.restore(final, ip.t_end)
    except NumericalAbort as exc:
        status, abort = "aborted", exc
    wall = time.perf_counter() - start

    fits = analyse(cfg, recorder.series)
    manifest = {
        "config": cfg.to_dict(),
        "code_version": code_version(),
        "wall_time_s": wall,
        "status": status,
        "abort_reason": str(abort) if abort else None,
        "partial_output": abort is not None,
        "n_samples": len(recorder.series.times),
        "norm_drift_max": recorder.max_drift,
        "boundary_occupancy_max": recorder.max_boundary if recorder.monitor else None,
        "boundary_warning": recorder.warning,
        "energy_gauge": gauge is not None,
        "hopping_convention": cfg.hopping_convention.value,
        "nonstandard_dt": cfg.nonstandard_dt,
        "overrides": list(cfg.overrides),
        "threads": threads,
        "fits": fits,
    }
    result = RunResult(manifest, recorder.series, fits, final, out_dir)
    if out_dir is not None:
        write_outputs(result, cfg, out_dir)
    if abort is not None:
        abort.result = result
        raise abort
    return result


def _full_setup(cfg: ExperimentConfig):
    p = cfg.lattice
    energies = fm.build_diagonal(p).energies
    work = energies.copy()
    gauge = EnergyGauge(energies, work, lambda psi: psi.real**2 + psi.imag**2)
    return fm.full_kernel, fm.kernel_params(p, cfg.drive, fm.DiagonalInteraction(work)), gauge


def _cluster_setup(cfg: ExperimentConfig):
    a, omega, n, wrap, u = cm.cluster_kernel_params(cfg.lattice, cfg.drive, cfg.hopping_convention)
    work = u.copy()
    gauge = EnergyGauge(u, work, lambda psi: (psi.real**2 + psi.imag**2).sum(axis=0))
    return cm.cluster_kernel, (a, omega, n, wrap, work), gauge


def _set_threads(threads: int) -> None:
    import numba

    numba.set_num_threads(max(1, min(threads, numba.config.NUMBA_NUM_THREADS)))


def _ladder_sigma(series: TimeSeries) -> np.ndarray:
    m = np.arange(series.density.shape[1])
    out = []
    for w in series.profiles:
        w = w / w.sum()
        mean = np.dot(w, m)
        out.append(float(np.dot(w, (m - mean) ** 2)))
    return np.array(out)


def scalar_columns(cfg: ExperimentConfig, series: TimeSeries) -> dict:
    sigma = _ladder_sigma(series) if cfg.model == "amplitude_ladder" else series.sigma
    return {
        "t": series.t,
        "sigma": sigma,
        "delta_sigma": sigma - sigma[0],
        "total_density": series.total_density,
        "autocorr": np.asarray(series.autocorr),
    }


def analyse(cfg: ExperimentConfig, series: TimeSeries) -> dict:
    """Power-law fits per configured window, their crossing, and the revival peak."""
    if len(series.times) < 2:
        return {}
    cols = scalar_columns(cfg, series)
    t, ds = cols["t"], cols["delta_sigma"]
    fits: dict = {"windows": []}
    for window in cfg.analysis.fit_windows:
        entry = {"window": list(window)}
        if t[-1] < window[1]:
            entry["error"] = "run ended before the window closed"
        else:
            try:
                fit = fit_power_law(t, ds, window)
                entry.update(beta=fit.beta, intercept=fit.intercept, residual=fit.residual, n_samples=fit.n_samples)
            except ValueError as exc:
                entry["error"] = str(exc)
        fits["windows"].append(entry)
    good = [w for w in fits["windows"] if "beta" in w]
    if len(good) >= 2:
        from .analytics import PowerLawFit

        a, b = (PowerLawFit(w["beta"], w["intercept"], tuple(w["window"]), w["residual"], w["n_samples"]) for w in good[:2])
        fits["crossing_time"] = crossing_time(a, b)
    n0 = cols["total_density"][0]
    if n0 > 0:
        fits["total_density_relative_max_deviation"] = float(np.max(np.abs(cols["total_density"] / n0 - 1)))
        late = t >= t[-1] / 2
        if late.sum() >= 2:
            slope = np.polyfit(t[late], cols["total_density"][late], 1)[0]
            fits["total_density_late_slope"] = float(slope)
    rw = cfg.analysis.revival_window
    if rw is not None:
        if t[-1] < rw[1]:
            fits["revival"] = {"window": list(rw), "error": "run ended before the window closed"}
        else:
            peak = find_revival_period(t, cols["autocorr"], rw)
            fits["revival"] = {"window": list(rw), "t": peak.t, "value": peak.value, "at_edge": peak.at_edge}
    f = resonant_frequency(cfg.lattice)
    fits["resonant_frequency"] = f
    fits["delta_omega"] = cfg.drive.omega - f
    dw = cfg.drive.omega - f
    fits["bloch_period"] = 2 * math.pi / abs(dw) if dw != 0 else None
    return fits


def write_outputs(result: RunResult, cfg: ExperimentConfig, out_dir: Path) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ladder_offset = _initial_ladder(cfg).m_min if cfg.model == "amplitude_ladder" else None
    series = result.series
    dens = series.density
    if ladder_offset is None:
        labels = [f"site_{j}" for j in range(1, dens.shape[1] + 1)]
    else:
        labels = [f"rung_{m}" for m in range(ladder_offset, ladder_offset + dens.shape[1])]
    table = np.column_stack([series.t, dens]) if len(series.times) else np.zeros((0, dens.shape[1] + 1))
    np.savetxt(out_dir / "density.csv", table, delimiter=",", header=",".join(["t"] + labels), comments="", fmt=CSV_FORMAT)

    if len(series.times):
        cols = scalar_columns(cfg, series)
        scal = np.column_stack([cols[k] for k in ("t", "sigma", "delta_sigma", "total_density", "autocorr")])
    else:
        scal = np.zeros((0, 5))
    np.savetxt(out_dir / "scalars.csv", scal, delimiter=",", header="t,sigma,delta_sigma,total_density,autocorr", comments="", fmt=CSV_FORMAT)
    (out_dir / "fits.json").write_text(json.dumps(result.fits, indent=2, default=_json_default))
    (out_dir / "manifest.json").write_text(json.dumps(result.manifest, indent=2, default=_json_default))


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


# -- cross-validation ---------------------------------------------------------


@dataclass
class CrossValidationReport:
    """Full vs cluster comparison.

    ``leakage_t`` is the full-model weight outside the single-cluster
    subspace per sample. It carries a fast micromotion component from
    dressing of unexcited atoms; sampled at whole drive periods (the
    ``stroboscopic`` mask) that component vanishes.
    """

    times: np.ndarray
    discrepancy_t: np.ndarray  # max over sites, per sample
    leakage_t: np.ndarray
    stroboscopic: np.ndarray  # bool mask of samples at t = n 2 pi / omega
    details: dict = field(default_factory=dict)

    @property
    def max_discrepancy(self) -> float:
        return float(self.discrepancy_t.max())

    @property
    def max_leakage(self) -> float:
        return float(self.leakage_t.max())

    @property
    def max_discrepancy_stroboscopic(self) -> float:
        return float(self.discrepancy_t[self.stroboscopic].max())

    @property
    def max_leakage_stroboscopic(self) -> float:
        return float(self.leakage_t[self.stroboscopic].max())

    def summary(self) -> dict:
        return {
            "max_discrepancy": self.max_discrepancy,
            "max_discrepancy_stroboscopic": self.max_discrepancy_stroboscopic,
            "max_leakage_stroboscopic": self.max_leakage_stroboscopic,
            "max_leakage_instantaneous": self.max_leakage,
            **self.details,
        }

    def to_dict(self) -> dict:
        return {
            **self.summary(),
            "times": self.times.tolist(),
            "discrepancy_t": self.discrepancy_t.tolist(),
            "leakage_t": self.leakage_t.tolist(),
            "stroboscopic": self.stroboscopic.tolist(),
        }


SAMPLES_PER_DRIVE_PERIOD = 8


def cross_validation_pair(
    n_sites: int = 14,
    j1: int = 6,
    j2: int = 9,
    omega: float = 5.0867,
    omega0: float = 1.0,
    v0: float = 5.0,
    t_end: float = 3.0,
    dt: float = 4e-4,
) -> tuple[ExperimentConfig, ExperimentConfig]:
    """Matching full/cluster configs started from the same single cluster.

    The step is shrunk so a drive period holds a whole number of steps,
    and the run covers ``t_end`` rounded up to whole periods.
    """
    from .config import from_dict

    period = 2 * math.pi / omega
    steps_per_period = SAMPLES_PER_DRIVE_PERIOD * math.ceil(period / dt / SAMPLES_PER_DRIVE_PERIOD)
    n_periods = max(1, math.ceil(t_end / period - 1e-9))
    base = {
        "lattice": {"n_sites": n_sites, "v0": v0, "alpha": 6, "boundary": "periodic"},
        "drive": {"omega0": omega0, "omega": omega},
        "integrator": {
            "dt": period / steps_per_period,
            "t_end": n_periods * period,
            "sample_stride": steps_per_period // SAMPLES_PER_DRIVE_PERIOD,
        },
        "initial_state": {"kind": "cluster", "j1": j1, "j2": j2},
        "hopping_convention": "projector_derived",
    }
    full = from_dict(dict(base, name="xval_full", model="full"))
    cluster = from_dict(dict(base, name="xval_cluster", model="cluster"))
    return full, cluster


def cross_validate(full_cfg: ExperimentConfig, cluster_cfg: ExperimentConfig) -> CrossValidationReport:
    """Evolve both models from one cluster state and compare densities sample by sample.

    Leakage is the full-model weight outside the single-cluster subspace.
    """
    if full_cfg.model != "full" or cluster_cfg.model != "cluster":
        raise ConfigError("cross_validate needs a (full, cluster) config pair")
    if cluster_cfg.hopping_convention is not cm.HoppingConvention.PROJECTOR_DERIVED:
        raise ConfigError("cross-validation requires the projector_derived hopping convention on the cluster side")
    if full_cfg.lattice.n_sites > 16:
        raise ConfigError("cross-validation is limited to N <= 16 on the full side")
    for attr in ("lattice", "drive", "integrator", "initial_state"):
        if getattr(full_cfg, attr) != getattr(cluster_cfg, attr):
            raise ConfigError(f"full and cluster configs differ in {attr}")
    p = full_cfg.lattice
    subspace = fm.cluster_subspace_indices(p)

    leak = []

    def track_leak(step, t, psi):
        leak.append(1.0 - float(np.sum(np.abs(psi[subspace]) ** 2)))

    full_run = _run_with_extra(full_cfg, track_leak)
    cl_run = run_experiment(cluster_cfg, monitor_boundary=False)
    a, b = full_run.series.density, cl_run.series.density
    times = full_run.series.t
    phase = times * full_cfg.drive.omega / (2 * math.pi)
    return CrossValidationReport(
        times=times,
        discrepancy_t=np.max(np.abs(a - b), axis=1),
        leakage_t=np.array(leak),
        stroboscopic=np.abs(phase - np.round(phase)) < 1e-6,
        details={"n_sites": p.n_sites, "omega": full_cfg.drive.omega, "hopping_convention": cluster_cfg.hopping_convention.value},
    )


def _run_with_extra(cfg: ExperimentConfig, extra_observer) -> RunResult:
    p = cfg.lattice
    psi0 = initial_state(cfg)
    recorder = _Recorder(cfg, psi0, _full_profile(p.n_sites), monitor_boundary=False)

    def observe(step, t, psi):
        recorder(step, t, psi)
        extra_observer(step, t, psi)

    kernel, params, gauge = _full_setup(cfg)
    final = gauge.restore(rk4_evolve_jit(kernel, params, psi0, cfg.integrator, observe, rebase=gauge), cfg.integrator.t_end)
    return RunResult({}, recorder.series, {}, final)
