"""Experiment configuration: dataclasses, named presets and ``key=value`` overrides.

A config is a nested dict (the JSON file format) resolved into
:class:`ExperimentConfig`. Presets carry the published parameter sets;
``apply_overrides`` reassigns dotted keys such as ``drive.omega=5.2``.
"""

from __future__ import annotations

import copy
import json
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Union

from .cluster_model import HoppingConvention
from .errors import ConfigError, MalformedConfigError, UnknownPresetError
from .lattice import Boundary, DriveParams, IntegratorParams, LatticeParams

MODELS = ("full", "cluster", "amplitude_ladder")
EOM_VARIANTS = ("full", "rwa", "resonant", "detuned")

# record every 0.02 time units
SAMPLE_INTERVAL = 0.02


@dataclass(frozen=True)
class ClusterInit:
    j1: int
    j2: int
    kind: str = "cluster"


@dataclass(frozen=True)
class GaussianInit:
    c0: float
    k0: float
    sigma: float
    r0: int
    kind: str = "gaussian"


@dataclass(frozen=True)
class RungInit:
    m0: int
    k: float = 0.0
    width: float = 0.0  # 0 -> single rung, else Gaussian packet of this width
    kind: str = "rung"


@dataclass(frozen=True)
class GroundInit:
    kind: str = "ground"


InitialState = Union[ClusterInit, GaussianInit, RungInit, GroundInit]
_INIT_TYPES = {"cluster": ClusterInit, "gaussian": GaussianInit, "rung": RungInit, "ground": GroundInit}
_COMPATIBLE = {
    "full": {"cluster", "gaussian", "ground"},
    "cluster": {"cluster", "gaussian"},
    "amplitude_ladder": {"rung"},
}


@dataclass(frozen=True)
class AnalysisConfig:
    fit_windows: tuple = ()
    revival_window: tuple | None = None
    boundary_tol: float = 1e-6
    boundary_warn: float = 1e-6


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    model: str
    lattice: LatticeParams
    drive: DriveParams
    integrator: IntegratorParams
    initial_state: InitialState
    hopping_convention: HoppingConvention = HoppingConvention.PROJECTOR_DERIVED
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    eom_variant: str = "detuned"
    output_dir: str | None = None
    standard_dt: float | None = None
    long: bool = False
    overrides: tuple = ()

    @property
    def nonstandard_dt(self) -> bool:
        return self.standard_dt is not None and not math.isclose(self.integrator.dt, self.standard_dt, rel_tol=1e-12)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lattice"]["boundary"] = self.lattice.boundary.value
        d["hopping_convention"] = self.hopping_convention.value
        d["analysis"]["fit_windows"] = [list(w) for w in self.analysis.fit_windows]
        if self.analysis.revival_window is not None:
            d["analysis"]["revival_window"] = list(self.analysis.revival_window)
        d["overrides"] = list(self.overrides)
        return d


# -- presets ---------------------------------------------------------------

N_FIG1, N_FIG2 = 20, 100
OMEGA_RESONANT = 5.0867
OMEGA_FIG1_DETUNED = 5.2867
OMEGA_NEAR_RESONANT = 5.1367
DT_FULL = 4e-4
DT_CLUSTER = 2e-4


def _stride(dt: float) -> int:
    return int(round(SAMPLE_INTERVAL / dt))


def _base(name, model, n, omega, dt, t_end, init, **extra) -> dict:
    raw = {
        "name": name,
        "model": model,
        "lattice": {"n_sites": n, "v0": 5.0, "alpha": 6, "boundary": "periodic"},
        "drive": {"omega0": 1.0, "omega": omega},
        "integrator": {"dt": dt, "t_end": t_end, "sample_stride": _stride(dt)},
        "initial_state": init,
        "hopping_convention": "projector_derived",
        # a packet tail of weight eps on the seam shifts sigma by at most eps N^2,
        # so 1e-4 keeps the absolute-coordinate variance within ~1 site^2
        "analysis": {"fit_windows": [], "revival_window": None, "boundary_tol": 1e-4, "boundary_warn": 1e-6},
        "standard_dt": dt,
    }
    raw.update(extra)
    return raw


def _fig2_inits() -> dict:
    gauss = {"kind": "gaussian", "c0": 50.5, "sigma": 4.0, "r0": 10}
    return {
        "a": {"kind": "cluster", "j1": 46, "j2": 55},
        "b": dict(gauss, k0=0.0),
        "c": dict(gauss, k0=math.pi / 2),
        "d": dict(gauss, k0=math.pi),
    }


def _build_presets() -> dict:
    presets = {
        "fig1b": _base("fig1b", "full", N_FIG1, OMEGA_RESONANT, DT_FULL, 15.0,
                       {"kind": "cluster", "j1": 9, "j2": 12}, long=True),
        "fig1c": _base("fig1c", "full", N_FIG1, OMEGA_FIG1_DETUNED, DT_FULL, 15.0,
                       {"kind": "gaussian", "c0": 10.5, "k0": math.pi, "sigma": 2.0, "r0": 4}, long=True),
    }
    for tag, init in _fig2_inits().items():
        windows = [[2.0, 12.0], [25.0, 60.0]]
        if tag == "d":
            windows.append([2.0, 40.0])
        presets[f"fig2{tag}"] = _base(f"fig2{tag}", "cluster", N_FIG2, OMEGA_RESONANT, DT_CLUSTER, 60.0, init)
        presets[f"fig2{tag}"]["analysis"]["fit_windows"] = windows
        presets[f"fig4{tag}"] = _base(f"fig4{tag}", "cluster", N_FIG2, OMEGA_NEAR_RESONANT, DT_CLUSTER, 150.0, init)
        presets[f"fig4{tag}"]["analysis"]["revival_window"] = [100.0, 150.0]
    # reduced rung dynamics: resonant spreading and detuned Bloch-like breathing
    presets["ladder_resonant"] = _base("ladder_resonant", "amplitude_ladder", N_FIG2, OMEGA_RESONANT, 1e-3, 20.0,
                                       {"kind": "rung", "m0": 100, "k": 0.0, "width": 0.0},
                                       eom_variant="resonant", hopping_convention="paper_verbatim")
    presets["ladder_resonant"]["analysis"]["fit_windows"] = [[1.0, 20.0]]
    presets["ladder_bloch"] = _base("ladder_bloch", "amplitude_ladder", N_FIG2, OMEGA_NEAR_RESONANT, 1e-3, 260.0,
                                    {"kind": "rung", "m0": 200, "k": 0.0, "width": 3.0},
                                    eom_variant="detuned", hopping_convention="paper_verbatim")
    presets["ladder_bloch"]["analysis"]["revival_window"] = [100.0, 150.0]
    return presets


PRESETS = _build_presets()


def preset_names() -> list[str]:
    return sorted(PRESETS)


def preset_dict(name: str) -> dict:
    if name not in PRESETS:
        raise UnknownPresetError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return copy.deepcopy(PRESETS[name])


# -- overrides -------------------------------------------------------------

_PI_RE = re.compile(r"^\s*(-?\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?\s*$")


def parse_value(text: str) -> Any:
    """JSON literal, ``pi`` multiples (``pi/2``, ``-0.5*pi``) or a bare string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    m = _PI_RE.match(text)
    if m:
        coef = m.group(1)
        coef = -1.0 if coef == "-" else float(coef) if coef else 1.0
        den = float(m.group(2)) if m.group(2) else 1.0
        return coef * math.pi / den
    return text


def apply_overrides(raw: dict, assignments: list[str]) -> dict:
    raw = copy.deepcopy(raw)
    for item in assignments:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, text = item.split("=", 1)
        path = key.strip().split(".")
        node = raw
        for part in path[:-1]:
            if not isinstance(node.get(part), dict):
                raise ConfigError(f"override key {key!r}: {part!r} is not a section")
            node = node[part]
        if path[-1] not in node:
            raise ConfigError(f"override key {key!r} does not exist")
        node[path[-1]] = parse_value(text)
    raw["overrides"] = list(raw.get("overrides", [])) + list(assignments)
    return raw


# -- resolution ------------------------------------------------------------


def _section(raw: dict, name: str) -> dict:
    value = raw.get(name)
    if not isinstance(value, dict):
        raise ConfigError(f"config section {name!r} missing or not a mapping")
    return value


def from_dict(raw: dict) -> ExperimentConfig:
    """Validate and resolve a nested config dict."""
    try:
        model = raw["model"]
        if model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {model!r}")
        lat = _section(raw, "lattice")
        lattice = LatticeParams(lat["n_sites"], lat.get("v0", 5.0), lat.get("alpha", 6), Boundary(lat.get("boundary", "periodic")))
        drive = DriveParams(**_section(raw, "drive"))
        integrator = IntegratorParams(**_section(raw, "integrator"))
        init_raw = dict(_section(raw, "initial_state"))
        kind = init_raw.pop("kind", None)
        if kind not in _INIT_TYPES:
            raise ConfigError(f"initial_state.kind must be one of {sorted(_INIT_TYPES)}, got {kind!r}")
        init = _INIT_TYPES[kind](**init_raw)
        if kind not in _COMPATIBLE[model]:
            raise ConfigError(f"initial state {kind!r} is incompatible with model {model!r}")
        an = dict(raw.get("analysis") or {})
        analysis = AnalysisConfig(
            fit_windows=tuple(tuple(float(x) for x in w) for w in an.get("fit_windows", [])),
            revival_window=tuple(an["revival_window"]) if an.get("revival_window") else None,
            boundary_tol=float(an.get("boundary_tol", 1e-6)),
            boundary_warn=float(an.get("boundary_warn", 1e-6)),
        )
        if not 0 < analysis.boundary_warn <= analysis.boundary_tol:
            raise ConfigError("analysis needs 0 < boundary_warn <= boundary_tol")
        for w in analysis.fit_windows:
            if len(w) != 2 or not w[0] < w[1]:
                raise ConfigError(f"fit window {w} must be [t_lo, t_hi] with t_lo < t_hi")
        eom = raw.get("eom_variant", "detuned")
        if eom not in EOM_VARIANTS:
            raise ConfigError(f"eom_variant must be one of {EOM_VARIANTS}, got {eom!r}")
        return ExperimentConfig(
            name=raw.get("name", "custom"),
            model=model,
            lattice=lattice,
            drive=drive,
            integrator=integrator,
            initial_state=init,
            hopping_convention=HoppingConvention(raw.get("hopping_convention", "projector_derived")),
            analysis=analysis,
            eom_variant=eom,
            output_dir=raw.get("output_dir"),
            standard_dt=raw.get("standard_dt"),
            long=bool(raw.get("long", False)),
            overrides=tuple(raw.get("overrides", ())),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def load_config(source: str | Path, overrides: list[str] | None = None) -> ExperimentConfig:
    """Resolve a preset name or a JSON file path, then apply ``overrides``.

    A file may hold a full config, or ``{"preset": name, "set": [...]}``.
    """
    source = str(source)
    if source in PRESETS:
        raw = preset_dict(source)
    else:
        path = Path(source)
        if not path.is_file():
            if path.suffix or len(path.parts) > 1:
                raise MalformedConfigError(f"config file {source!r} not found")
            raise UnknownPresetError(f"unknown preset {source!r}; available: {', '.join(preset_names())}")
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise MalformedConfigError(f"malformed config file {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise MalformedConfigError(f"config file {path} must hold a JSON object")
        if "preset" in raw:
            extra = raw.get("set", [])
            raw = apply_overrides(preset_dict(raw["preset"]), list(extra))
    if overrides:
        raw = apply_overrides(raw, overrides)
    return from_dict(raw)
