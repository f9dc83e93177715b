"""Scenario configuration: JSON loading, schema validation and unit conversion.

Configs are single JSON documents whose keys carry their units
(``fwhm_ps``, ``wavelength_nm``...).  Everything is converted to SI here;
the rest of the package never sees the suffixed values.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .. import biphoton, fiber, propagate
from ..biphoton import FilterSpec, SpdcSpec
from ..errors import ConfigError
from ..fiber import NM, PS, FiberSpec
from ..propagate import PropagationConfig, PulseSpec

SCENARIOS = ("fig2_jsi_sweep", "fig3_heralded_map", "fig4_hom", "fig4_bump", "calibrate")

_DEFAULT_DELAYS_PS = {"start": -2.0, "stop": 2.0, "points": 21}
_DEFAULT_HOM_PS = {"start": -6.0, "stop": 6.0, "points": 241}
_DEFAULT_SELECT = {"fig4_hom": "max_shift", "fig4_bump": "max_antisymmetric"}


def schema() -> dict:
    """The published JSON schema for config files."""
    text = resources.files("photon_reshape.expcli").joinpath("config.schema.json").read_text()
    return json.loads(text)


@dataclass
class ScenarioConfig:
    """Validated scenario in SI units.

    ``peak_power`` is ``None`` when the control power is to be calibrated
    to ``target_shift``.  ``walkoff`` is the control walk-off in the signal
    frame (s/m).
    """

    scenario: str
    fiber: FiberSpec
    control: PulseSpec
    spdc: SpdcSpec
    solver: PropagationConfig
    control_delays: np.ndarray
    hom_delays: np.ndarray
    herald: FilterSpec
    scan: FilterSpec
    scan_centers: np.ndarray | None
    peak_power: float | None = None
    target_shift: float = 0.4e12
    walkoff: float = 0.0
    select: str = "max_shift"
    grid_points: int = 512
    grid_span: float = 5e12  # Hz
    control_grid_points: int = 4096
    control_window: float = 40e-12
    background_fraction: float = 0.0
    seed: int = 0
    output_dir: str | None = None
    source: str = ""
    document: dict = field(default_factory=dict, repr=False)

    @property
    def config_hash(self) -> str:
        """sha256 of the canonical (sorted, compact) JSON form of the document."""
        return config_hash(self.document)

    def jsa_grid(self):
        return biphoton.default_jsa_grid(self.spdc, self.grid_points, self.grid_span)

    def control_grid(self):
        return propagate.default_control_grid(self.control_grid_points, self.control_window)


def config_hash(document: dict) -> str:
    canonical = json.dumps(document, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _locate(text: str, path) -> int | None:
    """Best-effort line number of the JSON node at ``path`` (keys and indices)."""
    pos = 0
    for part in path:
        if isinstance(part, str):
            hit = text.find(json.dumps(part) + ":", pos)
            if hit < 0:
                hit = text.find(json.dumps(part), pos)
            if hit < 0:
                break
            pos = hit
    if not path:
        return None
    return text.count("\n", 0, pos) + 1


def _error(source, text, path, message) -> ConfigError:
    line = _locate(text, list(path))
    where = f"{source}:{line}" if line else source
    dotted = ".".join(str(p) for p in path) or "<root>"
    return ConfigError(f"{where}: {dotted}: {message}")


def _axis(spec, scale: float) -> np.ndarray:
    if isinstance(spec, dict):
        return np.linspace(spec["start"], spec["stop"], spec["points"]) * scale
    return np.asarray(spec, dtype=float) * scale


def parse_document(document: dict, text: str | None = None, source: str = "<config>",
                   base_dir: str | os.PathLike | None = None) -> ScenarioConfig:
    """Validate a decoded document and build a :class:`ScenarioConfig`."""
    if text is None:
        text = json.dumps(document, indent=2)
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(document), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        more = f" (+{len(errors) - 1} more)" if len(errors) > 1 else ""
        raise _error(source, text, err.absolute_path, err.message + more)

    scenario = document["scenario"]
    fib_doc = document.get("fiber", {})
    ctl_doc = document.get("control", {})
    spdc_doc = document.get("spdc", {})
    sweep_doc = document.get("sweep", {})
    filt_doc = document.get("filters", {})
    sol_doc = document.get("solver", {})
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()

    def build(section, fn):
        try:
            return fn()
        except ConfigError:
            raise
        except (ValueError, OSError, KeyError) as exc:
            raise _error(source, text, [section], str(exc)) from None

    def make_fiber():
        overrides = {}
        if "group_delay_csv" in fib_doc:
            csv_path = base_dir / fib_doc["group_delay_csv"]
            samples = fiber.read_group_delay_csv(csv_path)
            overrides["delay_curve"] = fiber.fit_group_delay(samples, fib_doc.get("fit_degree", 6))
        keys = {"length_m": "length", "gamma_control_per_w_m": "gamma_control",
                "gamma_signal_per_w_m": "gamma_signal", "xpm_factor": "xpm_factor",
                "transmission": "transmission"}
        for key, name in keys.items():
            if key in fib_doc:
                overrides[name] = float(fib_doc[key])
        return fiber.default_fiber(**overrides)

    fib = build("fiber", make_fiber)

    power = ctl_doc.get("peak_power_w", 0.0)
    control = build("control", lambda: PulseSpec(
        shape=ctl_doc.get("shape", "gaussian"),
        fwhm=ctl_doc.get("fwhm_ps", 0.78) * PS,
        peak_power=0.0 if power == "calibrate" else float(power),
        wavelength=ctl_doc.get("wavelength_nm", 756.0) * NM,
    ))

    spdc = build("spdc", lambda: SpdcSpec(
        pump_center=spdc_doc.get("pump_center_nm", 756.0) * NM,
        pump_bandwidth=spdc_doc.get("pump_sigma_rad_per_ps", 3.0) / PS,
        crystal_length=spdc_doc.get("crystal_length_mm", 5.0) * 1e-3,
        gvm_ps=spdc_doc.get("gvm_ps_ps_per_mm", 0.2) * PS / 1e-3,
        gvm_pi=spdc_doc.get("gvm_pi_ps_per_mm", -0.2) * PS / 1e-3,
        phase_mismatch=spdc_doc.get("phase_mismatch_rad", 0.0),
    ))

    solver = build("solver", lambda: PropagationConfig(
        z_steps=sol_doc.get("z_steps", 64),
        scheme=sol_doc.get("scheme", "split_step"),
        include_control_dispersion=sol_doc.get("include_control_dispersion", True),
        include_spm=sol_doc.get("include_spm", True),
    ))

    herald_doc = filt_doc.get("herald", {})
    herald = build("filters", lambda: FilterSpec(
        herald_doc.get("center_nm", spdc.degenerate_wavelength / NM) * NM,
        herald_doc.get("width_nm", 0.4) * NM,
        herald_doc.get("shape", "rectangular"),
    ))
    scan_doc = filt_doc.get("scan", {})
    scan = build("filters", lambda: FilterSpec(
        spdc.degenerate_wavelength, scan_doc.get("width_nm", 0.4) * NM,
        scan_doc.get("shape", "rectangular")))
    scan_centers = _axis(scan_doc["centers_nm"], NM) if "centers_nm" in scan_doc else None

    control_delays = _axis(sweep_doc.get("control_delays_ps", _DEFAULT_DELAYS_PS), PS)
    hom_delays = _axis(sweep_doc.get("hom_delays_ps", _DEFAULT_HOM_PS), PS)
    if len(hom_delays) < 3 or np.any(np.diff(hom_delays) <= 0):
        raise _error(source, text, ["sweep", "hom_delays_ps"],
                     "needs at least three strictly increasing delays")
    if len(control_delays) != len(np.unique(control_delays)):
        raise _error(source, text, ["sweep", "control_delays_ps"], "delays must be distinct")

    walkoff_doc = fib_doc.get("walkoff_ps_per_m", "auto")
    if walkoff_doc == "auto":
        walkoff = build("fiber", lambda: float(fiber.walkoff_per_meter(
            fib.delay_curve, spdc.degenerate_wavelength, control.wavelength)))
    else:
        walkoff = float(walkoff_doc) * PS

    cfg = ScenarioConfig(
        scenario=scenario,
        fiber=fib,
        control=control,
        spdc=spdc,
        solver=solver,
        control_delays=control_delays,
        hom_delays=hom_delays,
        herald=herald,
        scan=scan,
        scan_centers=scan_centers,
        peak_power=None if power == "calibrate" else float(power),
        target_shift=ctl_doc.get("target_shift_thz", 0.4) * 1e12,
        walkoff=walkoff,
        select=sweep_doc.get("select", _DEFAULT_SELECT.get(scenario, "max_shift")),
        grid_points=spdc_doc.get("grid_points", 512),
        grid_span=spdc_doc.get("grid_span_thz", 5.0) * 1e12,
        control_grid_points=sol_doc.get("control_grid_points", 4096),
        control_window=sol_doc.get("control_window_ps", 40.0) * PS,
        background_fraction=document.get("accidentals", {}).get("background_fraction", 0.0),
        seed=document.get("seed", 0),
        output_dir=document.get("output_dir"),
        source=source,
        document=document,
    )
    # grids are built once here so size and coverage errors surface as config errors
    build("spdc", lambda: biphoton.build_jsa(spdc, cfg.jsa_grid(), cfg.jsa_grid()))
    build("solver", lambda: propagate.synthesize_pulse(control, cfg.control_grid()))
    return cfg


def load_config(path) -> ScenarioConfig:
    """Read, validate and convert a config file; raises ConfigError with a line number."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror or exc}") from None
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(document, dict):
        raise ConfigError(f"{path}:1: the config must be a JSON object")
    return parse_document(document, text, str(path), path.parent)
