"""Experiment configuration: sectioned ``key = value`` files and named presets.

Every key is unique across sections, so each one doubles as a command-line
override flag (``--V0 0.9``, ``--a_step 0.005``, ...).
"""
from __future__ import annotations

import configparser
import dataclasses
import io
import math
import re
from dataclasses import dataclass, fields
from pathlib import Path

from .photon import PhaseFunction, PixelGrid, load_table, table_on_grid


class ConfigError(ValueError):
    pass


PHASE_KINDS = ("zero", "linear", "sinusoidal", "tabulated")


@dataclass
class ExperimentConfig:
    # grid
    pixel_width_um: float = 100.0
    slm_distance_mm: float = 330.0
    half_window: int = 16
    # profile
    fwhm_mrad: float = 6.0
    fwhm_of: str = "intensity"
    profile_table: str = ""
    # state
    V0: float = 0.914
    # phases
    phase1: str = "zero"
    phase1_param: float = 0.0
    phase1_table: str = ""
    phase2: str = "sinusoidal"
    phase2_param: float = -0.6
    phase2_table: str = ""
    # sweep
    a_start: float = 0.0
    a_stop: float = 1.0
    a_step: float = 0.01
    # counts
    n_total: int = 10_000
    seed: int = 0
    # tomography
    tomo_a: float = 0.0
    tomo_phase: str = "phase1"
    tomo_n_total: int = 100_000
    projector_set: str = "overcomplete-36"
    # bound demo
    random_phases: int = 20
    # output
    out: str = "out.csv"


SECTIONS = {
    "grid": ("pixel_width_um", "slm_distance_mm", "half_window"),
    "profile": ("fwhm_mrad", "fwhm_of", "profile_table"),
    "state": ("V0",),
    "phase1": ("phase1", "phase1_param", "phase1_table"),
    "phase2": ("phase2", "phase2_param", "phase2_table"),
    "sweep": ("a_start", "a_stop", "a_step"),
    "counts": ("n_total", "seed"),
    "tomo": ("tomo_a", "tomo_phase", "tomo_n_total", "projector_set"),
    "bound": ("random_phases",),
    "output": ("out",),
}
_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
KEYS = tuple(f.name for f in fields(ExperimentConfig))

PRESETS: dict[str, dict] = {
    "fig2-sin": {"command": "sweep", "phase1": "zero", "phase2": "sinusoidal", "phase2_param": -0.6,
                 "out": "fig2-sin.csv"},
    "fig2-linear": {"command": "sweep", "phase1": "zero", "phase2": "linear", "phase2_param": 0.1,
                    "out": "fig2-linear.csv"},
    "uncorrelated": {"command": "sweep", "phase1": "zero", "phase2": "zero", "phase2_param": 0.0,
                     "out": "uncorrelated.csv"},
    "fig3-left": {"command": "tomo", "phase1": "zero", "tomo_phase": "phase1", "tomo_a": 0.0,
                  "out": "fig3-left.txt"},
    "fig3-right": {"command": "tomo", "phase2": "sinusoidal", "phase2_param": -0.6,
                   "tomo_phase": "phase2", "tomo_a": 0.6, "out": "fig3-right.txt"},
}
PRESET_DESCRIPTIONS = {
    "fig2-sin": "trace distance, f1=0 vs f2=sin(-0.6 m): revival near a=0.6",
    "fig2-linear": "trace distance, f1=0 vs f2=0.1 m: peak at a=0.1, semigroup witness",
    "uncorrelated": "f1=f2=0: no increase possible",
    "fig3-left": "ML tomography of f=0 at a=0 (visibility 0.914)",
    "fig3-right": "ML tomography of f=sin(-0.6 m) at a=0.6",
}


def _convert(key: str, raw) -> object:
    kind = _FIELD_TYPES[key]
    try:
        if kind in ("float", float):
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError("not finite")
            return value
        if kind in ("int", int):
            as_float = float(raw)
            if as_float != int(as_float):
                raise ValueError("not an integer")
            return int(as_float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: cannot read {raw!r} as {kind} ({exc})") from None
    return str(raw).strip()


def _line_of(text: str, key: str) -> int | None:
    pat = re.compile(rf"^\s*{re.escape(key)}\s*[=:]", re.IGNORECASE)
    for i, line in enumerate(text.splitlines(), 1):
        if pat.match(line):
            return i
    return None


def parse(text: str, base: ExperimentConfig | None = None, source: str = "<config>") -> ExperimentConfig:
    """Read a config text on top of ``base`` (defaults if omitted)."""
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    values = dataclasses.asdict(base or ExperimentConfig())
    for section in cp.sections():
        if section not in SECTIONS:
            line = next((i for i, ln in enumerate(text.splitlines(), 1) if ln.strip() == f"[{section}]"), None)
            raise ConfigError(f"{source}:{line}: unknown section [{section}]")
        for key, raw in cp.items(section):
            if key not in SECTIONS[section]:
                line = _line_of(text, key)
                raise ConfigError(f"{source}:{line}: unknown key {key!r} in section [{section}]")
            try:
                values[key] = _convert(key, raw)
            except ConfigError as exc:
                raise ConfigError(f"{source}:{_line_of(text, key)}: {exc}") from None
    cfg = ExperimentConfig(**values)
    try:
        validate(cfg)
    except ConfigError as exc:
        key = str(exc).split(":", 1)[0]
        line = _line_of(text, key) if key in KEYS else None
        raise ConfigError(f"{source}:{line if line else '-'}: {exc}") from None
    return cfg


def load(path: str | Path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse(text, base, source=str(path))


def serialize(cfg: ExperimentConfig) -> str:
    buf = io.StringIO()
    for section, keys in SECTIONS.items():
        buf.write(f"[{section}]\n")
        for key in keys:
            value = getattr(cfg, key)
            buf.write(f"{key} = {value!r}\n" if isinstance(value, float) else f"{key} = {value}\n")
        buf.write("\n")
    return buf.getvalue()


def apply_overrides(cfg: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    values = dataclasses.asdict(cfg)
    for key, raw in overrides.items():
        if raw is None:
            continue
        if key not in values:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = _convert(key, raw)
    out = ExperimentConfig(**values)
    validate(out)
    return out


def preset(name: str) -> tuple[str, ExperimentConfig]:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    entry = dict(PRESETS[name])
    command = entry.pop("command")
    return command, apply_overrides(ExperimentConfig(), entry)


def validate(cfg: ExperimentConfig) -> None:
    if not cfg.pixel_width_um > 0:
        raise ConfigError("pixel_width_um: must be positive")
    if not cfg.slm_distance_mm > 0:
        raise ConfigError("slm_distance_mm: must be positive")
    if cfg.half_window < 0:
        raise ConfigError("half_window: must be non-negative")
    if not cfg.fwhm_mrad > 0:
        raise ConfigError("fwhm_mrad: must be positive")
    if cfg.fwhm_of not in ("intensity", "amplitude"):
        raise ConfigError("fwhm_of: must be 'intensity' or 'amplitude'")
    if not 0 < cfg.V0 <= 1:
        raise ConfigError("V0: must lie in (0, 1]")
    for which in ("phase1", "phase2"):
        kind = getattr(cfg, which)
        if kind not in PHASE_KINDS:
            raise ConfigError(f"{which}: must be one of {', '.join(PHASE_KINDS)}")
        table = getattr(cfg, f"{which}_table")
        if kind == "tabulated" and not table:
            raise ConfigError(f"{which}_table: required for a tabulated phase")
        if table and not Path(table).is_file():
            raise ConfigError(f"{which}_table: file {table!r} does not exist")
    if cfg.profile_table and not Path(cfg.profile_table).is_file():
        raise ConfigError(f"profile_table: file {cfg.profile_table!r} does not exist")
    if not cfg.a_step > 0:
        raise ConfigError("a_step: must be positive")
    if cfg.a_start > cfg.a_stop:
        raise ConfigError("a_start: must not exceed a_stop")
    if cfg.n_total < 0:
        raise ConfigError("n_total: must be non-negative (0 disables count simulation)")
    if cfg.tomo_phase not in ("phase1", "phase2"):
        raise ConfigError("tomo_phase: must be 'phase1' or 'phase2'")
    if cfg.tomo_n_total <= 0:
        raise ConfigError("tomo_n_total: must be positive")
    if cfg.projector_set not in ("overcomplete-36", "minimal-16"):
        raise ConfigError("projector_set: must be 'overcomplete-36' or 'minimal-16'")
    if cfg.random_phases < 0:
        raise ConfigError("random_phases: must be non-negative")
    if not cfg.out:
        raise ConfigError("out: output path must not be empty")


def grid_of(cfg: ExperimentConfig) -> PixelGrid:
    return PixelGrid(cfg.pixel_width_um * 1e-6, cfg.slm_distance_mm * 1e-3, cfg.half_window)


def phase_of(cfg: ExperimentConfig, which: str, grid: PixelGrid) -> PhaseFunction:
    kind = getattr(cfg, which)
    if kind == "tabulated":
        offsets, values = load_table(getattr(cfg, f"{which}_table"))
        return PhaseFunction.tabulated(table_on_grid(grid, offsets, values))
    if kind == "zero":
        return PhaseFunction.zero()
    return PhaseFunction(kind, getattr(cfg, f"{which}_param"))
