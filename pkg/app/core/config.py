# python
import json
from pathlib import Path
from typing import Any, Callable

# project
from app.core.errors import ConfigError
from app.core.logging import get_logger
from app.schemas.ensemble import InitialStateKind
from app.schemas.experiment import ExperimentConfig, Preset

# 3rd party
from pydantic import BaseModel, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

logger = get_logger(__name__)


class Settings(BaseSettings):
    """Application settings, read from TRAJTHERMO_* variables and .env."""

    model_config = SettingsConfigDict(env_prefix="TRAJTHERMO_", env_file=".env", extra="ignore")

    app_name: str = "trajthermo"
    app_version: str = "0.1.0"
    output_dir: Path = Path("results")
    log_dir: Path = Path("logs")
    workers: int = 1
    log_level: str = "INFO"


# --- flat "dotted.key = value" format ---


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def _format_value(value: Any) -> str:
    if isinstance(value, BaseModel):
        raise TypeError("nested models are flattened before formatting")
    if hasattr(value, "value") and not isinstance(value, (int, float)):
        return str(value.value)
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    return str(value)


def _nest(flat: dict[str, Any]) -> dict[str, Any]:
    nested: dict[str, Any] = {}
    for key, value in flat.items():
        *parents, leaf = key.split(".")
        node = nested
        for part in parents:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"key {key!r} conflicts with a scalar value", [key])
            node = child
        if isinstance(node.get(leaf), dict):
            raise ConfigError(f"key {key!r} conflicts with a section", [key])
        node[leaf] = value
    return nested


def validate_config(flat: dict[str, Any]) -> ExperimentConfig:
    """Build an ExperimentConfig from dotted keys.

    Raises:
        ConfigError: unknown keys or invalid values, with their dotted paths
    """
    try:
        return ExperimentConfig.model_validate(_nest(flat))
    except ValidationError as e:
        paths = [".".join(str(p) for p in err["loc"]) or "<root>" for err in e.errors()]
        details = "; ".join(
            f"{path}: {err['msg']}" for path, err in zip(paths, e.errors())
        )
        raise ConfigError(f"invalid configuration: {details}", paths) from e


def parse_config_text(text: str) -> ExperimentConfig:
    flat: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, raw = stripped.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value'", [key or f"line {lineno}"])
        if key in flat:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}", [key])
        flat[key] = _parse_value(raw.strip())
    return validate_config(flat)


def load_config(path: Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        logger.error("Failed to read config file", path=str(path), error=str(e))
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    cfg = parse_config_text(text)
    logger.info("Config loaded", path=str(path), preset=cfg.preset.value)
    return cfg


def flatten_config(cfg: BaseModel, prefix: str = "") -> list[tuple[str, Any]]:
    """(dotted key, value) pairs in field order."""
    items: list[tuple[str, Any]] = []
    for name in type(cfg).model_fields:
        value = getattr(cfg, name)
        key = f"{prefix}{name}"
        if isinstance(value, BaseModel):
            items.extend(flatten_config(value, prefix=f"{key}."))
        elif value is not None:
            items.append((key, value))
    return items


def dump_config(cfg: ExperimentConfig) -> str:
    """Config text that parses back to an equal model (floats keep 17 digits)."""
    return "".join(f"{key} = {_format_value(value)}\n" for key, value in flatten_config(cfg))


def apply_overrides(cfg: ExperimentConfig, overrides: dict[str, Any]) -> ExperimentConfig:
    """Re-validate cfg with some dotted keys replaced."""
    flat = dict(flatten_config(cfg))
    flat.update({k: v for k, v in overrides.items() if v is not None})
    return validate_config(flat)


# --- presets ---


def _fig1() -> ExperimentConfig:
    return ExperimentConfig(preset=Preset.FIG1, run={"n_traj": 1})


def _fig2() -> ExperimentConfig:
    return ExperimentConfig(preset=Preset.FIG2, run={"record_stride": 100})


def _fig3(preset: Preset, steps: int) -> ExperimentConfig:
    return ExperimentConfig(
        preset=preset,
        physics={"tau_steps": steps},
        run={"record_stride": 100},
        feedback={"f": 3.0, "enabled": True},
    )


def _jarzynski() -> ExperimentConfig:
    return ExperimentConfig(
        preset=Preset.JARZYNSKI,
        physics={"tau_steps": 2500, "beta": 10.0},
        run={"record_stride": 100},
        feedback={"f": 3.0, "enabled": True},
        sweep={"tau_steps": [1400, 2500]},
    )


def _heat() -> ExperimentConfig:
    return ExperimentConfig(
        preset=Preset.HEAT,
        physics={"g": 0.0},
        run={
            "record_stride": 100,
            "initial": InitialStateKind.EXPLICIT,
            "initial_coords": (0.5, 0.5, 0.0),
        },
        sweep={"delta_i": [5.0, 10.0, 20.0]},
    )


PRESETS: dict[Preset, Callable[[], ExperimentConfig]] = {
    Preset.FIG1: _fig1,
    Preset.FIG2: _fig2,
    Preset.FIG3A: lambda: _fig3(Preset.FIG3A, 1400),
    Preset.FIG3B: lambda: _fig3(Preset.FIG3B, 2500),
    Preset.JARZYNSKI: _jarzynski,
    Preset.HEAT: _heat,
}


def preset_config(name: str | Preset) -> ExperimentConfig:
    try:
        preset = Preset(name)
    except ValueError as e:
        known = ", ".join(p.value for p in Preset)
        raise ConfigError(f"unknown preset {name!r} (known: {known})", ["preset"]) from e
    return PRESETS[preset]()
