"""Line-oriented ``key = value`` experiment configuration files."""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

from .errors import ConfigError
from .estimator import EvaluationGrid
from .curvature import validate_pilot_rate
from .densities import parse_density
from .kernels import get_kernel
from .risk import ExperimentConfig, canonical_selector

_LIST_KEYS = {"sizes", "kernels", "selectors"}
_KNOWN = {
    "density",
    "sizes",
    "kernels",
    "selectors",
    "reps",
    "seed",
    "grid",
    "pilot_alpha",
    "tau",
    "curvature",
    "experiment",
}
EXPERIMENTS = ("univariate", "multivariate")


def _number(text: str) -> float:
    # Fractions such as 1/6 are accepted for exponents.
    return float(Fraction(text)) if "/" in text else float(text)


def parse_config_text(text: str) -> tuple[ExperimentConfig, str]:
    """Parse config text into an :class:`ExperimentConfig` and experiment kind."""
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key not in _KNOWN:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in raw:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno)
        raw[key] = (value, lineno)

    kwargs = {}
    for key, (value, lineno) in raw.items():
        try:
            if key in _LIST_KEYS:
                items = [v.strip() for v in value.split(",") if v.strip()]
                kwargs[key] = tuple(int(v) for v in items) if key == "sizes" else tuple(items)
            elif key == "reps":
                kwargs["reps"] = int(value)
            elif key == "seed":
                seed = int(value)
                if not 0 <= seed < 2**64:
                    raise ConfigError("seed must be a 64-bit unsigned integer", lineno)
                kwargs["master_seed"] = seed
            elif key == "grid":
                kwargs["grid"] = EvaluationGrid.parse(value)
            elif key in ("pilot_alpha", "tau", "curvature"):
                kwargs[key] = _number(value)
            elif key == "density":
                kwargs["density"] = value
        except ConfigError as exc:
            if exc.line is None:
                raise ConfigError(str(exc), lineno) from None
            raise
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"bad value for {key!r}: {value!r}", lineno) from None

    experiment = raw.get("experiment", ("univariate", 0))[0].lower()
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}", raw["experiment"][1])
    _validate(kwargs, raw, experiment)
    return ExperimentConfig(**kwargs), experiment


def _validate(kwargs: dict, raw: dict, experiment: str) -> None:
    """Check names and ranges up front so errors carry the offending line."""

    def line(key):
        return raw[key][1] if key in raw else None

    if kwargs.get("reps", 1) < 1:
        raise ConfigError("reps must be at least 1", line("reps"))
    if any(n < 2 for n in kwargs.get("sizes", (2,))) or kwargs.get("sizes") == ():
        raise ConfigError("sizes must be integers >= 2", line("sizes"))
    for key in ("tau", "curvature"):
        if key in kwargs and not kwargs[key] > 0:
            raise ConfigError(f"{key} must be positive", line(key))
    if "pilot_alpha" in kwargs and not validate_pilot_rate(kwargs["pilot_alpha"]):
        raise ConfigError("pilot_alpha must lie in (0, 2/9)", line("pilot_alpha"))
    try:
        for k in kwargs.get("kernels", ()):
            get_kernel(k)
    except ConfigError as exc:
        raise ConfigError(str(exc), line("kernels")) from None
    try:
        for s in kwargs.get("selectors", ()):
            canonical_selector(s)
    except ConfigError as exc:
        raise ConfigError(str(exc), line("selectors")) from None
    if experiment == "univariate":
        try:
            parse_density(kwargs.get("density", "kinked:eps=0.5"))
        except ConfigError as exc:
            raise ConfigError(str(exc), line("density")) from None


def load_config(path: str | Path) -> tuple[ExperimentConfig, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text)
