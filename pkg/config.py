import os
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

from dotenv import load_dotenv

from errors import ParseError

load_dotenv()


@dataclass
class LabConfig:
    OUTPUT_DIR: str = "results"
    LOG_LEVEL: str = "INFO"
    LADDER_K0: float = 1.0
    LADDER_RATIO: float = 2.0
    LADDER_MAX_RUNGS: int = 40
    LADDER_STOP_TOL: float = 1e-6
    POTENTIAL_SAMPLING: str = "cell"
    CG_REL_TOL: float = 1e-10
    TAU_S: float = 1e-3
    TAU_Z: float = 0.02
    TAU_POS: float = 1e-3
    TAU_ZERO: float = 1e-2
    TAU_U: float = 1e-6
    BUMP_RADIUS: float = 0.2
    MIN_COMPONENT_FRACTION: float = 0.01
    WORKERS: int = 4


def _env(name: str, default: str) -> str:
    return os.getenv(f"SCHRO_{name}") or default


def load_config() -> LabConfig:
    """Load configuration from environment variables"""
    return LabConfig(
        OUTPUT_DIR=_env("OUTPUT_DIR", "results"),
        LOG_LEVEL=_env("LOG_LEVEL", "INFO").upper(),
        LADDER_K0=float(_env("LADDER_K0", "1.0")),
        LADDER_RATIO=float(_env("LADDER_RATIO", "2.0")),
        LADDER_MAX_RUNGS=int(_env("LADDER_MAX_RUNGS", "40")),
        LADDER_STOP_TOL=float(_env("LADDER_STOP_TOL", "1e-6")),
        POTENTIAL_SAMPLING=_env("POTENTIAL_SAMPLING", "cell"),
        CG_REL_TOL=float(_env("CG_REL_TOL", "1e-10")),
        TAU_S=float(_env("TAU_S", "1e-3")),
        TAU_Z=float(_env("TAU_Z", "0.02")),
        TAU_POS=float(_env("TAU_POS", "1e-3")),
        TAU_ZERO=float(_env("TAU_ZERO", "1e-2")),
        TAU_U=float(_env("TAU_U", "1e-6")),
        BUMP_RADIUS=float(_env("BUMP_RADIUS", "0.2")),
        MIN_COMPONENT_FRACTION=float(_env("MIN_COMPONENT_FRACTION", "0.01")),
        WORKERS=int(_env("WORKERS", "4")),
    )


# Global config instance
config = load_config()


@dataclass
class ExperimentConfig:
    """One experiment: a preset name or a custom domain/potential/datum triple.

    Descriptors are kept as text; `experiments.py` turns them into objects and
    reports failures against the line recorded in `lines`.
    """

    preset: str = "custom"
    domain: str = "disk 0 0 r=1"
    potential: str = "zero"
    data: str = "const 1"
    resolutions: List[int] = field(default_factory=lambda: [33])
    alpha: Optional[float] = None
    beta: Optional[float] = None
    ladder: Tuple[float, float, int] = (config.LADDER_K0, config.LADDER_RATIO, config.LADDER_MAX_RUNGS)
    stop_tol: float = config.LADDER_STOP_TOL
    sampling: str = config.POTENTIAL_SAMPLING
    tau_s: float = config.TAU_S
    tau_z: float = config.TAU_Z
    tau_pos: float = config.TAU_POS
    tau_zero: float = config.TAU_ZERO
    output_dir: str = config.OUTPUT_DIR
    lines: Dict[str, int] = field(default_factory=dict)

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


_KEYS = {
    "preset": "preset",
    "domain": "domain",
    "v": "potential",
    "potential": "potential",
    "data": "data",
    "f": "data",
    "n": "resolutions",
    "resolutions": "resolutions",
    "alpha": "alpha",
    "beta": "beta",
    "ladder": "ladder",
    "stop_tol": "stop_tol",
    "sampling": "sampling",
    "tol_s": "tau_s",
    "tol_z": "tau_z",
    "tol_pos": "tau_pos",
    "tol_zero": "tau_zero",
    "out": "output_dir",
}


def parse_resolutions(text: str, line: int = 0) -> List[int]:
    try:
        values = [int(part) for part in text.replace(" ", "").split(",") if part]
    except ValueError:
        raise ParseError(f"resolutions must be integers, got '{text}'", line)
    if not values or any(n < 3 for n in values):
        raise ParseError("every resolution must be at least 3", line)
    return values


def parse_ladder(text: str, line: int = 0) -> Tuple[float, float, int]:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if len(parts) != 3:
        raise ParseError(f"ladder expects 'k0,ratio,max', got '{text}'", line)
    try:
        k0, ratio, rungs = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ParseError(f"ladder expects 'k0,ratio,max', got '{text}'", line)
    if k0 <= 0 or ratio <= 1 or rungs < 1:
        raise ParseError("ladder needs k0 > 0, ratio > 1 and max >= 1", line)
    return k0, ratio, rungs


def _parse_float(text: str, line: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"expected a number, got '{text}'", line)


def parse_experiment_text(text: str) -> ExperimentConfig:
    """Parse flat `key = value` text; '#' starts a comment"""
    cfg = ExperimentConfig()
    values = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ParseError(f"expected 'key = value', got '{stripped}'", number)
        key, value = (part.strip() for part in stripped.split("=", 1))
        attr = _KEYS.get(key.lower())
        if attr is None:
            raise ParseError(f"unknown key '{key}'", number)
        if not value:
            raise ParseError(f"empty value for '{key}'", number)
        cfg.lines[attr] = number

        if attr == "resolutions":
            values[attr] = parse_resolutions(value, number)
        elif attr == "ladder":
            values[attr] = parse_ladder(value, number)
        elif attr in ("alpha", "beta", "stop_tol", "tau_s", "tau_z", "tau_pos", "tau_zero"):
            values[attr] = _parse_float(value, number)
        elif attr == "sampling" and value not in ("node", "cell"):
            raise ParseError(f"sampling must be 'node' or 'cell', got '{value}'", number)
        else:
            values[attr] = value

    for attr, value in values.items():
        setattr(cfg, attr, value)
    return cfg


def parse_experiment_file(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_experiment_text(handle.read())
