"""Run configuration: flat ``key = value`` files merged with command-line flags."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import InvalidConfig

COMMANDS = ("catenoid", "eigencurve", "continue", "deflect", "thresholds", "simulate",
            "potential", "verify")


@dataclass(frozen=True)
class RunConfig:
    command: str
    sigma: float = 2.0
    lam: float = 0.0
    lambda_max: float = 0.05
    steps: int = 10
    model: str = "sar"
    branch: str = "outer"
    grid_n: int = 401
    n_eta: int | None = None
    shoot_n: int = 801
    tol: float = 1e-10
    fbp_tol: float = 1e-8
    c_lo: float = 0.5
    c_hi: float = 2.5
    samples: int = 41
    index: int = 0
    dt: float = 1e-3
    T: float = 5.0
    amplitude: float = 1e-3
    perturbation: str = "eigen"
    seed: int = 0
    checks: str = "all"
    output: str = "out"
    figures: bool = False

    def provenance(self, **extra) -> dict:
        out = {"grid_n": self.grid_n, "tol": self.tol}
        out.update(extra)
        return out


# the config file and flags say "lambda"; the field is "lam"
ALIASES = {"lambda": "lam"}
_FIELDS = {f.name: f for f in fields(RunConfig)}


def _coerce(key: str, text):
    field = _FIELDS[key]
    kind = field.type
    if isinstance(text, str):
        text = text.strip()
    try:
        if kind == "bool":
            if isinstance(text, bool):
                return text
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind == "int":
            return int(text)
        if kind == "int | None":
            return None if str(text).lower() in ("", "none", "auto") else int(text)
        if kind == "float":
            return float(text)
        return str(text)
    except (TypeError, ValueError):
        raise InvalidConfig(key, f"cannot parse {text!r} as {kind}") from None


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise InvalidConfig("config", str(exc)) from None
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfig(f"line {num}", f"expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[ALIASES.get(key, key)] = value
    return out


def validate(cfg: RunConfig) -> RunConfig:
    def bad(key, msg):
        raise InvalidConfig(key, msg)

    if cfg.command not in COMMANDS:
        bad("command", f"must be one of {', '.join(COMMANDS)}")
    for key in ("grid_n", "shoot_n"):
        n = getattr(cfg, key)
        if n < 3 or n % 2 == 0:
            bad(key, f"grid size must be odd and >= 3, got {n}")
    if cfg.n_eta is not None and cfg.n_eta < 3:
        bad("n_eta", f"must be >= 3, got {cfg.n_eta}")
    for key in ("tol", "fbp_tol", "dt", "T", "amplitude", "sigma"):
        if not getattr(cfg, key) > 0:
            bad(key, "must be positive")
    if cfg.model not in ("sar", "fbp"):
        bad("model", "must be sar or fbp")
    if cfg.branch not in ("inner", "outer"):
        bad("branch", "must be inner or outer")
    if cfg.perturbation not in ("eigen", "random"):
        bad("perturbation", "must be eigen or random")
    if cfg.steps < 1:
        bad("steps", "must be >= 1")
    if cfg.samples < 2:
        bad("samples", "must be >= 2")
    if cfg.index < 0:
        bad("index", "must be >= 0")
    if cfg.lambda_max < 0 or cfg.lam < 0:
        bad("lambda", "must be nonnegative")
    if not 0 < cfg.c_lo < cfg.c_hi:
        bad("c_lo", "need 0 < c_lo < c_hi")
    return cfg


def build_config(file_values: dict, flag_values: dict) -> RunConfig:
    """Defaults, then file values, then flags (None means 'not given')."""
    merged = {}
    for source in (file_values, flag_values):
        for key, value in source.items():
            if value is None:
                continue
            key = ALIASES.get(key, key)
            if key not in _FIELDS:
                raise InvalidConfig(key, "unknown configuration key")
            merged[key] = _coerce(key, value)
    if "command" not in merged:
        raise InvalidConfig("command", "no command given")
    merged["model"] = merged.get("model", "sar").lower()
    merged["branch"] = merged.get("branch", "outer").lower()
    return validate(RunConfig(**merged))


def as_dict(cfg: RunConfig) -> dict:
    return dataclasses.asdict(cfg)
