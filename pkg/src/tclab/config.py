"""Run configuration: flat JSON file, CLI overrides, built-in defaults."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .diophantine import RotationNumber
from .errors import ConfigError

DEFAULT_LAMBDA = 1e6  # smallest of 1e4..1e7 passing every lemma check
DEFAULT_TOL = 1e-12


@dataclass
class Config:
    omega: str = "golden"
    tau: float = 1.0
    lam: float | None = None
    alpha: object = "auto"
    beta: float = 0.5
    beta_grid: object = None
    grid_n: int | None = None
    depth_tol: float = DEFAULT_TOL
    seed: int = 0
    lambda_candidates: list | None = None

    def rotation(self) -> RotationNumber:
        if self.omega == "golden":
            return RotationNumber.golden(tau=self.tau)
        return RotationNumber.from_decimal(self.omega, tau=self.tau)

    def lam_or_default(self) -> float:
        return DEFAULT_LAMBDA if self.lam is None else self.lam

    def betas(self):
        """Sweep grid: explicit list, or ``{"j_min", "j_max"}`` for 1 - 2**-j."""
        grid = self.beta_grid
        if grid is None:
            grid = {"j_min": 7, "j_max": 17}
        if isinstance(grid, dict):
            return [1.0 - 2.0**-j for j in range(grid["j_min"], grid["j_max"] + 1)]
        return [float(b) for b in grid]

    def to_dict(self):
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


# file key -> (attribute, validator)
def _positive(v):
    return float(v) > 0


def _unit(v):
    return 0.0 <= float(v) <= 1.0


def _omega(v):
    if v == "golden":
        return True
    try:
        return 0.0 < float(v) < 1.0 and isinstance(v, str)
    except ValueError:
        return False


def _alpha(v):
    return v == "auto" or (isinstance(v, (int, float)) and 0.0 <= v < 1.0)


def _beta_grid(v):
    if v is None:
        return True
    if isinstance(v, dict):
        return set(v) == {"j_min", "j_max"} and all(isinstance(x, int) for x in v.values())
    return isinstance(v, list) and all(isinstance(b, (int, float)) and 0 <= b < 1 for b in v)


def _count(v):
    return v is None or (isinstance(v, int) and not isinstance(v, bool) and v > 0)


def _candidates(v):
    return v is None or (isinstance(v, list) and len(v) > 0 and all(_positive(x) for x in v))


_KEYS = {
    "omega": ("omega", _omega, "'golden' or a decimal string in (0, 1)"),
    "tau": ("tau", lambda v: _positive(v) and float(v) >= 1.0, "number >= 1"),
    "lambda": ("lam", _positive, "positive number"),
    "alpha": ("alpha", _alpha, "'auto' or a number in [0, 1)"),
    "beta": ("beta", _unit, "number in [0, 1]"),
    "beta_grid": ("beta_grid", _beta_grid,
                  "list of numbers in [0, 1) or {\"j_min\": int, \"j_max\": int}"),
    "grid_n": ("grid_n", _count, "positive integer"),
    "depth_tol": ("depth_tol", _positive, "positive number"),
    "seed": ("seed", lambda v: isinstance(v, int) and v >= 0, "non-negative integer"),
    "lambda_candidates": ("lambda_candidates", _candidates, "non-empty list of positive numbers"),
}
_NUMERIC = {"tau", "lambda", "beta", "depth_tol"}


def _check(key, value):
    attr, ok, expected = _KEYS[key]
    try:
        good = ok(value)
    except (TypeError, ValueError):
        good = False
    if isinstance(value, bool) or not good:
        raise ConfigError(key, f"expected {expected}, got {value!r}")
    if key in _NUMERIC:
        value = float(value)
    return attr, value


def load_file(path):
    """Parse a config file (or a run manifest, whose ``config`` block is used)."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(str(path), "top level must be a JSON object")
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]
    out = {}
    for key, value in data.items():
        if key not in _KEYS:
            raise ConfigError(key, "unknown key")
        if value is None and key in ("lambda", "grid_n", "beta_grid", "lambda_candidates"):
            continue
        attr, value = _check(key, value)
        out[attr] = value
    return out


def build(path=None, overrides=None) -> Config:
    """Flag overrides win over the file, which wins over the defaults."""
    values = {}
    if path is not None:
        values.update(load_file(path))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        attr, value = _check(key, value)
        values[attr] = value
    known = {f.name for f in fields(Config)}
    return Config(**{k: v for k, v in values.items() if k in known})
