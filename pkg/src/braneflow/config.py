"""Flat ``key = value`` run configuration.

Lists are comma separated. Lines starting with ``#`` are comments. Precedence,
lowest first: defaults, config file, ``BRANEFLOW_OUT`` (output directory only),
command-line flags.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from pathlib import Path

from .hamiltonian import KINDS

ENV_OUT = "BRANEFLOW_OUT"
FORMATS = ("csv", "json", "svg")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    kind: str = "paper"
    u_star: float = 1.0
    eps_k_max: int = 10
    eps_base: float = 2.0
    n_per_arc: int = 64
    window_min: float = 0.5
    window_max: float = 1.5
    converge_times: tuple[float, ...] = (2.0, 5.0, 10.0, 20.0)
    evolve_times: tuple[float, ...] = (0.0, 1.0, 2.0, 3.0, 4.0, 5.0)
    u_slice: float = 1.0
    slice_tol: float = 0.05
    target_m: int = 64
    target_n_u: int = 41
    rel_tol: float = 1e-9
    abs_tol: float = 1e-9
    max_step: float = 0.5
    field_r: tuple[float, ...] = (0.0, -0.1, -0.4, -2.0)
    field_bounds: tuple[float, ...] = (-2.0, 2.0, -2.0, 2.0)
    field_n: int = 21
    ss_w_star: float = -1.0
    ss_window_min: float = 0.5
    ss_window_max: float = 2.0
    ss_margin: float = 0.1
    ss_times: tuple[float, ...] = (0.0, 1.0, 2.0, 3.0)
    ss_v_max: float = 0.1
    ss_nv: int = 41
    ss_y_min: float = 0.5
    ss_y_max: float = 2.0
    ss_ny: int = 401
    out_dir: str = "braneflow_out"
    formats: tuple[str, ...] = FORMATS

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.u_star > 0:
            raise ConfigError("u_star must be positive")
        if self.eps_k_max < 0 or not self.eps_base > 1:
            raise ConfigError("eps ladder needs eps_k_max >= 0 and eps_base > 1")
        if self.n_per_arc < 3:
            raise ConfigError("n_per_arc must be >= 3")
        if not 0 <= self.window_min < self.window_max:
            raise ConfigError("window must satisfy 0 <= window_min < window_max")
        for name in ("converge_times", "evolve_times", "ss_times"):
            ts = getattr(self, name)
            if not ts or any(b <= a for a, b in zip(ts, ts[1:])) or ts[0] < 0:
                raise ConfigError(f"{name} must be nonempty, nonnegative and increasing")
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.max_step > 0):
            raise ConfigError("tolerances and max_step must be positive")
        if any(r > 0 for r in self.field_r):
            raise ConfigError("field_r values must be <= 0")
        if len(self.field_bounds) != 4:
            raise ConfigError("field_bounds needs four numbers: u_min, u_max, v_min, v_max")
        if self.field_n < 2:
            raise ConfigError("field_n must be >= 2")
        if not self.ss_w_star < 0:
            raise ConfigError("ss_w_star must be negative")
        if not 0 <= self.ss_window_min < self.ss_window_max:
            raise ConfigError("ss window must lie on the positive axis")
        if not 0 < self.ss_y_min < self.ss_y_max:
            raise ConfigError("ss fiber samples must be positive")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise ConfigError(f"unknown output formats {bad}; choose from {FORMATS}")

    @property
    def window(self) -> tuple[float, float]:
        return (self.window_min, self.window_max)

    @property
    def eps_list(self) -> list[float]:
        return [self.eps_base ** (-k) for k in range(self.eps_k_max + 1)]


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _kind_of(name: str) -> str:
    default = _FIELDS[name].default
    if isinstance(default, tuple):
        return "tuple_str" if default and isinstance(default[0], str) else "tuple_float"
    return type(default).__name__


def coerce(name: str, text: str):
    if name not in _FIELDS:
        raise ConfigError(f"unknown key {name!r}")
    kind = _kind_of(name)
    text = text.strip()
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "tuple_float":
            return tuple(float(x) for x in text.split(",") if x.strip())
        if kind == "tuple_str":
            return tuple(x.strip() for x in text.split(",") if x.strip())
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value for {name!r}: {text!r} ({exc})") from None


def format_value(value) -> str:
    if isinstance(value, tuple):
        return ",".join(format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_text(text: str, source: str = "<string>") -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _FIELDS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            values[key] = coerce(key, val)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
    return values


def serialize(cfg: RunConfig) -> str:
    return "".join(f"{name} = {format_value(getattr(cfg, name))}\n" for name in _FIELDS)


def parse(text: str, source: str = "<string>") -> RunConfig:
    return RunConfig(**parse_text(text, source))


def load(path: str | Path | None = None, overrides: dict | None = None, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    values = {}
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {p}: {exc}") from None
        values.update(parse_text(text, str(p)))
    if environ.get(ENV_OUT):
        values["out_dir"] = environ[ENV_OUT]
    for key, val in (overrides or {}).items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = coerce(key, val) if isinstance(val, str) else val
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def field_names() -> list[str]:
    return list(_FIELDS)
