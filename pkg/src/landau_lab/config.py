"""Run configuration: a flat, typed ``block.key = value`` text format.

Example::

    # desk-scale linear run
    grid.nx = 16
    grid.nv = 24
    stepper.dt = 0.02
    stepper.t_end = 1.0
    physics.theta = 0
    init.kind = wave
    seed = 0

Lines starting with ``#`` or ``;`` are comments. Unknown keys are rejected and
every value is re-validated by the module that owns it.
"""
from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, fields
from pathlib import Path

from .evolution import StepperConfig
from .phase_space import PhaseGrid
from .samples import INIT_KINDS


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _suites(text: str) -> tuple:
    return tuple(s.strip() for s in text.split(",") if s.strip())


# key -> (attribute, parser)
SCHEMA = {
    "grid.nx": ("nx", int),
    "grid.nv": ("nv", int),
    "grid.rv": ("rv", float),
    "grid.dim_x": ("dim_x", int),
    "stepper.dt": ("dt", float),
    "stepper.t_end": ("t_end", float),
    "stepper.scheme": ("scheme", str),
    "stepper.cadence": ("cadence", int),
    "stepper.solver": ("solver", str),
    "stepper.tol": ("solver_tol", float),
    "physics.theta": ("theta", float),
    "physics.theta_bar": ("theta_bar", float),
    "physics.epsilon": ("epsilon", float),
    "physics.epsilon0": ("epsilon0", float),
    "physics.m": ("m", float),
    "picard.enabled": ("picard", _bool),
    "picard.tol": ("picard_tol", float),
    "picard.max_iter": ("picard_max_iter", int),
    "init.kind": ("init_kind", str),
    "init.amplitude": ("amplitude", float),
    "verify.suites": ("suites", _suites),
    "verify.samples": ("samples", int),
    "seed": ("seed", int),
    "output.dir": ("out_dir", str),
}


@dataclass(frozen=True)
class RunConfig:
    nx: int = 16
    nv: int = 24
    rv: float = 5.5
    dim_x: int = 1
    dt: float = 0.02
    t_end: float = 1.0
    scheme: str = "lie"
    cadence: int = 10
    solver: str = "cg"
    solver_tol: float = 1e-10
    theta: float = 0.0
    theta_bar: float = -2.0
    epsilon: float = 0.1
    epsilon0: float = 1e-2
    m: float = 10.0
    picard: bool = False
    picard_tol: float = 0.0  # 0 selects 1e-8 |f0|_{2, theta_bar}
    picard_max_iter: int = 20
    init_kind: str = "wave"
    amplitude: float = 5e-3
    suites: tuple = ("identities", "spectral", "coercivity", "nonlinear", "barrier", "conservation",
                     "geometry")
    samples: int = 100
    seed: int = 0
    out_dir: str = "out"

    def __post_init__(self):
        try:
            self.grid
            self.stepper
        except ValueError as e:
            raise ConfigError(str(e)) from None
        if self.init_kind not in INIT_KINDS:
            raise ConfigError(f"init.kind must be one of {INIT_KINDS}, got {self.init_kind!r}")
        if not self.amplitude >= 0:
            raise ConfigError("init.amplitude must be nonnegative")
        if not (self.epsilon > 0 and self.epsilon0 > 0):
            raise ConfigError("physics.epsilon and physics.epsilon0 must be positive")
        if self.m <= 0:
            raise ConfigError("physics.m must be positive")
        if self.picard_tol < 0 or self.picard_max_iter < 1:
            raise ConfigError("picard.tol must be >= 0 and picard.max_iter >= 1")
        if self.samples < 1:
            raise ConfigError("verify.samples must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        from .verify import SUITES
        bad = [s for s in self.suites if s not in SUITES]
        if bad:
            raise ConfigError(f"unknown suite(s) {bad}; available: {list(SUITES)}")

    @property
    def grid(self) -> PhaseGrid:
        return PhaseGrid(self.nx, self.nv, self.rv, self.dim_x)

    @property
    def stepper(self) -> StepperConfig:
        return StepperConfig(dt=self.dt, t_end=self.t_end, scheme=self.scheme,
                             diffusion_solver=self.solver, tol=self.solver_tol,
                             output_cadence=self.cadence)

    def canonical(self) -> str:
        """Sorted ``key = value`` text (floats via repr) that parses back to the same config."""
        attr_to_key = {a: k for k, (a, _) in SCHEMA.items()}
        lines = []
        for f in fields(self):
            val = getattr(self, f.name)
            if isinstance(val, tuple):
                val = ",".join(val)
            lines.append(f"{attr_to_key[f.name]} = {val!r}" if isinstance(val, float)
                         else f"{attr_to_key[f.name]} = {val}")
        return "\n".join(sorted(lines)) + "\n"

    def hash(self) -> str:
        """Digest of every setting except the output location, which cannot change results."""
        text = "".join(line + "\n" for line in self.canonical().splitlines()
                       if not line.startswith("output."))
        return hashlib.sha256(text.encode()).hexdigest()

    def as_dict(self, include_output: bool = False) -> dict:
        attr_to_key = {a: k for k, (a, _) in SCHEMA.items()}
        out = {}
        for f in fields(self):
            key = attr_to_key[f.name]
            if key.startswith("output.") and not include_output:
                continue
            val = getattr(self, f.name)
            out[key] = list(val) if isinstance(val, tuple) else val
        return dict(sorted(out.items()))


def parse_config(text: str, **overrides) -> RunConfig:
    """Parse config text; ``overrides`` are attribute values applied last."""
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                   comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string("[run]\n" + text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}") from None
    values = {}
    for key, raw in cp.items("run"):
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}; known keys: {sorted(SCHEMA)}")
        attr, conv = SCHEMA[key]
        try:
            values[attr] = conv(raw.strip())
        except ValueError as e:
            raise ConfigError(f"bad value for {key}: {e}") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)


def load_config(path: str | Path | None, **overrides) -> RunConfig:
    if path is None:
        return parse_config("", **overrides)
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    return parse_config(text, **overrides)


DEFAULT_CONFIG_TEXT = RunConfig().canonical()
