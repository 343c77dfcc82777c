"""Flat ``key=value`` experiment configuration.

Blank lines and lines starting with ``#`` are ignored. Unknown keys are
rejected. List-valued keys (``grid``, ``B_list``, ``P_list``) take
comma-separated numbers and must be sorted ascending.
"""

from dataclasses import dataclass, fields, replace

from ..channel import SystemParams, db_to_linear
from ..errors import ConfigError
from .engine import BACKENDS

__all__ = ["ExperimentConfig", "parse_config", "load_config", "EXPERIMENTS"]

EXPERIMENTS = ("validate-cdf", "fig1", "fig2", "fig3", "fig4", "scaling", "coverage", "link-level")


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings for one experiment run.

    ``phi``, when given, fixes the effective SNR coefficient and overrides
    ``P_dB``. Anchor fields (``K0``, ``B0``, ``P0_dB``, ``anchor_sum``) and
    ``mode`` only matter to the sweeps that use them.
    """

    name: str = "fig1"
    nT: int = 4
    B: int = 8
    P_dB: float = 15.0
    M: int = 256
    K: int = 100
    trials: int = 1000
    seed: int = 0
    backend: str = "rvq"
    grid: tuple = None
    B_list: tuple = None
    P_list: tuple = None
    phi: float = None
    K0: int = None
    B0: int = None
    P0_dB: float = None
    anchor_sum: float = None
    mode: str = None
    law: str = "first-sinr"
    n: int = 2
    samples: int = 100_000
    symbols: int = 100_000
    out: str = None

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.name!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}")
        for key in ("grid", "B_list", "P_list"):
            v = getattr(self, key)
            if v is None:
                continue
            if len(v) == 0:
                raise ConfigError(f"{key} must be nonempty")
            if list(v) != sorted(v):
                raise ConfigError(f"{key} must be sorted ascending")

    @property
    def P(self):
        if self.phi is not None:
            return self.phi * self.M * self.nT / (self.M - 1)
        return db_to_linear(self.P_dB)

    @property
    def params(self):
        return SystemParams(K=self.K, nT=self.nT, B=self.B, P=self.P, M=self.M)

    def with_overrides(self, **changes):
        clean = {k: v for k, v in changes.items() if v is not None}
        try:
            return replace(self, **clean)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


_LISTS = {"grid", "B_list", "P_list"}
_INT_LISTS = {"B_list"}


def _convert(key, raw, ftype):
    try:
        if key in _LISTS:
            items = [s.strip() for s in raw.split(",") if s.strip()]
            conv = int if key in _INT_LISTS else float
            vals = tuple(conv(s) for s in items)
            if key == "grid" and all(float(v).is_integer() for v in vals):
                vals = tuple(int(v) for v in vals)
            return vals
        if ftype in ("int", int):
            return int(raw)
        if ftype in ("float", float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


_TYPES = {"nT": int, "B": int, "M": int, "K": int, "trials": int, "seed": int, "K0": int,
          "B0": int, "n": int, "samples": int, "symbols": int, "P_dB": float, "phi": float,
          "P0_dB": float, "anchor_sum": float}


def parse_config(text, base=None):
    """Parse ``key=value`` lines on top of ``base`` (defaults if omitted)."""
    known = {f.name for f in fields(ExperimentConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _convert(key, raw, _TYPES.get(key, str))
    base = base or ExperimentConfig()
    return replace(base, **values)


def load_config(path, base=None):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), base)
