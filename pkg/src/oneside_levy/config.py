"""Flat key-value experiment configuration with dotted sections.

The format is plain text, one `key = value` per line, `#` comments, values
parsed as int, float, comma list or string.  A `schema_version` key guards
against silent format drift.  Example::

    schema_version = 1
    kind = semigroup
    seed = 12345
    symbol.kind = stable
    symbol.alpha = 1.5
    bc = DN
    n = 9
    times = 0.1, 0.5, 1.0
    paths = 100000
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import OnesideLevyError
from .symbol import LaplaceExponent, LevyMeasureSpec

SCHEMA_VERSION = 1

KINDS = ("coeffs", "matrix", "simulate", "semigroup", "resolvent", "scale",
         "exit", "convergence", "j1", "validate", "suite")


class ConfigError(OnesideLevyError):
    pass


def _parse_value(raw: str):
    raw = raw.strip()
    if "," in raw:
        return [_parse_value(tok) for tok in raw.split(",") if tok.strip()]
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            continue
    return raw


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = body.split("=", 1)
        out[key.strip()] = _parse_value(raw)
    version = out.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}")
    return out


def load_config(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {p} does not exist")
    return parse_config_text(p.read_text())


@dataclass
class ExperimentConfig:
    """Typed view over the flat dictionary, with defaults."""

    raw: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.raw.get(key, default)

    def require(self, key):
        if key not in self.raw:
            raise ConfigError(f"missing config key {key!r}")
        return self.raw[key]

    def as_list(self, key, default=None):
        v = self.raw.get(key, default)
        if v is None:
            raise ConfigError(f"missing config key {key!r}")
        return v if isinstance(v, list) else [v]

    @property
    def kind(self) -> str:
        k = self.require("kind")
        if k not in KINDS:
            raise ConfigError(f"unknown experiment kind {k!r}")
        return k

    @property
    def seed(self) -> int:
        return int(self.get("seed", 20240801))

    def laplace_exponent(self) -> LaplaceExponent:
        skind = self.get("symbol.kind", "stable")
        if skind == "stable":
            spec = LevyMeasureSpec.stable(float(self.require("symbol.alpha")))
        elif skind == "tempered_stable":
            spec = LevyMeasureSpec.tempered_stable(
                float(self.require("symbol.alpha")),
                float(self.get("symbol.lambda", 0.0)))
        else:
            raise ConfigError(
                "config files support the built-in symbol kinds only; build "
                "custom measures through the library API")
        return LaplaceExponent(spec)

    @property
    def alpha(self) -> float:
        return float(self.require("symbol.alpha"))
