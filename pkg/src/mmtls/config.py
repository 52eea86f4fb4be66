"""Scenario files: one ``key = value`` per line, ``#`` starts a comment.

Omitted keys take the defaults below.  ``mu`` accepts either one value shared
by every layer or a comma-separated list with one value per layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .robust_stats import DEFAULT_C1, DEFAULT_LAMBDA_SIGMA, DEFAULT_NW
from .star_sim import StarScenario

KEYS = (
    "si_len", "rt_len", "isr_db", "snr_db", "impulse_prob", "impulse_var_ratio", "ns",
    "sample_rate_hz", "bandwidth_hz", "seed", "layers", "mu", "gamma", "lambda_sigma",
    "nw", "c1", "exclude_first_layer",
)
SCENARIO_KEYS = {f.name for f in fields(StarScenario)} & set(KEYS)
DEFAULT_MU = 0.002


class ConfigError(ValueError):
    """Bad key, value or range in a scenario file; ``key`` names the culprit."""

    def __init__(self, key: str, message: str, line: int | None = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{key}: {message}{where}")
        self.key = key
        self.line = line


@dataclass(frozen=True)
class Config:
    scenario: StarScenario = field(default_factory=StarScenario)
    layers: int = 3
    mu: tuple[float, ...] = (DEFAULT_MU,)
    gamma: float = 1.0
    lambda_sigma: float = DEFAULT_LAMBDA_SIGMA
    nw: int = DEFAULT_NW
    c1: float = DEFAULT_C1
    exclude_first_layer: bool = False
    # raw text of explicitly set values, echoed back verbatim
    source: tuple[tuple[str, str], ...] = ()

    def layer_mu(self, layers: int | None = None) -> tuple[float, ...]:
        L = self.layers if layers is None else layers
        if len(self.mu) == 1:
            return self.mu * L
        return self.mu[:L]

    def is_set(self, key: str) -> bool:
        return any(k == key for k, _ in self.source)

    def value(self, key: str):
        if key in SCENARIO_KEYS:
            return getattr(self.scenario, key)
        return getattr(self, key)

    def estimator_kwargs(self, layers: int | None = None) -> dict:
        L = self.layers if layers is None else layers
        return dict(layers=L, mu=self.layer_mu(L), gamma=self.gamma, nw=self.nw,
                    lambda_sigma=self.lambda_sigma, c1=self.c1,
                    include_first_layer_in_average=not self.exclude_first_layer or L == 1)

    def echo(self) -> list[str]:
        """Effective configuration as ``key = value`` lines, one per key."""
        raw = dict(self.source)
        return [f"{k} = {raw[k] if k in raw else format_value(self.value(k))}" for k in KEYS]


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(format_value(x) for x in v)
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int(text: str) -> int:
    f = float(text)
    if not f.is_integer():
        raise ValueError(f"not an integer: {text!r}")
    return int(f)


_PARSERS = {
    "si_len": _parse_int, "rt_len": _parse_int, "ns": _parse_int, "seed": _parse_int,
    "layers": _parse_int, "nw": _parse_int, "exclude_first_layer": _parse_bool,
    "mu": lambda t: tuple(float(p) for p in t.split(",")),
}


_INVALID = {
    "si_len": lambda v: v < 1,
    "rt_len": lambda v: v < 1,
    "ns": lambda v: v < 1,
    "seed": lambda v: not 0 <= v < 2**64,
    "layers": lambda v: v < 1,
    "nw": lambda v: v < 2,
    "impulse_prob": lambda v: not 0.0 <= v <= 1.0,
    "impulse_var_ratio": lambda v: v <= 0,
    "sample_rate_hz": lambda v: v <= 0,
    "bandwidth_hz": lambda v: v <= 0,
    "gamma": lambda v: v <= 0,
    "c1": lambda v: v <= 0,
    "lambda_sigma": lambda v: not 0.9 <= v < 1.0,
    "mu": lambda v: not v or any(m <= 0 for m in v),
}


def parse_value(key: str, text: str):
    if key not in KEYS:
        raise ConfigError(key, "unknown key")
    try:
        v = _PARSERS.get(key, float)(text.strip())
        if _INVALID.get(key, lambda _: False)(v):
            raise ValueError(f"value {text.strip()} is out of range")
    except ValueError as exc:
        raise ConfigError(key, str(exc)) from None
    return v


def apply(config: Config, items) -> Config:
    """Overlay ``(key, text[, line])`` items on ``config``; later items win."""
    scen = {}
    other = {}
    source = dict(config.source)
    for item in items:
        key, text = item[0], item[1]
        line = item[2] if len(item) > 2 else None
        try:
            v = parse_value(key, text)
        except ConfigError as exc:
            raise ConfigError(key, str(exc).split(": ", 1)[1], line) from None
        (scen if key in SCENARIO_KEYS else other)[key] = v
        source[key] = text.strip()
    try:
        cfg = replace(config, scenario=replace(config.scenario, **scen), **other,
                      source=tuple((k, source[k]) for k in KEYS if k in source))
    except ValueError as exc:
        raise ConfigError("scenario", str(exc)) from None
    if len(cfg.mu) not in (1, cfg.layers):
        raise ConfigError("mu", f"expected 1 or {cfg.layers} values, got {len(cfg.mu)}")
    if cfg.exclude_first_layer and cfg.layers == 1:
        raise ConfigError("exclude_first_layer", "needs at least two layers")
    return cfg


def parse_text(text: str, base: Config | None = None) -> Config:
    items = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(line.split()[0], "expected 'key = value'", lineno)
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(key, "unknown key", lineno)
        items.append((key, value, lineno))
    return apply(base or Config(), items)


def parse_config(path) -> Config:
    return parse_text(Path(path).read_text())
