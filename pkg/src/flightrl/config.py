"""Flat key-value config and scenario files.

Both formats are plain text, one `key = value` per line, `#` comments,
chosen so run manifests stay diff-friendly. Unknown keys are rejected.
"""

import math
from dataclasses import dataclass, replace

from .envmdp import Envelope, HyperParameters


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


def parse_kv_file(path):
    """Parse `key = value` lines; returns an ordered dict of strings."""
    values = {}
    try:
        with open(path) as f:
            for line_no, raw in enumerate(f, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
                key, _, value = line.partition("=")
                values[key.strip()] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return values


def _parse_bool(value, key):
    if value.lower() in ("true", "1", "yes", "on"):
        return True
    if value.lower() in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


ENVELOPE_KEYS = {
    "alpha_min_deg": ("alpha_min", lambda v: math.radians(float(v))),
    "alpha_max_deg": ("alpha_max", lambda v: math.radians(float(v))),
    "height_min": ("height_min", float),
    "height_max": ("height_max", float),
    "mach_min": ("mach_min", float),
    "mach_max": ("mach_max", float),
}

EXTRA_KEYS = {
    "command": float,
    "grid_alpha": int,
    "grid_mach": int,
    "grid_height": int,
    "lqr_q_weight": float,
    "lqr_r_weight": float,
}

EXTRA_DEFAULTS = {
    "command": 100.0,
    "grid_alpha": 5,
    "grid_mach": 5,
    "grid_height": 5,
    # diag weight on the pitch-rate state; larger values give faster but
    # more violent transients that can leave the envelope from far-off-trim
    # starts, see the baseline design notes
    "lqr_q_weight": 0.02,
    "lqr_r_weight": 1.0,
}


@dataclass
class ExperimentConfig:
    """Validated experiment settings: hyperparameters, envelope, extras."""

    hp: HyperParameters
    envelope: Envelope
    extras: dict

    @classmethod
    def default(cls):
        return cls(HyperParameters(), Envelope(), dict(EXTRA_DEFAULTS))

    @classmethod
    def load(cls, path):
        raw = parse_kv_file(path)
        hp = HyperParameters()
        env = Envelope()
        extras = dict(EXTRA_DEFAULTS)
        hp_fields = {f: type(getattr(hp, f)) for f in HyperParameters.field_names()}
        for key, value in raw.items():
            try:
                if key in hp_fields:
                    caster = hp_fields[key]
                    hp = replace(hp, **{key: caster(value)})
                elif key in ENVELOPE_KEYS:
                    attr, caster = ENVELOPE_KEYS[key]
                    env = replace(env, **{attr: caster(value)})
                elif key in EXTRA_KEYS:
                    extras[key] = EXTRA_KEYS[key](value)
                else:
                    raise ConfigError(f"{path}: unknown config key {key!r}")
            except (ValueError, TypeError) as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"{path}: bad value for {key}: {value!r}") from exc
        try:
            hp.validate()
            env.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return cls(hp, env, extras)

    def snapshot_lines(self):
        """All effective settings as `config.key = value` lines."""
        lines = []
        for name in HyperParameters.field_names():
            lines.append(f"config.{name} = {getattr(self.hp, name)!r}")
        for name in ("alpha_min", "alpha_max", "height_min", "height_max",
                     "mach_min", "mach_max"):
            lines.append(f"config.envelope.{name} = {getattr(self.envelope, name)!r}")
        for key in sorted(self.extras):
            lines.append(f"config.{key} = {self.extras[key]!r}")
        return lines


@dataclass
class Scenario:
    """Initial condition and mode flags for evaluation runs."""

    alpha: float | None = None      # rad; None means sample uniformly
    mach: float | None = None
    height: float | None = None
    command: float = 100.0
    shaped: bool = True
    action_mode: str = "gains"
    normalize: bool = True
    seed: int | None = None

    def initial(self, rng, envelope):
        alpha = self.alpha if self.alpha is not None else rng.uniform(
            envelope.alpha_min, envelope.alpha_max)
        mach = self.mach if self.mach is not None else rng.uniform(
            envelope.mach_min, envelope.mach_max)
        height = self.height if self.height is not None else rng.uniform(
            envelope.height_min, envelope.height_max)
        return alpha, mach, height


def load_scenario(path):
    raw = parse_kv_file(path)
    sc = Scenario()

    def maybe(key, cast):
        value = raw.pop(key)
        return None if value.lower() == "random" else cast(value)

    try:
        if "alpha_deg" in raw:
            sc.alpha = maybe("alpha_deg", lambda v: math.radians(float(v)))
        if "mach" in raw:
            sc.mach = maybe("mach", float)
        if "height" in raw:
            sc.height = maybe("height", float)
        if "command" in raw:
            sc.command = float(raw.pop("command"))
        if "shaped" in raw:
            sc.shaped = _parse_bool(raw.pop("shaped"), "shaped")
        if "normalize" in raw:
            sc.normalize = _parse_bool(raw.pop("normalize"), "normalize")
        if "action_mode" in raw:
            sc.action_mode = raw.pop("action_mode")
            if sc.action_mode not in ("gains", "direct_fin"):
                raise ConfigError(f"{path}: bad action_mode {sc.action_mode!r}")
        if "seed" in raw:
            sc.seed = int(raw.pop("seed"))
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: bad scenario value: {exc}") from exc
    if raw:
        raise ConfigError(f"{path}: unknown scenario keys {sorted(raw)}")
    return sc
