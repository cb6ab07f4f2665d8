"""Model, window and training configuration plus the ``key = value`` config file."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields

DEFAULT_MUS = (1.0, 0.9, 0.7, 0.5, 0.3, 0.1, -0.1, -0.3, -0.5, -0.7, -0.9)

# re-ranking depths: passage runs use the full candidate list, document runs tuned values
DEPTH_PRESETS = {
    "passage": 1000,
    "document-doctrain": 29,
    "document-passagetrain": 60,
    "document-windowed": 31,
}
TUNED_DOCUMENT_DEPTHS = (29, 60, 31)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TKConfig:
    d_emb: int = 300
    layers: int = 2
    heads: int = 16
    head_dim: int = 32
    ff_dim: int = 100
    kernel_mus: tuple = DEFAULT_MUS
    kernel_sigma: float = 0.1
    log_base: float = 2.0
    log_eps: float = 1e-10
    query_cap: int = 30
    doc_cap: int = 200
    min_occurrence: int = 5
    windowed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kernel_mus", tuple(float(m) for m in self.kernel_mus))
        if not self.kernel_mus:
            raise ConfigError("kernel_mus must contain at least one center")
        if any(not -1.0 <= m <= 1.0 for m in self.kernel_mus):
            raise ConfigError("kernel centers must lie in [-1, 1]")
        if self.kernel_sigma <= 0:
            raise ConfigError("kernel_sigma must be positive")
        if self.log_base <= 1:
            raise ConfigError("log_base must be > 1")
        for name in ("d_emb", "layers", "heads", "head_dim", "ff_dim", "query_cap", "doc_cap", "min_occurrence"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")

    @property
    def n_kernels(self):
        return len(self.kernel_mus)

    @classmethod
    def small(cls, **overrides):
        """Desk-scale model used by the synthetic experiments."""
        base = dict(d_emb=32, layers=1, heads=2, head_dim=8, ff_dim=32, query_cap=16, doc_cap=64,
                    min_occurrence=1)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def tiny(cls, **overrides):
        """Smallest configuration exercising every parameter; used for gradient checks."""
        base = dict(d_emb=8, layers=1, heads=2, head_dim=4, ff_dim=6, kernel_mus=(0.9, 0.3, -0.3),
                    query_cap=4, doc_cap=6, min_occurrence=1)
        base.update(overrides)
        return cls(**base)


@dataclass(frozen=True)
class WindowConfig:
    sizes: tuple = (20, 30, 50, 100)
    strides: tuple = ()  # empty: half of each size
    top_r: int = 5

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        strides = tuple(int(s) for s in self.strides) or tuple(max(1, s // 2) for s in self.sizes)
        object.__setattr__(self, "strides", strides)
        if not self.sizes:
            raise ConfigError("window sizes must not be empty")
        if len(self.strides) != len(self.sizes):
            raise ConfigError("window strides must match window sizes")
        if any(s < 1 for s in self.sizes) or any(s < 1 for s in self.strides):
            raise ConfigError("window sizes and strides must be >= 1")
        if any(st > sz for sz, st in zip(self.sizes, self.strides)):
            raise ConfigError("a window stride may not exceed its window size")
        if self.top_r < 1:
            raise ConfigError("top_r must be >= 1")


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    margin: float = 1.0
    lr_a: float = 1e-4  # embeddings and contextualization
    lr_b: float = 1e-3  # all other weights
    validate_every: int = 100
    patience: int = 4
    max_steps: int = 10000
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.margin <= 0:
            raise ConfigError("margin must be positive")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")
        if self.validate_every < 1 or self.max_steps < 0:
            raise ConfigError("validate_every must be >= 1 and max_steps >= 0")


@dataclass
class RunConfig:
    model: TKConfig = field(default_factory=TKConfig)
    window: WindowConfig = field(default_factory=WindowConfig)
    train: TrainConfig = field(default_factory=TrainConfig)


_SECTIONS = {"model": TKConfig, "window": WindowConfig, "train": TrainConfig}


_INT_TUPLES = {"sizes", "strides"}


def _coerce(raw, default, name):
    raw = raw.strip()
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if isinstance(default, tuple):
        items = [x.strip() for x in raw.split(",") if x.strip()]
        conv = int if name in _INT_TUPLES else float
        return tuple(conv(x) for x in items)
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def apply_overrides(config, pairs):
    """Return a new :class:`RunConfig` with ``section.key -> raw string`` pairs applied."""
    updates = {name: {} for name in _SECTIONS}
    for key, raw in pairs:
        section, _, name = key.strip().partition(".")
        cls = _SECTIONS.get(section)
        if cls is None or name not in {f.name for f in fields(cls)}:
            raise ConfigError(f"unknown config key {key!r}")
        default = getattr(getattr(config, section), name)
        try:
            updates[section][name] = _coerce(raw, default, name)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
    if "sizes" in updates["window"] and "strides" not in updates["window"]:
        updates["window"]["strides"] = ()
    try:
        return RunConfig(
            model=dataclasses.replace(config.model, **updates["model"]),
            window=dataclasses.replace(config.window, **updates["window"]),
            train=dataclasses.replace(config.train, **updates["train"]),
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def parse_config_text(text, base=None):
    pairs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        pairs.append((key.strip(), value))
    return apply_overrides(base or RunConfig(), pairs)


def load_config(path, base=None):
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), base)


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(v) for v in value)
    return repr(value)


def dump_config(config):
    lines = []
    for section in _SECTIONS:
        obj = getattr(config, section)
        for f in fields(obj):
            lines.append(f"{section}.{f.name} = {_format(getattr(obj, f.name))}")
    return "\n".join(lines) + "\n"


def config_to_dict(obj):
    return {f.name: (list(v) if isinstance(v := getattr(obj, f.name), tuple) else v) for f in fields(obj)}


def config_from_dict(cls, data):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
    return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in data.items()})


def config_mismatch(expected, actual):
    """Name of the first field that differs between two config objects, or None."""
    for f in fields(expected):
        if getattr(expected, f.name) != getattr(actual, f.name):
            return f.name
    return None
