"""Flat ``section.key = value`` run configuration.

Every recognised key has a type and a default; unknown keys are rejected.
Lists are comma separated. Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .kernel import KernelSpec
from .loss import BlendConfig
from .train import TrainConfig


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _list(item):
    def parse(text: str):
        return tuple(item(p.strip()) for p in text.split(",") if p.strip())

    parse.__name__ = f"list[{item.__name__}]"
    return parse


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(_fmt(v) for v in value)
    return str(value)


# key -> (parser, default)
SCHEMA: dict[str, tuple] = {
    "run.seed": (int, 0),
    "kernel.base_scale": (float, 1.0),
    "kernel.width": (float, 4.0),
    "kernel.num_scales": (int, 10),
    "kernel.coefficients": (_list(float), ()),
    "model.hidden": (_list(int), ()),
    "model.activation": (str, "tanh"),
    "model.bias": (_bool, True),
    "loss.alpha_pair": (float, 0.01),
    "loss.alignment_mode": (str, "mean_squared"),
    "train.batch_paired": (int, 200),
    "train.batch_unpaired": (int, 200),
    "train.learning_rate": (float, 1e-3),
    "train.rms_decay": (float, 0.9),
    "train.rms_epsilon": (float, 1e-8),
    "train.epochs_pretrain": (int, 4000),
    "train.epochs_joint": (int, 250),
    "train.validation_fraction": (float, 0.1),
    "train.early_stop_patience": (int, 0),
    "synth.dim": (int, 30),
    "synth.num_points": (int, 100000),
    "synth.num_paired": (int, 50),
    "synth.noise_sigma": (float, math.sqrt(0.1)),
    "synth.num_test": (int, 5000),
    "synth.task_seed": (int, 0),
    "synth.alpha_sweep": (_list(float), ()),
    "toy.num_points": (int, 500),
    "toy.theta_star": (float, 255.0),
    "toy.noise_sigma": (float, 0.1),
    "toy.resolution": (float, 1.0),
    "toy.kernel_scale": (float, 0.1),
    "toy.kernel_width": (float, 0.0),
    "translate.source_embeddings": (str, ""),
    "translate.target_embeddings": (str, ""),
    "translate.lexicon": (str, ""),
    "translate.train_size": (int, 5000),
    "translate.bin_edges": (_list(int), (0, 5000, 20000, 50000, 100000, 200000)),
    "translate.test_per_bin": (int, 400),
    "translate.n_values": (_list(int), (1, 5, 10)),
    "translate.method": (str, "gc"),
    "translate.gc_pool_size": (int, 0),
    "translate.max_unpaired": (int, 0),
    "sweep.command": (str, "synth"),
    "sweep.grid": (str, ""),
    "sweep.jobs": (int, 1),
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=lambda: {k: d for k, (_, d) in SCHEMA.items()})

    def __getitem__(self, key):
        return self.values[key]

    def set(self, key: str, text) -> None:
        """Set ``key`` from a string (or an already-typed value)."""
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        parser, default = SCHEMA[key]
        if not isinstance(text, str):
            text = _fmt(tuple(text) if isinstance(text, list) else text)
        try:
            self.values[key] = parser(text.strip())
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None

    def updated(self, **overrides) -> RunConfig:
        """Copy with overrides; keyword names use ``__`` for the dot."""
        new = RunConfig(dict(self.values))
        for k, v in overrides.items():
            new.set(k.replace("__", "."), v)
        new.validate()
        return new

    @classmethod
    def parse(cls, text: str, source: str = "<config>") -> RunConfig:
        cfg = cls()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            try:
                cfg.set(key.strip(), value)
            except ConfigError as exc:
                raise ConfigError(f"{source}:{lineno}: {exc}") from None
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> RunConfig:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        return cls.parse(text, str(path))

    def to_text(self) -> str:
        return "".join(f"{k} = {_fmt(self.values[k])}\n" for k in sorted(self.values))

    def validate(self) -> None:
        try:
            self.kernel_spec()
            self.train_config()
            self.blend_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self["model.activation"] not in ("identity", "tanh", "relu"):
            raise ConfigError(f"unknown activation {self['model.activation']!r}")
        if self["translate.method"] not in ("nn", "gc"):
            raise ConfigError("translate.method must be 'nn' or 'gc'")
        if self["sweep.command"] not in ("synth", "translate"):
            raise ConfigError("sweep.command must be 'synth' or 'translate'")
        if self["toy.resolution"] <= 0 or self["toy.kernel_scale"] <= 0:
            raise ConfigError("toy.resolution and toy.kernel_scale must be positive")
        if self["synth.num_test"] < 1:
            raise ConfigError("synth.num_test must be positive")
        if any(not 0 <= a <= 1 for a in self["synth.alpha_sweep"]):
            raise ConfigError("synth.alpha_sweep values must lie in [0, 1]")
        if self["sweep.jobs"] < 1:
            raise ConfigError("sweep.jobs must be positive")
        self.grid()

    def kernel_spec(self) -> KernelSpec:
        return KernelSpec(self["kernel.base_scale"], self["kernel.width"], self["kernel.num_scales"],
                          self["kernel.coefficients"])

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            alpha_pair=self["loss.alpha_pair"],
            batch_paired=self["train.batch_paired"],
            batch_unpaired=self["train.batch_unpaired"],
            learning_rate=self["train.learning_rate"],
            rms_decay=self["train.rms_decay"],
            rms_epsilon=self["train.rms_epsilon"],
            epochs_pretrain=self["train.epochs_pretrain"],
            epochs_joint=self["train.epochs_joint"],
            seed=self["run.seed"],
            validation_fraction=self["train.validation_fraction"],
            early_stop_patience=self["train.early_stop_patience"],
        )

    def blend_config(self) -> BlendConfig:
        return BlendConfig(self["loss.alpha_pair"], self["loss.alignment_mode"])

    def grid(self) -> list[tuple[str, tuple[str, ...]]]:
        """Parsed ``sweep.grid``: ``key=v1,v2;key2=v3`` -> [(key, (v1, v2)), ...]."""
        out = []
        for part in self["sweep.grid"].split(";"):
            part = part.strip()
            if not part:
                continue
            if "=" not in part:
                raise ConfigError(f"bad sweep.grid entry {part!r}")
            key, vals = (s.strip() for s in part.split("=", 1))
            if key not in SCHEMA or key.startswith("sweep.") or SCHEMA[key][0].__name__.startswith("list"):
                raise ConfigError(f"cannot sweep over {key!r}")
            values = tuple(v.strip() for v in vals.split(",") if v.strip())
            if not values:
                raise ConfigError(f"empty value list for {key}")
            for v in values:
                try:
                    SCHEMA[key][0](v)
                except ValueError as exc:
                    raise ConfigError(f"bad sweep value for {key}: {exc}") from None
            out.append((key, values))
        return out
