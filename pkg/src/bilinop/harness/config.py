"""Experiment configuration: defaults per experiment, JSON files and flag overrides."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

from ..exceptions import PreconditionError

KINDS = ("lp-check", "counterexample", "norm-probe", "paraproduct", "bench")


@dataclass(frozen=True)
class ExperimentConfig:
    """Every knob of every experiment.

    Fields unused by an experiment are still embedded in its report, so a
    report always names the exact configuration that produced it.
    """

    kind: str = "counterexample"
    n: int = 32768
    scale_l: float = 12.0
    order: int = 4
    seed: int = 0
    trials: int = 8
    s: float = 1.0
    p: float = 4.0
    q: float = 4.0
    t: float = 2.0
    # counterexample
    j_min: int = 4
    j_max: int = 9
    coefficients: object = "ones"
    m_values: tuple = (4, 8, 16)
    strategy: str = "sparse"
    # norm probe
    symbol: str = "reduced"
    sizes: tuple = (4096, 8192, 16384)
    scale_exponents: tuple = (4, 5, 6, 7, 8, 9)
    band_width: float = 0.25
    low_band: float = 2.0
    s_values: tuple = ()
    # paraproduct study
    epsilon: float = 0.1
    # bench
    kernel_width: float = 6.0
    sparse_nnz: int = 32
    repeats: int = 3

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PreconditionError(f"unknown experiment kind {self.kind!r}")
        for name in ("m_values", "sizes", "scale_exponents"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        object.__setattr__(self, "s_values", tuple(float(v) for v in self.s_values))
        if isinstance(self.coefficients, list):
            object.__setattr__(self, "coefficients", tuple(float(v) for v in self.coefficients))
        if self.trials < 1:
            raise PreconditionError("trials must be >= 1")

    @classmethod
    def defaults_for(cls, kind: str) -> "ExperimentConfig":
        presets = {
            "lp-check": dict(n=4096),
            "counterexample": dict(),
            "norm-probe": dict(scale_l=1.0, s=1.0, p=4.0, q=4.0, t=2.0, trials=6, strategy="auto"),
            "paraproduct": dict(scale_exponents=(5, 6, 7, 8, 9, 10), s=1.0, p=4.0, q=4.0, t=2.0,
                                trials=4, strategy="auto"),
            "bench": dict(sizes=(1024, 2048, 4096), strategy="auto"),
        }
        if kind not in presets:
            raise PreconditionError(f"unknown experiment kind {kind!r}")
        return cls(kind=kind, **presets[kind])

    def replace(self, **overrides) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise PreconditionError(f"unknown config keys: {sorted(unknown)}")
        return dataclasses.replace(self, **{k: v for k, v in overrides.items() if v is not None})

    @classmethod
    def load(cls, kind: str, path=None, **overrides) -> "ExperimentConfig":
        """Preset for ``kind``, then the JSON file at ``path``, then ``overrides``."""
        cfg = cls.defaults_for(kind)
        if path is not None:
            with open(path) as fh:
                data = json.load(fh)
            if not isinstance(data, dict):
                raise PreconditionError("config file must hold a JSON object")
            data.pop("kind", None)
            cfg = cfg.replace(**data)
        return cfg.replace(**overrides)

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out
