"""Flat, named, bounded, transform-aware hyperparameter vectors.

Optimizers work on the transformed values: log-transformed entries are
optimized as log(value), identity entries as-is.  Positive-only quantities
(variances, lengthscales, oscillator mass/damping/frequency) use the log
transform so that bound-constrained quasi-Newton steps stay well scaled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError

TRANSFORMS = ("log", "identity")


@dataclass(frozen=True)
class Param:
    """A single named hyperparameter with box bounds and a transform."""

    name: str
    value: float
    lower: float
    upper: float
    transform: str = "identity"

    def validate(self) -> None:
        if self.transform not in TRANSFORMS:
            raise ConfigError(f"parameter {self.name!r}: unknown transform {self.transform!r}")
        for label, v in (("value", self.value), ("lower", self.lower), ("upper", self.upper)):
            if not math.isfinite(float(v)):
                raise ConfigError(f"parameter {self.name!r}: non-finite {label} {v!r}")
        if self.transform == "log" and self.lower <= 0:
            raise ConfigError(
                f"parameter {self.name!r}: log transform requires lower bound > 0, got {self.lower}"
            )
        if not (self.lower <= self.value <= self.upper):
            raise ConfigError(
                f"parameter {self.name!r}: value {self.value} outside bounds "
                f"[{self.lower}, {self.upper}]"
            )

    def to_transformed(self) -> float:
        return math.log(self.value) if self.transform == "log" else self.value

    def from_transformed(self, t: float) -> float:
        v = math.exp(t) if self.transform == "log" else t
        # exp(log(x)) can land one ulp outside the box; clamp back in.
        return min(max(v, self.lower), self.upper)


class ParamVector:
    """Ordered collection of :class:`Param` entries with unique names."""

    def __init__(self, params):
        self._params = tuple(params)
        seen = set()
        for p in self._params:
            p.validate()
            if p.name in seen:
                raise ConfigError(f"duplicate parameter name {p.name!r}")
            seen.add(p.name)
        self._index = {p.name: i for i, p in enumerate(self._params)}

    def __len__(self):
        return len(self._params)

    def __iter__(self):
        return iter(self._params)

    def __contains__(self, name):
        return name in self._index

    def __getitem__(self, name) -> Param:
        try:
            return self._params[self._index[name]]
        except KeyError:
            raise ConfigError(f"unknown parameter {name!r}") from None

    def __eq__(self, other):
        return isinstance(other, ParamVector) and self._params == other._params

    def __repr__(self):
        body = ", ".join(f"{p.name}={p.value:.6g}" for p in self._params)
        return f"ParamVector({body})"

    @property
    def names(self) -> list:
        return [p.name for p in self._params]

    def index(self, name) -> int:
        if name not in self._index:
            raise ConfigError(f"unknown parameter {name!r}")
        return self._index[name]

    def value(self, name) -> float:
        return self[name].value

    def values(self) -> np.ndarray:
        return np.array([p.value for p in self._params], dtype=float)

    def transformed(self) -> np.ndarray:
        return np.array([p.to_transformed() for p in self._params], dtype=float)

    def transformed_bounds(self) -> list:
        out = []
        for p in self._params:
            if p.transform == "log":
                out.append((math.log(p.lower), math.log(p.upper)))
            else:
                out.append((p.lower, p.upper))
        return out

    def with_transformed(self, vec) -> "ParamVector":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (len(self._params),):
            raise ConfigError(f"expected {len(self._params)} transformed values, got {vec.shape}")
        return ParamVector(
            replace(p, value=p.from_transformed(float(t))) for p, t in zip(self._params, vec)
        )

    def with_values(self, updates: dict) -> "ParamVector":
        unknown = set(updates) - set(self._index)
        if unknown:
            raise ConfigError(f"unknown parameter(s) {sorted(unknown)}")
        return ParamVector(
            replace(p, value=float(updates.get(p.name, p.value))) for p in self._params
        )

    def extended(self, extra) -> "ParamVector":
        return ParamVector(list(self._params) + list(extra))

    def subset(self, names) -> "ParamVector":
        return ParamVector(self[n] for n in names)

    def to_dicts(self) -> list:
        return [
            {
                "name": p.name,
                "value": p.value,
                "lower": p.lower,
                "upper": p.upper,
                "transform": p.transform,
            }
            for p in self._params
        ]

    @classmethod
    def from_dicts(cls, dicts) -> "ParamVector":
        return cls(
            Param(
                name=d["name"],
                value=float(d["value"]),
                lower=float(d["lower"]),
                upper=float(d["upper"]),
                transform=d.get("transform", "identity"),
            )
            for d in dicts
        )


def apply_overrides(params: ParamVector, overrides: dict | None) -> ParamVector:
    """Rebuild a ParamVector with per-name overrides of value/lower/upper.

    ``overrides`` maps parameter name to either a number (new value) or a
    mapping with any of the keys ``value``, ``lower``, ``upper``.
    """
    if not overrides:
        return params
    unknown = set(overrides) - set(params.names)
    if unknown:
        raise ConfigError(f"override for unknown parameter(s) {sorted(unknown)}")
    rebuilt = []
    for p in params:
        o = overrides.get(p.name)
        if o is None:
            rebuilt.append(p)
            continue
        if isinstance(o, (int, float)):
            o = {"value": float(o)}
        lower = float(o.get("lower", p.lower))
        upper = float(o.get("upper", p.upper))
        value = float(o.get("value", min(max(p.value, lower), upper)))
        rebuilt.append(replace(p, value=value, lower=lower, upper=upper))
    return ParamVector(rebuilt)
