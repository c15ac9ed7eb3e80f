"""Threshold functions ``phi: N -> R+``.

Four forms are supported, each optionally multiplied by a positive ``scale``:

=========== ======================= ==========================
form        parameters              phi(n)
=========== ======================= ==========================
power       c, k                    c * n**k
geometric   C, B                    C * B**n
doubly      c, b                    c ** (b**n)
table       values                  values[n - 1]
=========== ======================= ==========================

Values are evaluated through their logarithm so that doubly-exponential
thresholds overflow to ``inf`` instead of raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

from cfml.errors import DomainError

FORMS = ("power", "geometric", "doubly", "table")
_PARAMS = {
    "power": ("c", "k"),
    "geometric": ("C", "B"),
    "doubly": ("c", "b"),
    "table": ("values",),
}


@dataclass(frozen=True)
class PhiSpec:
    form: str
    params: Mapping[str, Any] = field(default_factory=dict)
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.form not in FORMS:
            raise DomainError(f"unknown phi form {self.form!r}; expected one of {FORMS}")
        expected = set(_PARAMS[self.form])
        got = set(self.params)
        if got != expected:
            raise DomainError(f"phi form {self.form!r} takes parameters {sorted(expected)}, got {sorted(got)}")
        if not self.scale > 0:
            raise DomainError("phi scale must be positive")
        if self.form == "table":
            values = tuple(float(v) for v in self.params["values"])
            if not values or any(not v > 0 for v in values):
                raise DomainError("table values must be positive")
            if any(b < a for a, b in zip(values, values[1:])):
                raise DomainError("table phi must be non-decreasing")
            object.__setattr__(self, "params", {"values": values})
        else:
            params = {k: float(v) for k, v in self.params.items()}
            if self.form == "power" and params["k"] < 0:
                raise DomainError("power phi needs k >= 0")
            if any(not v > 0 for name, v in params.items() if not (self.form == "power" and name == "k")):
                raise DomainError("phi parameters must be positive")
            if self.form == "geometric" and params["B"] < 1:
                raise DomainError("geometric phi needs B >= 1 to be non-decreasing")
            if self.form == "doubly" and (params["b"] < 1 or params["c"] < 1):
                raise DomainError("doubly phi needs b >= 1 and c >= 1 to be non-decreasing")
            object.__setattr__(self, "params", params)

    # constructors -------------------------------------------------------
    @classmethod
    def power(cls, c: float, k: float, scale: float = 1.0) -> "PhiSpec":
        return cls("power", {"c": c, "k": k}, scale)

    @classmethod
    def geometric(cls, C: float, B: float, scale: float = 1.0) -> "PhiSpec":
        return cls("geometric", {"C": C, "B": B}, scale)

    @classmethod
    def doubly(cls, c: float, b: float, scale: float = 1.0) -> "PhiSpec":
        return cls("doubly", {"c": c, "b": b}, scale)

    @classmethod
    def table(cls, values, scale: float = 1.0) -> "PhiSpec":
        return cls("table", {"values": tuple(values)}, scale)

    @classmethod
    def constant(cls, c: float) -> "PhiSpec":
        return cls.power(c, 0)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "PhiSpec":
        d = dict(d)
        try:
            form = d.pop("form")
        except KeyError:
            raise DomainError("phi needs a 'form' field") from None
        scale = float(d.pop("scale", 1.0))
        return cls(form, d, scale)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"form": self.form}
        out.update({k: (list(v) if isinstance(v, tuple) else v) for k, v in self.params.items()})
        if self.scale != 1.0:
            out["scale"] = self.scale
        return out

    # evaluation ---------------------------------------------------------
    @property
    def symbolic(self) -> bool:
        return self.form != "table"

    def log_value(self, n: int) -> float:
        """``log phi(n)``; may be ``inf`` for doubly-exponential forms."""
        if n < 1:
            raise DomainError("phi is defined on n >= 1")
        p = self.params
        ls = math.log(self.scale)
        if self.form == "power":
            return ls + math.log(p["c"]) + p["k"] * math.log(n)
        if self.form == "geometric":
            return ls + math.log(p["C"]) + n * math.log(p["B"])
        if self.form == "doubly":
            try:
                return ls + (p["b"] ** n) * math.log(p["c"])
            except OverflowError:
                return math.inf
        values = p["values"]
        if n > len(values):
            raise DomainError(f"table phi has {len(values)} values; n = {n} is out of range")
        return ls + math.log(values[n - 1])

    def __call__(self, n: int) -> float:
        lv = self.log_value(n)
        if lv > 709.0:
            return math.inf
        p = self.params
        if self.form == "power":
            base = math.sqrt(n) if p["k"] == 0.5 else float(n) ** p["k"]
            return self.scale * p["c"] * base
        if self.form == "geometric":
            return self.scale * p["C"] * p["B"] ** n
        if self.form == "table":
            return self.scale * p["values"][n - 1]
        try:
            return self.scale * p["c"] ** (p["b"] ** n)
        except OverflowError:
            return math.inf
