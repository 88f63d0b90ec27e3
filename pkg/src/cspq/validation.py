"""Validation reports: a pass flag plus a list of located violations.

Indices are 1-based to match configuration labels ``K = {1, 2, ...}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class Violation:
    kind: str
    index: tuple[int, ...] = ()
    value: Optional[float] = None
    time: Optional[float] = None

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.time is not None:
            out["time"] = self.time
        out["index"] = list(self.index)
        if self.value is not None:
            out["value"] = self.value
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Violation":
        return cls(
            kind=d["kind"],
            index=tuple(d.get("index", ())),
            value=d.get("value"),
            time=d.get("time"),
        )


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.passed

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def merged(self, other: "ValidationReport") -> "ValidationReport":
        return ValidationReport(self.violations + other.violations)

    def to_dict(self) -> dict:
        return {"pass": self.passed, "violations": [v.to_dict() for v in self.violations]}

    @classmethod
    def from_dict(cls, d: dict) -> "ValidationReport":
        return cls(tuple(Violation.from_dict(v) for v in d["violations"]))
