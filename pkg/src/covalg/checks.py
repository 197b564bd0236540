"""Named pass/fail records shared by the verification routines and the CLI."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    residual: float = 0.0
    certificate: Any = None

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "status": "pass" if self.passed else "fail",
            "residual": sig3(self.residual),
            "certificate": self.certificate,
        }


def sig3(x: float) -> float:
    x = float(abs(x))
    if x == 0.0 or x != x or x == float("inf"):
        return x
    return float(f"{x:.3g}")


def residual_check(name: str, residual: float, tol: float, certificate: Any = None) -> Check:
    return Check(name, bool(residual <= tol), float(residual), certificate)


@dataclass
class Report:
    """Ordered collection of checks plus free-form data."""

    checks: list[Check] = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, checks) -> None:
        self.checks.extend(checks)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)
