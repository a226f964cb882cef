"""Structured pass/fail results shared by all verification modules."""

from dataclasses import dataclass, field


@dataclass
class CheckReport:
    name: str
    passed: bool
    max_violation: float = 0.0
    constants: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "max_violation": float(self.max_violation),
            "constants": {k: _plain(v) for k, v in self.constants.items()},
            "notes": list(self.notes),
        }


def _plain(v):
    try:
        return float(v)
    except (TypeError, ValueError):
        return v
