"""Verification outcomes shared by every checker."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Optional


class Status(str, enum.Enum):
    PROVED = "PROVED"    # exact quantification over all times and states
    SAMPLED = "SAMPLED"  # passed on a horizon / sample grid only
    FAIL = "FAIL"


@dataclass(frozen=True)
class Verdict:
    """Outcome of a check.

    Truthy unless the status is ``FAIL``. A failing verdict always carries a
    ``witness`` dict from which the violation can be replayed.
    """

    status: Status
    witness: Optional[dict] = None
    detail: str = ""
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status is Status.FAIL and self.witness is None:
            raise ValueError("a failing verdict needs a witness")

    def __bool__(self):
        return self.status is not Status.FAIL

    @property
    def passed(self) -> bool:
        return bool(self)

    @property
    def exact(self) -> bool:
        return self.status is Status.PROVED

    @classmethod
    def ok(cls, exact: bool, detail: str = "", **notes: Any) -> "Verdict":
        return cls(Status.PROVED if exact else Status.SAMPLED, None, detail, notes)

    @classmethod
    def fail(cls, witness: dict, detail: str = "", **notes: Any) -> "Verdict":
        return cls(Status.FAIL, witness, detail, notes)


def combine(verdicts, detail: str = "") -> Verdict:
    """First failure wins; otherwise PROVED only if every part was PROVED."""
    verdicts = list(verdicts)
    for v in verdicts:
        if not v:
            return v
    return Verdict.ok(all(v.exact for v in verdicts), detail)
