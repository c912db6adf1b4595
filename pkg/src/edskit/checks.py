"""Tri-state outcomes shared by every check in the package."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable

from .expr.numeric import Verdict, ZeroResult


class Status(enum.Enum):
    OK = "ok"
    FAIL = "fail"
    INDETERMINATE = "indeterminate"

    @staticmethod
    def all_of(statuses: Iterable["Status"]) -> "Status":
        statuses = list(statuses)
        if Status.FAIL in statuses:
            return Status.FAIL
        if Status.INDETERMINATE in statuses:
            return Status.INDETERMINATE
        return Status.OK

    @staticmethod
    def from_zero(result: ZeroResult) -> "Status":
        """Status of the claim "this expression vanishes"."""
        return {Verdict.ZERO: Status.OK, Verdict.NONZERO: Status.FAIL,
                Verdict.UNKNOWN: Status.INDETERMINATE}[result.verdict]

    @staticmethod
    def of(flag: bool) -> "Status":
        return Status.OK if flag else Status.FAIL


@dataclass
class Check:
    """One named condition with its outcome and optional detail."""

    name: str
    status: Status
    detail: str = ""
    certification: str = "numeric"
    data: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status is Status.OK

    def to_dict(self) -> dict:
        out = {"name": self.name, "status": self.status.value, "certification": self.certification}
        if self.detail:
            out["detail"] = self.detail
        if self.data:
            out["data"] = self.data
        return out


def zero_check(name: str, result: ZeroResult, detail: str = "") -> Check:
    cert = result.certification if result.certification != "none" else "numeric"
    if not detail and result.reason:
        detail = result.reason
    data = {"witness": result.witness} if result.witness else {}
    return Check(name, Status.from_zero(result), detail, cert, data)
