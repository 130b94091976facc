"""Outcome record returned by every verifier."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

REPORT_COLUMNS = ("check", "lhs", "rhs", "margin", "witness", "samples", "tolerance", "seed")


@dataclass(frozen=True)
class CheckReport:
    """Result of one inequality verification.

    ``margin`` is the slack of the inequality, oriented so that a
    non-negative value means the inequality holds.  Each verifier documents
    whether it is absolute or relative.  ``satisfied`` is always
    ``margin >= -tolerance``.
    """

    check: str
    lhs: float
    rhs: float
    margin: float
    tolerance: float
    witness: str = ""
    samples_checked: int = 1
    seed: int | None = None
    notes: tuple[str, ...] = ()
    details: dict[str, Any] = field(default_factory=dict, compare=False, repr=False)

    @property
    def satisfied(self) -> bool:
        return bool(self.margin >= -self.tolerance)

    def row(self) -> dict[str, str]:
        """CSV row with a fixed, locale-independent float format."""
        return {
            "check": self.check,
            "lhs": _fmt(self.lhs),
            "rhs": _fmt(self.rhs),
            "margin": _fmt(self.margin),
            "witness": self.witness,
            "samples": str(self.samples_checked),
            "tolerance": _fmt(self.tolerance),
            "seed": "" if self.seed is None else str(self.seed),
        }

    def summary(self) -> str:
        status = "PASS" if self.satisfied else "FAIL"
        line = (
            f"{status} {self.check}: lhs={_fmt(self.lhs)} rhs={_fmt(self.rhs)} "
            f"margin={_fmt(self.margin)} tol={_fmt(self.tolerance)} n={self.samples_checked}"
        )
        if self.witness:
            line += f" witness={self.witness}"
        for note in self.notes:
            line += f" [{note}]"
        return line


def _fmt(x: float) -> str:
    return repr(float(x))


def merge_worst(reports: list[CheckReport], check: str | None = None) -> CheckReport:
    """Merge partial reports of the same check by keeping the worst margin."""
    if not reports:
        raise ValueError("nothing to merge")
    worst = min(reports, key=lambda r: r.margin)
    total = sum(r.samples_checked for r in reports)
    return CheckReport(
        check=check or worst.check,
        lhs=worst.lhs,
        rhs=worst.rhs,
        margin=worst.margin,
        tolerance=worst.tolerance,
        witness=worst.witness,
        samples_checked=total,
        seed=worst.seed,
        notes=worst.notes,
        details=worst.details,
    )
