"""Pass/fail bookkeeping shared by the verification routines."""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag}  {self.name}" + (f"  {self.detail}" if self.detail else "")


@dataclass
class Report:
    title: str
    checks: list[Check] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def add(self, name: str, passed: bool, detail: str = "") -> Check:
        check = Check(name, bool(passed), detail)
        self.checks.append(check)
        return check

    def extend(self, other: "Report") -> None:
        self.checks.extend(other.checks)
        self.notes.extend(other.notes)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def __len__(self) -> int:
        return len(self.checks)

    def lines(self, verbose: bool = True) -> list[str]:
        out = [f"# {note}" for note in self.notes]
        if verbose:
            out.extend(c.line() for c in self.checks)
        else:
            out.extend(c.line() for c in self.failures)
        n_fail = len(self.failures)
        out.append(f"{'PASS' if n_fail == 0 else 'FAIL'}  {self.title}: "
                   f"{len(self.checks) - n_fail}/{len(self.checks)} checks passed")
        return out
