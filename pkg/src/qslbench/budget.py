"""Quantum-resource accounting: shot budgets, split checks, prices, walltime.

The unit of cost is one single-shot measurement; a dataset of n instances
with M snapshots each spends n*M shots. Prices are carried as decimals so
cost arithmetic is exact. The built-in rate table ships as a data file
(data/rates.csv) and can be replaced without code changes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from decimal import Decimal
from importlib import resources

SECONDS_PER_DAY = 86_400


class BudgetViolation(RuntimeError):
    """Raised by callers that refuse to proceed past a violated budget."""

    def __init__(self, report: "BudgetReport | None" = None, message: str | None = None):
        super().__init__(message if message is not None else str(report))
        self.report = report


@dataclass(frozen=True)
class BudgetReport:
    ok: bool
    spent_shots: int
    total_shots: int

    @property
    def overage(self) -> int:
        return max(0, self.spent_shots - self.total_shots)

    def __str__(self) -> str:
        if self.ok:
            return f"ok: spent {self.spent_shots} of {self.total_shots} shots"
        return (
            f"budget violated: spent {self.spent_shots} of {self.total_shots} shots "
            f"(overage {self.overage})"
        )


@dataclass
class ResourceBudget:
    """Shot cap plus the ledger of (purpose, n, M) allocations against it."""

    total_shots: int
    allocations: list[tuple[str, int, int]] = field(default_factory=list)

    @property
    def spent_shots(self) -> int:
        return sum(n * m for _, n, m in self.allocations)

    def allocate(self, purpose: str, n: int, m: int) -> None:
        """Record an allocation; refuses to overrun the cap."""
        if n < 0 or m < 0:
            raise ValueError("allocation sizes must be non-negative")
        if self.spent_shots + n * m > self.total_shots:
            probe = ResourceBudget(self.total_shots, [*self.allocations, (purpose, n, m)])
            raise BudgetViolation(validate_budget(probe))
        self.allocations.append((purpose, n, m))

    def to_dict(self) -> dict:
        return {
            "total_shots": self.total_shots,
            "allocations": [list(a) for a in self.allocations],
            "spent_shots": self.spent_shots,
        }


def validate_budget(budget: ResourceBudget) -> BudgetReport:
    """Recompute spent shots from the allocation list and compare to the cap."""
    spent = budget.spent_shots
    return BudgetReport(spent <= budget.total_shots, spent, budget.total_shots)


@dataclass(frozen=True)
class SplitCheck:
    ok: bool
    lhs: int  # n_pre*M_pre + n_sft*M_sft
    rhs: int  # n*M

    @property
    def mismatch(self) -> int:
        return self.lhs - self.rhs


def ssl_split_check(n_pre: int, m_pre: int, n_sft: int, m_sft: int, n: int, m: int) -> SplitCheck:
    """Exact integer check of n_pre*M_pre + n_sft*M_sft = n*M."""
    for v in (n_pre, m_pre, n_sft, m_sft, n, m):
        if v < 0:
            raise ValueError("split sizes must be non-negative")
    lhs = n_pre * m_pre + n_sft * m_sft
    rhs = n * m
    return SplitCheck(lhs == rhs, lhs, rhs)


@dataclass(frozen=True)
class MachineRate:
    name: str
    system_size: int
    price_per_shot: Decimal | None  # USD/shot
    price_per_hour: Decimal | None  # USD/hour

    def __post_init__(self):
        for p in (self.price_per_shot, self.price_per_hour):
            if p is not None and p < 0:
                raise ValueError("prices must be non-negative")


def load_rates(path=None) -> dict[str, MachineRate]:
    """Rate table keyed by machine name; defaults to the bundled CSV."""
    if path is None:
        source = resources.files("qslbench").joinpath("data/rates.csv").open()
    else:
        source = open(path)
    rates = {}
    with source:
        for row in csv.DictReader(source):
            rates[row["name"]] = MachineRate(
                name=row["name"],
                system_size=int(row["qubits"]),
                price_per_shot=Decimal(row["usd_per_shot"]) if row["usd_per_shot"] else None,
                price_per_hour=Decimal(row["usd_per_hour"]) if row["usd_per_hour"] else None,
            )
    return rates


def estimate_cost(rate: MachineRate, shots: int) -> Decimal:
    """shots x price per shot, exact decimal arithmetic."""
    if shots < 0:
        raise ValueError("shots must be non-negative")
    if rate.price_per_shot is None:
        raise ValueError(f"{rate.name} has no per-shot price")
    return rate.price_per_shot * shots


@dataclass(frozen=True)
class Walltime:
    seconds: float
    @property
    def days(self) -> float:
        return self.seconds / SECONDS_PER_DAY

    def __str__(self) -> str:
        return f"{self.seconds:.0f} s ({self.days:.2f} days)"


def estimate_walltime(shots: int, seconds_per_shot: float) -> Walltime:
    if shots < 0 or seconds_per_shot < 0:
        raise ValueError("inputs must be non-negative")
    return Walltime(shots * seconds_per_shot)
