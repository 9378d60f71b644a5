"""
Mapping accuracy - twin execution with trace alignment

For each transaction the interpreter gives the statements that really ran
and the VM gives the offsets it executed. VM offsets are turned into
statements through the mapping table, both sides are collapsed, and their
longest common subsequence decides which VM events matched. Every raw VM
event inherits the verdict of its collapsed representative; accuracy is
matched raw events over mapped raw events.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from execution.interpreter import Interpreter
from execution.state import TxInput
from execution.trace import collapse, mapped_statements
from execution.vm import VirtualMachine
from pipeline.compiler import Compilation

logger = logging.getLogger(__name__)


def lcs_matches(a: Sequence[int], b: Sequence[int]) -> List[bool]:
    """For each item of `a`, whether one longest common subsequence with `b` uses it"""
    n, m = len(a), len(b)
    lengths = np.zeros((n + 1, m + 1), dtype=np.int32)
    for i in range(n - 1, -1, -1):
        row, below = lengths[i], lengths[i + 1]
        for j in range(m - 1, -1, -1):
            if a[i] == b[j]:
                row[j] = below[j + 1] + 1
            else:
                row[j] = max(below[j], row[j + 1])
    used = [False] * n
    i = j = 0
    while i < n and j < m:
        if a[i] == b[j]:
            used[i] = True
            i += 1
            j += 1
        elif lengths[i + 1, j] >= lengths[i, j + 1]:
            i += 1
        else:
            j += 1
    return used


@dataclass
class TxAccuracy:
    function: str
    matched: int
    mapped: int
    executed: int
    twin_equal: bool
    status: str

    @property
    def unmapped(self) -> int:
        return self.executed - self.mapped


@dataclass
class FixtureAccuracy:
    """
    Attributes:
        name / category: fixture identity
        txs: per-transaction counts
        coverage_gaps: dispatchable functions no transaction reached
        discrepancies: transactions where the two engines disagreed
    """
    name: str
    category: str = ""
    txs: List[TxAccuracy] = field(default_factory=list)
    coverage_gaps: List[str] = field(default_factory=list)
    discrepancies: List[str] = field(default_factory=list)

    @property
    def matched(self) -> int:
        return sum(t.matched for t in self.txs)

    @property
    def mapped(self) -> int:
        return sum(t.mapped for t in self.txs)

    @property
    def executed(self) -> int:
        return sum(t.executed for t in self.txs)

    @property
    def accuracy(self) -> float:
        return 100.0 * self.matched / self.mapped if self.mapped else 100.0

    @property
    def unmapped_ratio(self) -> float:
        return (self.executed - self.mapped) / self.executed if self.executed else 0.0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "category": self.category,
            "accuracy": round(self.accuracy, 4),
            "matched": self.matched,
            "mapped": self.mapped,
            "executed": self.executed,
            "unmapped_ratio": round(self.unmapped_ratio, 4),
            "coverage_gaps": list(self.coverage_gaps),
            "discrepancies": list(self.discrepancies),
        }


@dataclass
class AccuracyReport:
    fixtures: List[FixtureAccuracy] = field(default_factory=list)

    @property
    def matched(self) -> int:
        return sum(f.matched for f in self.fixtures)

    @property
    def mapped(self) -> int:
        return sum(f.mapped for f in self.fixtures)

    @property
    def accuracy(self) -> float:
        return 100.0 * self.matched / self.mapped if self.mapped else 100.0

    @property
    def discrepancies(self) -> int:
        return sum(len(f.discrepancies) for f in self.fixtures)

    def by_category(self) -> Dict[str, float]:
        groups: Dict[str, List[FixtureAccuracy]] = {}
        for f in self.fixtures:
            groups.setdefault(f.category or "uncategorised", []).append(f)
        return {cat: 100.0 * sum(f.matched for f in fs) / max(sum(f.mapped for f in fs), 1)
                for cat, fs in sorted(groups.items())}

    def to_dict(self) -> dict:
        return {
            "accuracy": round(self.accuracy, 4),
            "matched": self.matched,
            "mapped": self.mapped,
            "discrepancies": self.discrepancies,
            "by_category": {k: round(v, 4) for k, v in self.by_category().items()},
            "fixtures": [f.to_dict() for f in self.fixtures],
        }


def align(source_trace: Sequence[int], vm_statements: Sequence[Optional[int]]) -> int:
    """Number of mapped VM events whose collapsed representative lies on the alignment"""
    mapped = [s for s in vm_statements if s is not None]
    vm_collapsed, owners = collapse(mapped)
    src_collapsed, _ = collapse(source_trace)
    verdicts = lcs_matches(vm_collapsed, src_collapsed)
    return sum(1 for owner in owners if verdicts[owner])


def measure_accuracy(compilation: Compilation, txs: Sequence[TxInput], name: str = "",
                     category: str = "") -> FixtureAccuracy:
    """Run the suite through both engines, carrying storage from one transaction to the next"""
    unit = compilation.unit
    program = compilation.program
    interpreter = Interpreter(unit)
    vm = VirtualMachine(program)
    report = FixtureAccuracy(name or ", ".join(unit.file_names), category)

    src_state = interpreter.initial_storage()
    vm_state = vm.initial_storage()
    reached = set()
    for n, tx in enumerate(txs):
        src_result, src_trace, src_state = interpreter.execute(tx, src_state)
        vm_result, offsets, vm_state = vm.execute(tx, vm_state)
        statements = [s for _, s, _ in mapped_statements(offsets, compilation.table, unit.registry, program.code)]
        matched = align(src_trace, statements)
        twin_equal = src_result == vm_result
        if not twin_equal:
            report.discrepancies.append(f"tx {n} ({tx.function}): interpreter {src_result.to_dict()} "
                                        f"vs vm {vm_result.to_dict()}")
        report.txs.append(TxAccuracy(tx.function, matched, sum(1 for s in statements if s is not None),
                                     len(offsets), twin_equal, vm_result.status))
        reached.add((tx.function, len(tx.args)))

    for key in program.function_table:
        qualified, _, arity = key.rpartition("/")
        short = qualified.rsplit(".", 1)[-1]
        if not any(fn in (key, short, qualified, f"{short}/{arity}") and int(arity) == argc
                   for fn, argc in reached):
            report.coverage_gaps.append(key)
    if report.coverage_gaps:
        logger.warning("[ACCURACY] %s: never exercised: %s", report.name, ", ".join(report.coverage_gaps))
    logger.info("[ACCURACY] %s: %.2f%% (%d/%d)", report.name, report.accuracy, report.matched, report.mapped)
    return report
