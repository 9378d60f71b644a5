"""
Bench harness - accuracy, overhead, validator soundness and fault detection over a corpus

Accuracy cells (fixture x config) run in a thread pool, each with its own
compilation; timing runs stay serial.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

from execution.accuracy import AccuracyReport, FixtureAccuracy, measure_accuracy
from execution.overhead import OverheadReport, measure_overhead
from mapgen.faults import OPERATORS, default_seed, inject
from mapgen.validate import ValidationReport, validate_structural, validate_syntactic
from model.errors import ZkMapError
from model.table import MappingTable
from optimizer.config import PassConfig
from pipeline.compiler import Compilation, compile_sources
from pipeline.corpus import Fixture, load_corpus

logger = logging.getLogger(__name__)


def validate_compilation(compilation: Compilation, table: Optional[MappingTable] = None) -> ValidationReport:
    """Both validators over `table` (default: the compilation's own table)"""
    table = compilation.table if table is None else table
    unit = compilation.unit
    syntactic = validate_syntactic(table, unit.file_texts)
    structural = validate_structural(table, unit.registry, compilation.module, compilation.program)
    return syntactic.merged(structural)


@dataclass
class FaultResult:
    operator: str
    trials: int = 0
    detected: int = 0

    @property
    def rate(self) -> float:
        return 100.0 * self.detected / self.trials if self.trials else 100.0

    def to_dict(self) -> dict:
        return {"operator": self.operator, "trials": self.trials, "detected": self.detected,
                "rate": round(self.rate, 2)}


def detect_faults(compilation: Compilation, operator: str, trials: int, seed: int = 0) -> FaultResult:
    result = FaultResult(operator)
    context = {"registered": compilation.unit.registry.registered_spans(),
               "next_id": compilation.module.next_id}
    for trial in range(trials):
        try:
            mutated = inject(compilation.table, operator, seed + trial, **context)
        except ValueError as e:
            logger.debug("[BENCH] %s not applicable: %s", operator, e)
            continue
        result.trials += 1
        if not validate_compilation(compilation, mutated).ok:
            result.detected += 1
    return result


@dataclass
class BenchReport:
    """
    Attributes:
        identity: accuracy with every pass disabled
        optimized: accuracy with the configured passes
        overhead: compile-time and artifact-size overhead
        violations: fixture -> violations found on honest output
        faults: per-operator detection over all fixtures
        failures: fixtures that did not compile or run
    """
    identity: AccuracyReport = field(default_factory=AccuracyReport)
    optimized: AccuracyReport = field(default_factory=AccuracyReport)
    overhead: Optional[OverheadReport] = None
    violations: Dict[str, int] = field(default_factory=dict)
    faults: List[FaultResult] = field(default_factory=list)
    failures: Dict[str, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures and not any(self.violations.values()) and \
            self.identity.discrepancies == 0 and self.optimized.discrepancies == 0

    def to_dict(self, timing: bool = True) -> dict:
        return {
            "identity": self.identity.to_dict(),
            "optimized": self.optimized.to_dict(),
            "overhead": self.overhead.to_dict(timing) if self.overhead is not None else None,
            "violations": dict(self.violations),
            "faults": [f.to_dict() for f in self.faults],
            "failures": dict(self.failures),
        }


def _accuracy_cell(fixture: Fixture, config: PassConfig) -> FixtureAccuracy:
    compilation = compile_sources(fixture.files, config)
    return measure_accuracy(compilation, fixture.txs(), fixture.name, fixture.category)


def run_bench(corpus: Union[str, Path], repetitions: int = 10, config: Optional[PassConfig] = None,
              fault_trials: int = 0, workers: Optional[int] = None) -> BenchReport:
    config = config or PassConfig.default()
    fixtures = load_corpus(corpus)
    report = BenchReport()
    compiled: Dict[str, Compilation] = {}
    for fixture in fixtures:
        try:
            compiled[fixture.name] = compile_sources(fixture.files, config)
        except (ZkMapError, OSError) as e:
            report.failures[fixture.name] = f"{type(e).__name__}: {e}"
    runnable = [f for f in fixtures if f.name in compiled]

    identity = PassConfig.none(unroll_max_trips=config.unroll_max_trips,
                               inline_max_instrs=config.inline_max_instrs)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        plain = [pool.submit(_accuracy_cell, f, identity) for f in runnable]
        optimized = [pool.submit(_accuracy_cell, f, config) for f in runnable]
        report.identity.fixtures = [job.result() for job in plain]
        report.optimized.fixtures = [job.result() for job in optimized]

    for fixture in runnable:
        report.violations[fixture.name] = len(validate_compilation(compiled[fixture.name]).violations)

    if fault_trials:
        seed = default_seed()
        for operator in OPERATORS:
            total = FaultResult(operator)
            for fixture in runnable:
                one = detect_faults(compiled[fixture.name], operator, fault_trials, seed)
                total.trials += one.trials
                total.detected += one.detected
            report.faults.append(total)

    if repetitions:
        report.overhead = measure_overhead([(f.name, f.category, f.files) for f in runnable], config, repetitions)
    logger.info("[BENCH] %d fixture(s): identity %.2f%%, optimized %.2f%%", len(runnable),
                report.identity.accuracy, report.optimized.accuracy)
    return report
