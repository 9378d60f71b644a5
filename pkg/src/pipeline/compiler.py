"""
Compilation driver - source files to bytecode plus mapping table

Stage timings are collected for the overhead report; every stage logs its
own progress under its tag.
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from backend.emitter import BytecodeProgram, OffsetLog, emit
from frontend.unit import CompilationUnit, analyze
from lowering.constraints import assign_constraint_indices
from lowering.ir import IrModule
from lowering.lower import lower
from lowering.ssa_check import verify_module
from mapgen.build import build_table
from model.table import MappingTable
from optimizer.config import PassConfig, PassReport
from optimizer.manager import run_pipeline

logger = logging.getLogger(__name__)

STAGES = ("frontend", "lowering", "passes", "backend", "mapgen")

SourceFiles = Sequence[Tuple[str, str]]


@dataclass
class Compilation:
    """
    Everything one compile produces

    Attributes:
        unit: parsed and resolved sources with the statement registry
        module: final IR
        program: bytecode and its side tables
        log: backend offset log
        table: mapping table (empty when mapping is disabled)
        passes: per-pass report
        config: the configuration that was used
        timings: seconds per stage
    """
    unit: CompilationUnit
    module: IrModule
    program: BytecodeProgram
    log: OffsetLog
    table: MappingTable
    passes: PassReport
    config: PassConfig
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def total_seconds(self) -> float:
        return sum(self.timings.values())


class _Stopwatch:
    def __init__(self, timings: Dict[str, float], stage: str):
        self.timings = timings
        self.stage = stage

    def __enter__(self):
        self.started = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.timings[self.stage] = self.timings.get(self.stage, 0.0) + time.perf_counter() - self.started
        return False


def compile_sources(files: SourceFiles, config: Optional[PassConfig] = None) -> Compilation:
    """Run the whole pipeline over `(name, text)` pairs"""
    config = config or PassConfig.default()
    timings: Dict[str, float] = {}
    mapping = config.mapping_enabled

    with _Stopwatch(timings, "frontend"):
        unit = analyze(files)
    with _Stopwatch(timings, "lowering"):
        module = lower(unit, mapping_enabled=mapping)
        assign_constraint_indices(module, mapping_enabled=mapping)
        if config.verify:
            verify_module(module, "lowering")
    with _Stopwatch(timings, "passes"):
        registered = unit.registry.registered_spans() if mapping else ()
        module, report = run_pipeline(module, config, registered)
    with _Stopwatch(timings, "backend"):
        program, log = emit(module)
    with _Stopwatch(timings, "mapgen"):
        table = build_table(log, module, unit.file_names) if mapping else MappingTable(files=unit.file_names)

    logger.info("[PIPELINE] %s: %d byte(s), %d mapping entr%s in %.2f ms",
                ", ".join(unit.file_names), len(program.code), len(table),
                "y" if len(table) == 1 else "ies", sum(timings.values()) * 1000)
    return Compilation(unit, module, program, log, table, report, config, timings)


def read_sources(paths: Sequence[Union[str, Path]]) -> List[Tuple[str, str]]:
    return [(Path(p).name, Path(p).read_text(encoding="utf-8")) for p in paths]


def compile_files(paths: Sequence[Union[str, Path]], config: Optional[PassConfig] = None) -> Compilation:
    return compile_sources(read_sources(paths), config)
