"""
Compilation overhead of source mapping

Each source is compiled `repetitions` times with mapping off and on (same
passes); medians are compared. Stage attribution groups the pipeline into
front (frontend + lowering), passes and back (backend + mapgen).
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Sequence, Tuple

import numpy as np

from optimizer.config import PassConfig
from pipeline.artifact import CompiledArtifact
from pipeline.compiler import STAGES, Compilation, SourceFiles, compile_sources

logger = logging.getLogger(__name__)

MIN_REPETITIONS = 3
CLOCK_RESOLUTION = 1e-3
STAGE_GROUPS = {"front": ("frontend", "lowering"), "passes": ("passes",), "back": ("backend", "mapgen")}


@dataclass
class SourceOverhead:
    """
    Attributes:
        seconds_off / seconds_on: median compile time without / with mapping
        stages_on: median seconds per stage group with mapping on
        bytes_identical: bytecode equal across the two modes
        artifact_off / artifact_on: container size in bytes
    """
    name: str
    category: str = ""
    seconds_off: float = 0.0
    seconds_on: float = 0.0
    stages_on: Dict[str, float] = field(default_factory=dict)
    bytes_identical: bool = True
    artifact_off: int = 0
    artifact_on: int = 0

    @property
    def overhead(self) -> float:
        return 100.0 * (self.seconds_on - self.seconds_off) / self.seconds_off if self.seconds_off else 0.0

    @property
    def size_overhead(self) -> float:
        return 100.0 * (self.artifact_on - self.artifact_off) / self.artifact_off if self.artifact_off else 0.0

    @property
    def below_clock_resolution(self) -> bool:
        return self.seconds_off < CLOCK_RESOLUTION

    def to_dict(self, timing: bool = True) -> dict:
        data = {"name": self.name, "category": self.category, "bytes_identical": self.bytes_identical,
                "artifact_off": self.artifact_off, "artifact_on": self.artifact_on,
                "size_overhead": round(self.size_overhead, 4)}
        if timing:
            data.update({"seconds_off": self.seconds_off, "seconds_on": self.seconds_on,
                         "overhead": round(self.overhead, 4),
                         "stages_on": {k: v for k, v in self.stages_on.items()}})
        return data


@dataclass
class OverheadReport:
    sources: List[SourceOverhead] = field(default_factory=list)
    repetitions: int = 0

    @property
    def aggregate(self) -> float:
        return float(np.mean([s.overhead for s in self.sources])) if self.sources else 0.0

    @property
    def size_aggregate(self) -> float:
        return float(np.mean([s.size_overhead for s in self.sources])) if self.sources else 0.0

    @property
    def all_bytes_identical(self) -> bool:
        return all(s.bytes_identical for s in self.sources)

    def stage_shares(self) -> Dict[str, float]:
        totals = {group: sum(s.stages_on.get(group, 0.0) for s in self.sources) for group in STAGE_GROUPS}
        whole = sum(totals.values())
        return {k: 100.0 * v / whole if whole else 0.0 for k, v in totals.items()}

    def by_category(self) -> Dict[str, float]:
        groups: Dict[str, List[float]] = {}
        for s in self.sources:
            groups.setdefault(s.category or "uncategorised", []).append(s.overhead)
        return {k: float(np.mean(v)) for k, v in sorted(groups.items())}

    def to_dict(self, timing: bool = True) -> dict:
        data = {"repetitions": self.repetitions, "bytes_identical": self.all_bytes_identical,
                "size_overhead": round(self.size_aggregate, 4),
                "sources": [s.to_dict(timing) for s in self.sources]}
        if timing:
            data["overhead"] = round(self.aggregate, 4)
            data["stage_shares"] = {k: round(v, 2) for k, v in self.stage_shares().items()}
            data["by_category"] = {k: round(v, 4) for k, v in self.by_category().items()}
        return data


def _grouped(timings: Dict[str, float]) -> Dict[str, float]:
    return {group: sum(timings.get(stage, 0.0) for stage in stages) for group, stages in STAGE_GROUPS.items()}


def time_compile(files: SourceFiles, config: PassConfig, repetitions: int) -> Tuple[float, Dict[str, float],
                                                                                     Compilation]:
    totals, stages = [], {stage: [] for stage in STAGES}
    compilation = None
    for _ in range(repetitions):
        compilation = compile_sources(files, config)
        totals.append(compilation.total_seconds)
        for stage in STAGES:
            stages[stage].append(compilation.timings.get(stage, 0.0))
    medians = {stage: float(np.median(values)) for stage, values in stages.items()}
    return float(np.median(totals)), _grouped(medians), compilation


def measure_source(name: str, files: SourceFiles, config: PassConfig, repetitions: int = 10,
                   category: str = "") -> SourceOverhead:
    if repetitions < MIN_REPETITIONS:
        raise ValueError(f"Overhead needs at least {MIN_REPETITIONS} repetitions, got {repetitions}")
    off, _, plain = time_compile(files, replace(config, mapping_enabled=False), repetitions)
    on, stages, mapped = time_compile(files, replace(config, mapping_enabled=True), repetitions)
    result = SourceOverhead(
        name=name, category=category, seconds_off=off, seconds_on=on, stages_on=stages,
        bytes_identical=plain.program.code == mapped.program.code,
        artifact_off=len(CompiledArtifact.from_compilation(plain).dumps().encode("utf-8")),
        artifact_on=len(CompiledArtifact.from_compilation(mapped).dumps().encode("utf-8")),
    )
    if result.below_clock_resolution:
        logger.warning("[OVERHEAD] %s compiles in %.3f ms; too small to time reliably", name, off * 1000)
    logger.info("[OVERHEAD] %s: %.2f%%", name, result.overhead)
    return result


def measure_overhead(sources: Sequence[Tuple[str, str, SourceFiles]], config: PassConfig = None,
                     repetitions: int = 10) -> OverheadReport:
    """`sources` holds (name, category, files) triples; runs are serial to keep timings quiet"""
    config = config or PassConfig.default()
    report = OverheadReport(repetitions=repetitions)
    for name, category, files in sources:
        report.sources.append(measure_source(name, files, config, repetitions, category))
    return report
