"""
Bench charts - per-fixture accuracy and overhead bars

Uses the Agg backend so charts render headless (CI, servers).
"""

import logging
from pathlib import Path
from typing import Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from execution.accuracy import AccuracyReport
from execution.overhead import OverheadReport

logger = logging.getLogger(__name__)

ACCURACY_FLOOR = 90.0
OVERHEAD_CEILING = 25.0


class BenchPlot:
    """
    Two stacked panels: accuracy (identity vs optimized) and compile overhead

    The overhead panel is skipped when no overhead was measured.
    """

    def __init__(self, identity: AccuracyReport, optimized: AccuracyReport,
                 overhead: Union[OverheadReport, None] = None):
        self.identity = identity
        self.optimized = optimized
        self.overhead = overhead
        panels = 2 if overhead is not None and overhead.sources else 1
        names = [f.name for f in optimized.fixtures] or [f.name for f in identity.fixtures]
        self.figure, axes = plt.subplots(panels, 1, figsize=(max(8.0, 0.5 * len(names) + 3), 4.5 * panels),
                                         squeeze=False)
        self.axes = axes[:, 0]
        self.names = names

    def _accuracy_panel(self, ax):
        x = np.arange(len(self.names))
        width = 0.4
        by_name = {f.name: f.accuracy for f in self.identity.fixtures}
        ax.bar(x - width / 2, [by_name.get(n, 0.0) for n in self.names], width, label="no passes",
               color="tab:blue")
        ax.bar(x + width / 2, [f.accuracy for f in self.optimized.fixtures], width, label="default passes",
               color="tab:orange")
        ax.axhline(ACCURACY_FLOOR, color="k", linewidth=0.8, linestyle="--")
        ax.set_ylabel("mapping accuracy (%)", fontsize=11)
        ax.set_ylim(min(80.0, ax.get_ylim()[0]), 101.0)
        ax.set_xticks(x)
        ax.set_xticklabels(self.names, rotation=60, ha="right", fontsize=8)
        ax.grid(True, axis="y", alpha=0.3)
        ax.legend(loc="lower left")
        ax.set_title(f"accuracy: {self.identity.accuracy:.2f}% / {self.optimized.accuracy:.2f}%")

    def _overhead_panel(self, ax):
        sources = self.overhead.sources
        x = np.arange(len(sources))
        colors = ["tab:gray" if s.below_clock_resolution else "tab:green" for s in sources]
        ax.bar(x, [s.overhead for s in sources], 0.6, color=colors)
        ax.axhline(OVERHEAD_CEILING, color="tab:red", linewidth=0.8, linestyle="--")
        ax.axhline(0, color="k", linewidth=0.5)
        ax.set_ylabel("compile overhead (%)", fontsize=11)
        ax.set_xticks(x)
        ax.set_xticklabels([s.name for s in sources], rotation=60, ha="right", fontsize=8)
        ax.grid(True, axis="y", alpha=0.3)
        ax.set_title(f"overhead: {self.overhead.aggregate:.2f}% (median of {self.overhead.repetitions})")

    def render(self):
        self._accuracy_panel(self.axes[0])
        if len(self.axes) > 1:
            self._overhead_panel(self.axes[1])
        self.figure.tight_layout()
        return self.figure

    def save(self, path: Union[str, Path]):
        self.render()
        self.figure.savefig(path, dpi=120)
        plt.close(self.figure)
        logger.info("[PLOTTER] chart written to %s", path)


def plot_bench(report, path: Union[str, Path]):
    """Write the chart for a `BenchReport`"""
    BenchPlot(report.identity, report.optimized, report.overhead).save(path)
