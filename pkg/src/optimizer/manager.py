"""
Pass manager - runs the configured passes in order and reports on each
"""

import logging
import time
from typing import Callable, Dict, Iterable, Optional, Tuple

from lowering.ir import IrModule
from lowering.ssa_check import verify_module
from model.provenance import Confidence
from model.span import SourceSpan
from optimizer.cfg_restructure import pass_cfg_restructure
from optimizer.config import PassConfig, PassReport, PassStats
from optimizer.const_fold import pass_const_fold
from optimizer.context import PassContext
from optimizer.dce import pass_dce
from optimizer.inline import pass_inline
from optimizer.reorder import pass_reorder
from optimizer.unroll import pass_unroll
from optimizer.zk_instrument import pass_zk_instrument

logger = logging.getLogger(__name__)

PASSES: Dict[str, Callable[[IrModule, PassContext], IrModule]] = {
    "const_fold": pass_const_fold,
    "dce": pass_dce,
    "inline": pass_inline,
    "unroll": pass_unroll,
    "reorder": pass_reorder,
    "cfg_restructure": pass_cfg_restructure,
    "zk_instrument": pass_zk_instrument,
}


def _snapshot(module: IrModule) -> Dict[int, Confidence]:
    return {i.ir_id: i.provenance.confidence for i in module.instructions()}


def run_pipeline(module: IrModule, config: Optional[PassConfig] = None,
                 registered: Iterable[SourceSpan] = ()) -> Tuple[IrModule, PassReport]:
    """Apply the configured passes; the SSA checker runs after each one when `verify` is set"""
    config = config or PassConfig.default()
    config.validate()
    report = PassReport()
    registered = frozenset(registered)

    for name in config.passes:
        ctx = PassContext(config=config, registered=registered)
        before = _snapshot(module)
        started = time.perf_counter()
        module = PASSES[name](module, ctx)
        elapsed = time.perf_counter() - started
        after = _snapshot(module)

        created = [i for i in after if i not in before]
        deleted = [i for i in before if i not in after]
        downgraded = sum(1 for i, conf in after.items()
                         if i in before and before[i] == Confidence.EXACT and conf == Confidence.APPROXIMATE)
        synthetic_new = [i for i in created if after[i] == Confidence.SYNTHETIC]
        stats = PassStats(name, created=len(created), deleted=len(deleted), moved=ctx.moved,
                          downgraded=downgraded + ctx.downgraded,
                          no_mapping=sorted(deleted + synthetic_new),
                          instrs_before=len(before), instrs_after=len(after), seconds=elapsed)
        report.passes.append(stats)
        logger.debug("[OPTIMIZER] %s: +%d -%d moved=%d (%.2f ms)", name, stats.created, stats.deleted,
                     stats.moved, elapsed * 1000)
        if config.verify:
            verify_module(module, name)
    return module, report
