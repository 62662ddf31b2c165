from typing import Callable, Dict, FrozenSet, List, Optional, Set, Tuple
from collections import deque
import logging
import time

from actor_graph import ActorGraph, ActorId, PassiveGraph, PassiveNodeId
from enums.gc_enums import Frontier, MarkStrategy, TransformMethod
from liveness import LivenessResult, potentially_active
from report_models import GcReport, GraphStatsSchema, MarkStatsSchema, RatioSchema, TransformStatsSchema
from transforms import TransformStats, transform

logger = logging.getLogger(__name__)

# ops <= bound * (|V'| + |E'|)
TWO_SCAN_OPS_BOUND = 2
ONE_SCAN_OPS_BOUND = 1

OPS_BOUNDS = {
    MarkStrategy.TWO_SCAN: TWO_SCAN_OPS_BOUND,
    MarkStrategy.ONE_SCAN: ONE_SCAN_OPS_BOUND,
}


class MarkResult:
    def __init__(self,
                 marked: Set[PassiveNodeId],
                 ops: int,
                 scans: int,
                 strategy: MarkStrategy,
                 frontier: Frontier,
                 peak_frontier: int = 0,
                 mark_storage: int = 0,
                 unmarked_count: int = 0):
        self.marked: FrozenSet[PassiveNodeId] = frozenset(marked)
        self.ops = ops
        self.scans = scans
        self.strategy = strategy
        self.frontier = frontier
        self.peak_frontier = peak_frontier
        self.mark_storage = mark_storage
        self.unmarked_count = unmarked_count

    def to_schema(self, p: PassiveGraph) -> MarkStatsSchema:
        return MarkStatsSchema(
            strategy=self.strategy,
            frontier=self.frontier,
            marked=len(self.marked),
            unmarked=self.unmarked_count,
            ops=self.ops,
            scans=self.scans,
            peak_frontier=self.peak_frontier,
            mark_storage=self.mark_storage,
            ops_bound=OPS_BOUNDS[self.strategy],
            ops_per_size=RatioSchema(numerator=self.ops, denominator=len(p.nodes) + len(p.edges)),
        )

    def __repr__(self) -> str:
        return (f"MarkResult(strategy={self.strategy}, marked={len(self.marked)}, ops={self.ops}, "
                f"scans={self.scans}, peak_frontier={self.peak_frontier})")


def _traverse(p: PassiveGraph,
              is_marked: Callable[[PassiveNodeId], bool],
              set_mark: Callable[[PassiveNodeId], None],
              frontier: Frontier) -> Tuple[int, int]:
    """Root-seeded traversal with an explicit frontier. Nodes are marked when
    pushed; each pop is one node visit and each examined edge one traversal.
    Returns (ops, peak frontier size)."""
    successors = p.successors()
    pending = deque()
    for r in sorted(p.roots):
        if not is_marked(r):
            set_mark(r)
            pending.append(r)
    take = pending.pop if frontier == Frontier.LIFO else pending.popleft
    ops = 0
    peak = len(pending)
    while pending:
        node = take()
        ops += 1
        for succ in successors.get(node, ()):
            ops += 1
            if not is_marked(succ):
                set_mark(succ)
                pending.append(succ)
        peak = max(peak, len(pending))
    return ops, peak


def mark_two_scan(p: PassiveGraph, frontier: Frontier = Frontier.FIFO) -> MarkResult:
    provisional: Dict[PassiveNodeId, bool] = dict.fromkeys(p.nodes, False)

    def set_mark(node: PassiveNodeId) -> None:
        provisional[node] = True

    ops, peak = _traverse(p, provisional.__getitem__, set_mark, frontier)

    # second scan: finalize over every node
    marked: Set[PassiveNodeId] = set()
    unmarked = 0
    for node in sorted(p.nodes):
        ops += 1
        if provisional[node]:
            marked.add(node)
        else:
            unmarked += 1

    result = MarkResult(marked, ops, scans=2, strategy=MarkStrategy.TWO_SCAN, frontier=frontier,
                        peak_frontier=peak, mark_storage=len(provisional) + len(marked),
                        unmarked_count=unmarked)
    logger.debug(f"mark_two_scan: {result}")
    return result


class EpochMarker:
    """Persistent per-node mark state for one-scan collection.

    A node is marked in the current collection iff its stamp equals the
    current epoch, so starting a new collection is a counter increment and
    never a pass over old marks."""

    def __init__(self):
        self.epoch = 0
        self._stamps: Dict[PassiveNodeId, int] = {}
        self.collections = 0

    def mark(self, p: PassiveGraph, frontier: Frontier = Frontier.FIFO) -> MarkResult:
        self.epoch += 1
        self.collections += 1
        epoch = self.epoch
        marked: List[PassiveNodeId] = []

        def is_marked(node: PassiveNodeId) -> bool:
            return self._stamps.get(node) == epoch

        def set_mark(node: PassiveNodeId) -> None:
            self._stamps[node] = epoch
            marked.append(node)

        ops, peak = _traverse(p, is_marked, set_mark, frontier)
        result = MarkResult(set(marked), ops, scans=1, strategy=MarkStrategy.ONE_SCAN, frontier=frontier,
                            peak_frontier=peak, mark_storage=2 * len(self._stamps),
                            unmarked_count=len(p.nodes) - len(marked))
        logger.debug(f"mark_one_scan (epoch {epoch}): {result}")
        return result


def mark_one_scan(p: PassiveGraph, frontier: Frontier = Frontier.FIFO,
                  marker: Optional[EpochMarker] = None) -> MarkResult:
    if marker is None:
        marker = EpochMarker()
    return marker.mark(p, frontier)


def mark(p: PassiveGraph, strategy: MarkStrategy, frontier: Frontier = Frontier.FIFO,
         marker: Optional[EpochMarker] = None) -> MarkResult:
    if MarkStrategy(strategy) == MarkStrategy.ONE_SCAN:
        return mark_one_scan(p, frontier, marker)
    return mark_two_scan(p, frontier)


class CollectionOutcome:
    """One transform-and-mark run over an actor graph."""

    def __init__(self, graph: ActorGraph, passive: PassiveGraph, stats: TransformStats,
                 mark_result: MarkResult, result: LivenessResult):
        self.graph = graph
        self.passive = passive
        self.stats = stats
        self.mark_result = mark_result
        self.result = result

    @property
    def transform_ops(self) -> int:
        return self.stats.output_nodes + self.stats.output_edges

    @property
    def mark_ops(self) -> int:
        return self.mark_result.ops

    @property
    def gc_ops(self) -> int:
        return self.transform_ops + self.mark_ops


def run_collection(g: ActorGraph,
                   method: TransformMethod,
                   strategy: MarkStrategy,
                   frontier: Frontier = Frontier.FIFO,
                   marker: Optional[EpochMarker] = None) -> CollectionOutcome:
    passive, node_map, stats = transform(g, method)
    mark_result = mark(passive, strategy, frontier, marker)
    live = {a for a in g.actors if node_map.decision_node(a) in mark_result.marked}
    result = LivenessResult.from_live(g, live, potentially_active(g))
    return CollectionOutcome(g, passive, stats, mark_result, result)


def marked_actors(g: ActorGraph, method: TransformMethod,
                  strategy: MarkStrategy = MarkStrategy.TWO_SCAN) -> FrozenSet[ActorId]:
    return run_collection(g, method, strategy).result.live


def transform_stats_schema(stats: TransformStats) -> TransformStatsSchema:
    return TransformStatsSchema(
        method=stats.method,
        input_nodes=stats.input_nodes,
        input_edges=stats.input_edges,
        output_nodes=stats.output_nodes,
        output_edges=stats.output_edges,
        added_edges=stats.added_edges,
        collapsed_edges=stats.collapsed_edges,
        traversal_passes=stats.traversal_passes,
        node_ratio=RatioSchema(numerator=stats.output_nodes, denominator=stats.input_nodes),
        edge_ratio=RatioSchema(numerator=stats.output_edges, denominator=stats.input_edges),
    )


def build_report(outcome: CollectionOutcome, seed: Optional[int] = None,
                 timings: Optional[Dict[str, float]] = None) -> GcReport:
    return GcReport(
        seed=seed,
        method=outcome.stats.method,
        strategy=outcome.mark_result.strategy,
        graph=GraphStatsSchema(**outcome.graph.stats()),
        transform=transform_stats_schema(outcome.stats),
        mark=outcome.mark_result.to_schema(outcome.passive),
        live_count=len(outcome.result.live),
        garbage_count=len(outcome.result.garbage),
        timings=timings,
    )


def collect(g: ActorGraph,
            method: TransformMethod,
            strategy: MarkStrategy,
            frontier: Frontier = Frontier.FIFO,
            seed: Optional[int] = None,
            timed: bool = False) -> Tuple[LivenessResult, GcReport]:
    try:
        method, strategy, frontier = TransformMethod(method), MarkStrategy(strategy), Frontier(frontier)
    except ValueError as e:
        msg = f"Invalid collection parameters: {e}"
        logger.warning(msg)
        raise ValueError(msg)

    started = time.perf_counter()
    outcome = run_collection(g, method, strategy, frontier)
    timings = {"collect_seconds": time.perf_counter() - started} if timed else None

    report = build_report(outcome, seed=seed, timings=timings)
    logger.info(f"Collected {g} with {method}/{strategy}: "
                f"{report.live_count} live, {report.garbage_count} garbage, {report.mark.ops} mark ops.")
    return outcome.result, report
