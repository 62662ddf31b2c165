from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Set, Tuple
from collections import deque
import logging

from actor_graph import ActorGraph, ActorId, Edge
from enums.gc_enums import Frontier, GcMode, MarkStrategy, PartitionPolicy, TransformMethod
from liveness import LivenessResult, live_fixpoint, potentially_active
from passive_collect import CollectionOutcome, EpochMarker, run_collection
from report_models import ModeReportSchema, ModeResultSchema, RatioSchema
from workloads import GcCost, MutationTrace, TraceState, premature_collections, spawn_graph

logger = logging.getLogger(__name__)

NodeId = int
SnapshotHook = Callable[[int, ActorGraph], None]

# local:global collection period, from a 2 s local and 20 s global period
DEFAULT_GLOBAL_RATIO = 10
DEFAULT_LOCAL_EVERY = 5


class PartitionedGraph:
    def __init__(self,
                 partitions: List[Tuple[NodeId, ActorGraph]],
                 cross_edges: Iterable[Edge],
                 placement: Dict[ActorId, NodeId]):
        self.partitions = sorted(partitions, key=lambda item: item[0])
        self.cross_edges: FrozenSet[Edge] = frozenset(cross_edges)
        self.placement = dict(placement)
        self._by_node = dict(self.partitions)

    @property
    def node_ids(self) -> List[NodeId]:
        return [node for node, _ in self.partitions]

    def partition(self, node_id: NodeId) -> ActorGraph:
        if node_id not in self._by_node:
            raise ValueError(f"Node {node_id} not in partitioned graph (nodes {self.node_ids}).")
        return self._by_node[node_id]

    def reassemble(self) -> ActorGraph:
        actors: Set[ActorId] = set()
        references: Set[Edge] = set(self.cross_edges)
        roots: Set[ActorId] = set()
        unblocked: Set[ActorId] = set()
        for _, sub in self.partitions:
            actors |= sub.actors
            references |= sub.references
            roots |= sub.roots
            unblocked |= sub.unblocked
        return ActorGraph(actors, references, roots, unblocked)

    def violations(self, original: ActorGraph) -> List[str]:
        problems = []
        seen: Dict[ActorId, NodeId] = {}
        for node, sub in self.partitions:
            for a in sorted(sub.actors):
                if a in seen:
                    problems.append(f"actor {a} on nodes {seen[a]} and {node}")
                seen[a] = node
        missing = original.actors - set(seen)
        if missing:
            problems.append(f"actors {sorted(missing)} on no node")
        intra = set().union(*(sub.references for _, sub in self.partitions)) if self.partitions else set()
        for edge in sorted(original.references - intra - self.cross_edges):
            problems.append(f"reference {edge[0]}->{edge[1]} neither intra-partition nor cross")
        return problems

    def __repr__(self) -> str:
        sizes = {node: len(sub.actors) for node, sub in self.partitions}
        return f"PartitionedGraph(sizes={sizes}, cross_edges={len(self.cross_edges)})"


def _traversal_order(g: ActorGraph, depth_first: bool) -> List[ActorId]:
    """Visit order from the sorted roots, then from any actor still unvisited."""
    successors = g.successors()
    visited: Set[ActorId] = set()
    order: List[ActorId] = []
    for start in sorted(g.roots) + sorted(g.actors - g.roots):
        if start in visited:
            continue
        pending = deque([start])
        if not depth_first:
            visited.add(start)
        while pending:
            if depth_first:
                a = pending.pop()
                if a in visited:
                    continue
                visited.add(a)
                order.append(a)
                pending.extend(b for b in reversed(successors.get(a, ())) if b not in visited)
            else:
                a = pending.popleft()
                order.append(a)
                for b in successors.get(a, ()):
                    if b not in visited:
                        visited.add(b)
                        pending.append(b)
    return order


def effective_nodes(n_nodes: int, n_actors: int) -> int:
    if n_nodes < 1:
        raise ValueError(f"n_nodes must be >= 1, got {n_nodes}.")
    if n_nodes > max(n_actors, 1):
        reduced = max(n_actors, 1)
        logger.warning(f"Requested {n_nodes} nodes for {n_actors} actors; using {reduced} nodes.")
        return reduced
    return n_nodes


def assign(g: ActorGraph, n_nodes: int, policy: PartitionPolicy) -> Dict[ActorId, NodeId]:
    policy = PartitionPolicy(policy)
    n_nodes = effective_nodes(n_nodes, len(g.actors))
    if policy == PartitionPolicy.ROUND_ROBIN_BFS:
        return {a: i % n_nodes for i, a in enumerate(_traversal_order(g, depth_first=False))}
    # contiguous preorder chunks keep whole subtrees together
    order = _traversal_order(g, depth_first=True)
    return {a: i * n_nodes // len(order) for i, a in enumerate(order)}


def project(g: ActorGraph, placement: Dict[ActorId, NodeId], node_ids: Iterable[NodeId]) -> PartitionedGraph:
    unplaced = g.actors - set(placement)
    if unplaced:
        raise ValueError(f"Actors {sorted(unplaced)} have no placement.")
    members: Dict[NodeId, Set[ActorId]] = {node: set() for node in node_ids}
    for a in g.actors:
        members.setdefault(placement[a], set()).add(a)
    intra: Dict[NodeId, Set[Edge]] = {node: set() for node in members}
    cross: Set[Edge] = set()
    for src, dst in g.references:
        if placement[src] == placement[dst]:
            intra[placement[src]].add((src, dst))
        else:
            cross.add((src, dst))
    partitions = [
        (node, ActorGraph(actors, intra[node], g.roots & actors, g.unblocked & actors))
        for node, actors in members.items()
    ]
    return PartitionedGraph(partitions, cross, {a: placement[a] for a in g.actors})


def partition(g: ActorGraph, n_nodes: int, policy: PartitionPolicy = PartitionPolicy.LOCALITY) -> PartitionedGraph:
    n_nodes = effective_nodes(n_nodes, len(g.actors))
    pg = project(g, assign(g, n_nodes, policy), range(n_nodes))
    logger.info(f"Partitioned {g} with {policy}: {pg!r}")
    return pg


def local_pseudo_roots(pg: PartitionedGraph, node_id: NodeId) -> FrozenSet[ActorId]:
    """Local roots, remotely referenced actors, and locally potentially
    active actors holding a remote reference."""
    sub = pg.partition(node_id)
    remote_targets = {d for s, d in pg.cross_edges if pg.placement[d] == node_id}
    remote_holders = {s for s, d in pg.cross_edges if pg.placement[s] == node_id}
    seeded = ActorGraph(sub.actors, sub.references, sub.roots | remote_targets, sub.unblocked | remote_targets)
    return frozenset(seeded.roots | (remote_holders & potentially_active(seeded)))


def local_graph(pg: PartitionedGraph, node_id: NodeId) -> ActorGraph:
    sub = pg.partition(node_id)
    pseudo = local_pseudo_roots(pg, node_id)
    return ActorGraph(sub.actors, sub.references, sub.roots | pseudo, sub.unblocked | pseudo)


def _local_outcome(pg: PartitionedGraph, node_id: NodeId, method: TransformMethod, strategy: MarkStrategy,
                   frontier: Frontier = Frontier.FIFO, marker: Optional[EpochMarker] = None) -> CollectionOutcome:
    return run_collection(local_graph(pg, node_id), method, strategy, frontier, marker)


def local_collect(pg: PartitionedGraph, node_id: NodeId,
                  method: TransformMethod = TransformMethod.DIRECT,
                  strategy: MarkStrategy = MarkStrategy.TWO_SCAN,
                  frontier: Frontier = Frontier.FIFO) -> LivenessResult:
    result = _local_outcome(pg, node_id, method, strategy, frontier).result
    logger.debug(f"local_collect node {node_id}: {len(result.live)} live, {len(result.garbage)} garbage.")
    return result


def global_collect(pg: PartitionedGraph,
                   method: TransformMethod = TransformMethod.DIRECT,
                   strategy: MarkStrategy = MarkStrategy.TWO_SCAN,
                   frontier: Frontier = Frontier.FIFO) -> LivenessResult:
    return run_collection(pg.reassemble(), method, strategy, frontier).result


class ModeRun:
    def __init__(self, mode: GcMode):
        self.mode = mode
        self.local_cycles = 0
        self.global_cycles = 0
        self.mutator_ops = 0
        self.cost = GcCost()
        self.peak_actors = 0
        self.collected: Set[ActorId] = set()
        self.residual_garbage = 0
        self.detected_live: List[FrozenSet[ActorId]] = []
        self.violations: List[str] = []
        self.final_graph: Optional[ActorGraph] = None

    @property
    def gc_ops(self) -> int:
        return self.cost.gc_ops

    @property
    def overhead(self) -> RatioSchema:
        return RatioSchema(numerator=self.mutator_ops + self.gc_ops, denominator=self.mutator_ops)

    def to_schema(self) -> ModeResultSchema:
        return ModeResultSchema(
            mode=self.mode,
            label=self.mode.label,
            local_cycles=self.local_cycles,
            global_cycles=self.global_cycles,
            collected=len(self.collected),
            residual_garbage=self.residual_garbage,
            peak_actors=self.peak_actors,
            mutator_ops=self.mutator_ops,
            **self.cost.to_dict(),
            overhead=self.overhead,
            violations=list(self.violations),
        )


class ModeReport:
    def __init__(self, trace: MutationTrace, nodes: int, policy: PartitionPolicy, method: TransformMethod,
                 strategy: MarkStrategy, cross_edges: int, local_every: Optional[int], global_every: Optional[int]):
        self.label = trace.label
        self.actor_total = trace.expected_actor_total
        self.nodes = nodes
        self.policy = policy
        self.method = method
        self.strategy = strategy
        self.cross_edges = cross_edges
        self.local_every = local_every
        self.global_every = global_every
        self.runs: Dict[GcMode, ModeRun] = {}

    @property
    def violations(self) -> List[str]:
        return [f"{mode.label}: {v}" for mode, run in self.runs.items() for v in run.violations]

    def to_schema(self, seed: Optional[int] = None) -> ModeReportSchema:
        return ModeReportSchema(
            seed=seed,
            label=self.label,
            actor_total=self.actor_total,
            nodes=self.nodes,
            policy=self.policy,
            method=self.method,
            strategy=self.strategy,
            cross_edges=self.cross_edges,
            local_every=self.local_every,
            global_every=self.global_every,
            modes=[run.to_schema() for run in self.runs.values()],
        )


class _ModeReplayer:
    def __init__(self, trace: MutationTrace, mode: GcMode, placement: Dict[ActorId, NodeId], node_ids: List[NodeId],
                 method: TransformMethod, strategy: MarkStrategy, frontier: Frontier,
                 snapshot_hook: Optional[SnapshotHook]):
        self.trace = trace
        self.mode = mode
        self.placement = placement
        self.node_ids = node_ids
        self.method = method
        self.strategy = strategy
        self.frontier = frontier
        self.snapshot_hook = snapshot_hook
        self.last_use = trace.last_use()
        self.universe = trace.actor_universe()
        self.state = TraceState(trace.initial)
        self.run = ModeRun(mode)
        one_scan = strategy == MarkStrategy.ONE_SCAN
        self.local_markers = {node: EpochMarker() for node in node_ids} if one_scan else {}
        self.global_marker = EpochMarker() if one_scan else None

    def _snapshot(self) -> ActorGraph:
        graph = self.state.snapshot()
        if self.snapshot_hook is not None:
            self.snapshot_hook(self.state.step, graph)
        return graph

    def _flag(self, message: str) -> None:
        msg = f"step {self.state.step}: {message}"
        logger.warning(f"{self.mode.label} run of '{self.trace.label}': {msg}")
        self.run.violations.append(msg)

    def _check(self, graph: ActorGraph, collected: FrozenSet[ActorId], globally_collectible: FrozenSet[ActorId]) -> None:
        escaped = collected - globally_collectible
        if escaped:
            self._flag(f"locally collected actors {sorted(escaped)} are not globally collectible")
        live_garbage = globally_collectible & live_fixpoint(graph).live
        if live_garbage:
            self._flag(f"globally collectible actors {sorted(live_garbage)} are live")
        premature = premature_collections(collected, self.last_use, self.state.step)
        if premature:
            self._flag(f"actors {premature} collected but used by later events")

    def local_cycle(self) -> None:
        graph = self._snapshot()
        pg = project(graph, self.placement, self.node_ids)
        collected: Set[ActorId] = set()
        detected_live: Set[ActorId] = set()
        for node in self.node_ids:
            outcome = _local_outcome(pg, node, self.method, self.strategy, self.frontier,
                                     self.local_markers.get(node))
            self.run.cost.add_collection(outcome)
            detected_live |= outcome.result.live
            collected |= outcome.result.garbage
        self.run.local_cycles += 1
        self.run.detected_live.append(frozenset(detected_live))

        reference = run_collection(graph, self.method, self.strategy, self.frontier)
        self._check(graph, frozenset(collected), reference.result.garbage)
        if self.mode != GcMode.GDP:
            self._remove(collected)

    def global_cycle(self) -> None:
        graph = self._snapshot()
        pg = project(graph, self.placement, self.node_ids)
        outcome = run_collection(pg.reassemble(), self.method, self.strategy, self.frontier, self.global_marker)
        self.run.cost.add_collection(outcome)
        self.run.global_cycles += 1
        self._check(graph, outcome.result.garbage, outcome.result.garbage)
        self._remove(outcome.result.garbage)

    def _remove(self, actors: Iterable[ActorId]) -> None:
        self.state.remove(actors)
        for problem in self.state.conservation_problems(self.universe):
            self._flag(problem)

    def replay(self, local_every: Optional[int], global_every: Optional[int],
               memory_threshold: Optional[int]) -> ModeRun:
        since_local = since_global = 0
        for event in self.trace.events:
            changes = self.state.reference_changes
            self.run.mutator_ops += self.state.apply(event)
            self.run.peak_actors = max(self.run.peak_actors, len(self.state.actors))
            if self.mode == GcMode.NO_GC:
                continue
            self.run.cost.bookkeeping_ops += self.state.reference_changes - changes
            since_local += 1
            since_global += 1
            pressured = memory_threshold is not None and len(self.state.actors) >= memory_threshold
            is_cdgc = self.mode == GcMode.CDGC
            if (local_every is not None and since_local >= local_every) or (pressured and not is_cdgc):
                self.local_cycle()
                since_local = 0
            if is_cdgc and ((global_every is not None and since_global >= global_every) or pressured):
                self.global_cycle()
                since_global = 0

        if self.mode != GcMode.NO_GC:
            self.local_cycle()
            if self.mode == GcMode.CDGC:
                self.global_cycle()

        self.run.final_graph = self.state.snapshot()
        self.run.collected = set(self.state.collected)
        self.run.residual_garbage = len(live_fixpoint(self.run.final_graph).garbage)
        return self.run


def default_global_every(local_every: Optional[int], ratio: int = DEFAULT_GLOBAL_RATIO) -> Optional[int]:
    return None if local_every is None else local_every * ratio


def run_modes(trace: MutationTrace,
              n_nodes: int = 1,
              policy: PartitionPolicy = PartitionPolicy.LOCALITY,
              local_every: Optional[int] = DEFAULT_LOCAL_EVERY,
              global_every: Optional[int] = None,
              modes: Optional[Iterable[GcMode]] = None,
              method: TransformMethod = TransformMethod.DIRECT,
              strategy: MarkStrategy = MarkStrategy.TWO_SCAN,
              frontier: Frontier = Frontier.FIFO,
              memory_threshold: Optional[int] = None,
              snapshot_hook: Optional[SnapshotHook] = None) -> ModeReport:
    """Replays `trace` once per collection mechanism. Periods are event
    counts, None meaning never; an unset global period is local_every times
    DEFAULT_GLOBAL_RATIO. Safety problems are recorded, not raised."""
    for name, period in (("local_every", local_every), ("global_every", global_every)):
        if period is not None and period < 1:
            raise ValueError(f"{name} must be >= 1 or None, got {period}.")
    if global_every is None:
        global_every = default_global_every(local_every)
    policy, method, strategy = PartitionPolicy(policy), TransformMethod(method), MarkStrategy(strategy)
    selected = set(GcMode) if modes is None else {GcMode(m) for m in modes}

    layout = partition(spawn_graph(trace), n_nodes, policy)
    report = ModeReport(trace, len(layout.node_ids), policy, method, strategy, len(layout.cross_edges),
                        local_every, global_every)
    for mode in GcMode:
        if mode not in selected:
            continue
        replayer = _ModeReplayer(trace, mode, layout.placement, layout.node_ids, method, strategy, frontier,
                                 snapshot_hook)
        run = replayer.replay(local_every, global_every, memory_threshold)
        report.runs[mode] = run
        logger.info(f"{mode.label} on '{trace.label}': collected {len(run.collected)}, "
                    f"residual {run.residual_garbage}, overhead {run.overhead}.")
    return report
