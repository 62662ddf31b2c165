from typing import Any, Dict, Iterable, List, Optional, Set, Tuple
from collections import deque
from fractions import Fraction
import logging

from actor_graph import ActorGraph, ActorId, Edge, NodeMap, PassiveGraph
from enums.gc_enums import TransformMethod

logger = logging.getLogger(__name__)

# Rule 4 of the dual-node construction is read as an acquaintance edge plus an
# inverse-acquaintance edge per reference.
RULE4_INTERPRETATION = "for every reference a->b: alpha(a)->mu(b) and mu(b)->alpha(a)"
RULE4_ALTERNATIVE_READING = ("additionally mu(a)->mu(b) for every reference a->b, "
                             "giving exactly 3|E| reference edges (not implemented)")
CLAIMED_EDGE_FACTOR = 3


class TransformStats:
    def __init__(self,
                 method: TransformMethod,
                 input_nodes: int,
                 input_edges: int,
                 output_nodes: int,
                 output_edges: int,
                 traversal_passes: int,
                 added_edges: int,
                 collapsed_edges: int = 0):
        self.method = method
        self.input_nodes = input_nodes
        self.input_edges = input_edges
        self.output_nodes = output_nodes
        self.output_edges = output_edges
        self.traversal_passes = traversal_passes
        self.added_edges = added_edges
        # rule applications that produced an edge already present (self-references)
        self.collapsed_edges = collapsed_edges

    @property
    def node_ratio(self) -> Optional[Fraction]:
        return Fraction(self.output_nodes, self.input_nodes) if self.input_nodes else None

    @property
    def edge_ratio(self) -> Optional[Fraction]:
        return Fraction(self.output_edges, self.input_edges) if self.input_edges else None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": str(self.method),
            "input_nodes": self.input_nodes,
            "input_edges": self.input_edges,
            "output_nodes": self.output_nodes,
            "output_edges": self.output_edges,
            "traversal_passes": self.traversal_passes,
            "added_edges": self.added_edges,
            "collapsed_edges": self.collapsed_edges,
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TransformStats):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __repr__(self) -> str:
        return f"TransformStats({self.to_dict()})"


TransformOutput = Tuple[PassiveGraph, NodeMap, TransformStats]


def transform_vardhan_agha(g: ActorGraph) -> TransformOutput:
    node_map = NodeMap.alpha_mu(g.actors)
    alpha, mu = node_map.alpha, node_map.mu
    emitted: List[Edge] = []
    for a in sorted(g.actors):
        emitted.append((alpha(a), mu(a)))
    for a in sorted(g.unblocked):
        emitted.append((mu(a), alpha(a)))
    for a, b in sorted(g.references):
        emitted.append((alpha(a), mu(b)))
        emitted.append((mu(b), alpha(a)))

    passive = PassiveGraph(node_map.image(), emitted, (mu(r) for r in g.roots))
    stats = TransformStats(
        method=TransformMethod.VA,
        input_nodes=len(g.actors),
        input_edges=len(g.references),
        output_nodes=len(passive.nodes),
        output_edges=len(emitted),
        traversal_passes=0,
        added_edges=len(emitted) - len(g.references),
        collapsed_edges=len(emitted) - len(passive.edges),
    )
    logger.debug(f"Vardhan-Agha transform: {stats}")
    return passive, node_map, stats


def _reachable(successors: Dict[ActorId, tuple], start: Iterable[ActorId], include_start: bool) -> Set[ActorId]:
    """Forward reachability. Without include_start only paths of length >= 1
    count, so a start actor is returned only if a cycle leads back to it."""
    reached: Set[ActorId] = set(start) if include_start else set()
    queue = deque(sorted(reached) if include_start else
                  sorted({b for a in start for b in successors.get(a, ())}))
    reached.update(queue)
    while queue:
        a = queue.popleft()
        for b in successors.get(a, ()):
            if b not in reached:
                reached.add(b)
                queue.append(b)
    return reached


def transform_direct_backpointers(g: ActorGraph) -> TransformOutput:
    successors = g.successors()
    back_pointers: Set[Edge] = set()
    passes = 0
    for u in sorted(g.seeds):
        passes += 1
        back_pointers.update((q, u) for q in _reachable(successors, (u,), include_start=False))

    edges = g.references | back_pointers
    passive = PassiveGraph(g.actors, edges, g.roots)
    stats = TransformStats(
        method=TransformMethod.DIRECT,
        input_nodes=len(g.actors),
        input_edges=len(g.references),
        output_nodes=len(passive.nodes),
        output_edges=len(passive.edges),
        traversal_passes=passes,
        added_edges=len(passive.edges) - len(g.references),
    )
    logger.debug(f"Direct back-pointer transform: {stats}")
    return passive, NodeMap.identity(g.actors), stats


def transform_indirect_backpointers(g: ActorGraph) -> TransformOutput:
    seeds = g.seeds
    reached = _reachable(g.successors(), seeds, include_start=True)
    back_pointers = {(q, p) for p, q in g.references if p in reached}

    edges = g.references | back_pointers
    passive = PassiveGraph(g.actors, edges, g.roots)
    stats = TransformStats(
        method=TransformMethod.INDIRECT,
        input_nodes=len(g.actors),
        input_edges=len(g.references),
        output_nodes=len(passive.nodes),
        output_edges=len(passive.edges),
        traversal_passes=1 if seeds else 0,
        added_edges=len(passive.edges) - len(g.references),
    )
    logger.debug(f"Indirect back-pointer transform: {stats}")
    return passive, NodeMap.identity(g.actors), stats


_TRANSFORMS = {
    TransformMethod.VA: transform_vardhan_agha,
    TransformMethod.DIRECT: transform_direct_backpointers,
    TransformMethod.INDIRECT: transform_indirect_backpointers,
}


def transform(g: ActorGraph, method: TransformMethod) -> TransformOutput:
    try:
        return _TRANSFORMS[TransformMethod(method)](g)
    except ValueError:
        raise ValueError(f"Unknown transform method '{method}'. Expected one of {[str(m) for m in TransformMethod]}.")


def va_edge_accounting(g: ActorGraph) -> Dict[str, int]:
    """Exact dual-node edge count against the 'thrice the references' claim."""
    exact = len(g.actors) + len(g.unblocked) + 2 * len(g.references)
    claimed = CLAIMED_EDGE_FACTOR * len(g.references)
    return {"exact": exact, "claimed": claimed, "delta": exact - claimed}
