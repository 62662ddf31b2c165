from typing import Dict, FrozenSet, Iterable, List, Set
from collections import deque
import logging

from actor_graph import ActorGraph, ActorId
from enums.gc_enums import Frontier

logger = logging.getLogger(__name__)


class LivenessResult:
    def __init__(self,
                 live: Iterable[ActorId],
                 garbage: Iterable[ActorId],
                 potentially_active: Iterable[ActorId]):
        self.live: FrozenSet[ActorId] = frozenset(live)
        self.garbage: FrozenSet[ActorId] = frozenset(garbage)
        self.potentially_active: FrozenSet[ActorId] = frozenset(potentially_active)

    @staticmethod
    def from_live(g: ActorGraph, live: Iterable[ActorId], potentially_active: Iterable[ActorId]) -> 'LivenessResult':
        live_set = frozenset(live)
        return LivenessResult(live_set, g.actors - live_set, potentially_active)

    def violations(self, g: ActorGraph) -> List[str]:
        problems = []
        if self.live | self.garbage != g.actors:
            problems.append(f"live ∪ garbage misses actors {sorted(g.actors - self.live - self.garbage)}")
        if self.live & self.garbage:
            problems.append(f"actors {sorted(self.live & self.garbage)} both live and garbage")
        if not g.roots <= self.live:
            problems.append(f"roots {sorted(g.roots - self.live)} not live")
        if not self.live <= self.potentially_active:
            problems.append(f"live actors {sorted(self.live - self.potentially_active)} not potentially active")
        return problems

    def to_dict(self) -> Dict[str, List[ActorId]]:
        return {
            "live": sorted(self.live),
            "garbage": sorted(self.garbage),
            "potentially_active": sorted(self.potentially_active),
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LivenessResult):
            return NotImplemented
        return (self.live == other.live and self.garbage == other.garbage
                and self.potentially_active == other.potentially_active)

    def __repr__(self) -> str:
        return (f"LivenessResult(live={sorted(self.live)}, garbage={sorted(self.garbage)}, "
                f"potentially_active={sorted(self.potentially_active)})")


def potentially_active(g: ActorGraph) -> FrozenSet[ActorId]:
    """Forward closure of U ∪ R: every actor a message can eventually wake."""
    successors = g.successors()
    active: Set[ActorId] = set(g.seeds)
    queue = deque(sorted(active))
    while queue:
        a = queue.popleft()
        for b in successors.get(a, ()):
            if b not in active:
                active.add(b)
                queue.append(b)
    return frozenset(active)


def live_fixpoint(g: ActorGraph, frontier: Frontier = Frontier.FIFO) -> LivenessResult:
    """Least L with R ⊆ L, closed under
    (i)  a ∈ L, a→b          ⇒ b ∈ L
    (ii) a active, a→b, b ∈ L ⇒ a ∈ L
    computed with a worklist of newly live actors."""
    active = potentially_active(g)
    successors = g.successors()
    predecessors = g.predecessors()

    live: Set[ActorId] = set(g.roots)
    worklist = deque(sorted(live))
    take = worklist.pop if frontier == Frontier.LIFO else worklist.popleft
    while worklist:
        b = take()
        for c in successors.get(b, ()):
            if c not in live:
                live.add(c)
                worklist.append(c)
        for a in predecessors.get(b, ()):
            if a in active and a not in live:
                live.add(a)
                worklist.append(a)

    result = LivenessResult.from_live(g, live, active)
    logger.debug(f"live_fixpoint: {len(result.live)} live, {len(result.garbage)} garbage of {len(g.actors)}.")
    return result


def _reach_set(successors: Dict[ActorId, tuple], start: Iterable[ActorId]) -> Set[ActorId]:
    seen = set(start)
    stack = list(seen)
    while stack:
        a = stack.pop()
        for b in successors.get(a, ()):
            if b not in seen:
                seen.add(b)
                stack.append(b)
    return seen


def live_reachset(g: ActorGraph) -> LivenessResult:
    """Closure over reach-sets: start from reach(R), then absorb reach(u) for
    every u ∈ U ∪ R whose reach-set meets the current set, until stable."""
    successors = g.successors()
    reach = {u: _reach_set(successors, (u,)) for u in sorted(g.seeds)}

    live = _reach_set(successors, g.roots)
    pending = list(reach)
    changed = True
    while changed:
        changed = False
        remaining = []
        for u in pending:
            if reach[u].isdisjoint(live):
                remaining.append(u)
            else:
                live |= reach[u]
                changed = True
        pending = remaining

    active: Set[ActorId] = set()
    for members in reach.values():
        active |= members
    result = LivenessResult.from_live(g, live, active)
    logger.debug(f"live_reachset: {len(result.live)} live after absorbing "
                 f"{len(reach) - len(pending)} of {len(reach)} reach-sets.")
    return result
