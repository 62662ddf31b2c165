from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple
from collections import defaultdict
import logging

from actor_graph import ActorGraph, ActorId, GraphParseError, parse_actor_id, parse_graph, serialize_graph
from enums.gc_enums import EventKind, Frontier, MarkStrategy, TransformMethod, Workload
from passive_collect import CollectionOutcome, EpochMarker, run_collection
from report_models import DEFAULT_FIB_THRESHOLD, CycleSchema, RatioSchema, RunReportSchema

logger = logging.getLogger(__name__)

ROOT_ACTOR: ActorId = 0
DMX_WORKERS = 4


class TraceError(ValueError):
    def __init__(self, message: str, step: Optional[int] = None):
        self.step = step
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)


class SafetyViolationError(RuntimeError):
    pass


class MutationEvent:
    def __init__(self, step: int, kind: EventKind, args: Iterable[ActorId]):
        self.step = step
        self.kind = EventKind(kind)
        self.args: Tuple[ActorId, ...] = tuple(args)
        if len(self.args) != self.kind.arity:
            raise ValueError(f"Event '{self.kind}' takes {self.kind.arity} actor(s), got {len(self.args)}.")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MutationEvent):
            return NotImplemented
        return (self.step, self.kind, self.args) == (other.step, other.kind, other.args)

    def __repr__(self) -> str:
        return f"MutationEvent(step={self.step}, kind={self.kind!r}, args={self.args})"

    def __str__(self) -> str:
        return " ".join([str(self.step), str(self.kind), *(str(a) for a in self.args)])


class MutationTrace:
    def __init__(self, label: str, initial: ActorGraph, events: List[MutationEvent], expected_actor_total: int):
        if not label or any(ch.isspace() for ch in label):
            raise ValueError(f"Trace label must be a non-empty word, got '{label}'.")
        self.label = label
        self.initial = initial
        self.events = list(events)
        self.expected_actor_total = expected_actor_total

    def actor_universe(self) -> FrozenSet[ActorId]:
        spawned = {e.args[1] for e in self.events if e.kind == EventKind.SPAWN}
        return self.initial.actors | spawned

    def last_use(self) -> Dict[ActorId, int]:
        """Step of the last event naming each actor; 0 if none does."""
        last = {a: 0 for a in self.initial.actors}
        for event in self.events:
            for a in event.args:
                last[a] = event.step
        return last

    def __len__(self) -> int:
        return len(self.events)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MutationTrace):
            return NotImplemented
        return (self.label == other.label and self.initial == other.initial
                and self.events == other.events and self.expected_actor_total == other.expected_actor_total)

    def __repr__(self) -> str:
        return (f"MutationTrace(label='{self.label}', events={len(self.events)}, "
                f"expected_actor_total={self.expected_actor_total})")


class _TraceBuilder:
    def __init__(self):
        self.events: List[MutationEvent] = []
        self.next_id = ROOT_ACTOR + 1

    def emit(self, kind: EventKind, *args: ActorId) -> None:
        self.events.append(MutationEvent(len(self.events) + 1, kind, args))

    def spawn(self, parent: ActorId) -> ActorId:
        child = self.next_id
        self.next_id += 1
        self.emit(EventKind.SPAWN, parent, child)
        return child

    def reply_and_terminate(self, child: ActorId, parent: ActorId) -> None:
        self.emit(EventKind.SEND, child, parent)
        self.emit(EventKind.DROP_REF, parent, child)
        self.emit(EventKind.TERMINATE, child)

    def build(self, label: str, expected_actor_total: int) -> MutationTrace:
        initial = ActorGraph([ROOT_ACTOR], [], [ROOT_ACTOR], [ROOT_ACTOR])
        trace = MutationTrace(label, initial, self.events, expected_actor_total)
        logger.info(f"Generated trace '{label}': {len(trace)} events, {expected_actor_total} actors.")
        return trace


def fib_actor_count(k: int, threshold: int = DEFAULT_FIB_THRESHOLD) -> int:
    """A(k) = 1 for k <= threshold, else 1 + A(k-1) + A(k-2)."""
    if k <= threshold:
        return 1
    prev, cur = 1, 1  # A(threshold - 1), A(threshold)
    for _ in range(threshold + 1, k + 1):
        prev, cur = cur, 1 + cur + prev
    return cur


def gen_fib_trace(k: int, threshold: int = DEFAULT_FIB_THRESHOLD) -> MutationTrace:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}.")
    if threshold < 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}.")

    builder = _TraceBuilder()

    def run(actor: ActorId, parent: Optional[ActorId], j: int) -> None:
        if j > threshold:
            children = []
            for sub in (j - 1, j - 2):
                child = builder.spawn(actor)
                builder.emit(EventKind.ADD_REF, child, actor)
                children.append((child, sub))
            for child, sub in children:
                if actor != ROOT_ACTOR:
                    builder.emit(EventKind.BLOCK, actor)
                run(child, actor, sub)
        if parent is not None:
            builder.reply_and_terminate(actor, parent)

    run(ROOT_ACTOR, None, k)
    return builder.build(f"fib-{k}-t{threshold}", fib_actor_count(k, threshold))


def gen_nqueens_trace(n: int) -> MutationTrace:
    """Coordinator plus (n-1) first-level workers, each spawning (n-3)
    second-level workers: (n-1)(n-2) workers in total."""
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}.")

    builder = _TraceBuilder()
    coordinator = ROOT_ACTOR
    first_level = []
    for _ in range(n - 1):
        worker = builder.spawn(coordinator)
        builder.emit(EventKind.ADD_REF, worker, coordinator)
        first_level.append(worker)

    for worker in first_level:
        second_level = []
        for _ in range(n - 3):
            sub = builder.spawn(worker)
            builder.emit(EventKind.ADD_REF, sub, coordinator)
            second_level.append(sub)
        for sub in second_level:
            builder.emit(EventKind.DROP_REF, worker, sub)
        builder.reply_and_terminate(worker, coordinator)
        for sub in second_level:
            builder.emit(EventKind.SEND, sub, coordinator)
            builder.emit(EventKind.TERMINATE, sub)

    return builder.build(f"nq-{n}", (n - 1) * (n - 2) + 1)


def gen_matmul_trace(dim: int, distributed: bool = False) -> MutationTrace:
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}.")

    builder = _TraceBuilder()
    initiator = ROOT_ACTOR
    if distributed:
        workers = []
        for _ in range(DMX_WORKERS):
            worker = builder.spawn(initiator)
            builder.emit(EventKind.ADD_REF, worker, initiator)
            workers.append(worker)
        for worker in workers:
            builder.emit(EventKind.SEND, initiator, worker)
        for worker in workers:
            builder.reply_and_terminate(worker, initiator)
        return builder.build(f"dmx-{dim}", DMX_WORKERS + 1)

    merger = builder.spawn(initiator)
    builder.emit(EventKind.ADD_REF, merger, initiator)
    builder.emit(EventKind.BLOCK, merger)
    worker = builder.spawn(initiator)
    builder.emit(EventKind.ADD_REF, worker, merger)
    builder.emit(EventKind.SEND, initiator, worker)
    builder.emit(EventKind.SEND, worker, merger)
    builder.emit(EventKind.DROP_REF, initiator, worker)
    builder.emit(EventKind.TERMINATE, worker)
    builder.reply_and_terminate(merger, initiator)
    return builder.build(f"mx-{dim}", 3)


def generate_trace(workload: Workload, arg: int, threshold: int = DEFAULT_FIB_THRESHOLD,
                   distributed: bool = False) -> MutationTrace:
    workload = Workload(workload)
    if workload == Workload.FIB:
        return gen_fib_trace(arg, threshold)
    if workload == Workload.NQ:
        return gen_nqueens_trace(arg)
    return gen_matmul_trace(arg, distributed)


def format_trace(trace: MutationTrace) -> str:
    lines = [f"trace {trace.label} {trace.expected_actor_total}"]
    text = "\n".join(lines) + "\n" + serialize_graph(trace.initial) + "events\n"
    return text + "".join(f"{event}\n" for event in trace.events)


def _strip(raw_line: str) -> str:
    return raw_line.split("#", 1)[0].strip()


def parse_trace(text: str) -> MutationTrace:
    lines = text.splitlines()
    header_idx = next((i for i, raw in enumerate(lines) if _strip(raw)), None)
    if header_idx is None:
        raise GraphParseError("empty trace")
    header = _strip(lines[header_idx]).split()
    if len(header) != 3 or header[0] != "trace" or not (header[2].isascii() and header[2].isdigit()):
        raise GraphParseError(f"expected 'trace <label> <expected_actor_total>', got '{_strip(lines[header_idx])}'",
                              header_idx + 1)

    events_idx = next((i for i in range(header_idx + 1, len(lines)) if _strip(lines[i]) == "events"), None)
    if events_idx is None:
        raise GraphParseError("missing 'events' section")
    # leading blank lines keep parse_graph's line numbers absolute
    initial = parse_graph("\n" * (header_idx + 1) + "\n".join(lines[header_idx + 1:events_idx]))

    events: List[MutationEvent] = []
    for line_no, raw_line in enumerate(lines[events_idx + 1:], start=events_idx + 2):
        line = _strip(raw_line)
        if not line:
            continue
        tokens = line.split()
        if len(tokens) < 2 or not (tokens[0].isascii() and tokens[0].isdigit()):
            raise GraphParseError(f"expected '<step> <kind> <args...>', got '{line}'", line_no)
        step = int(tokens[0])
        if step != len(events) + 1:
            raise GraphParseError(f"expected step {len(events) + 1}, got {step}", line_no)
        try:
            kind = EventKind(tokens[1])
        except ValueError:
            raise GraphParseError(f"unknown event kind '{tokens[1]}'", line_no)
        if len(tokens) - 2 != kind.arity:
            raise GraphParseError(f"event '{kind}' takes {kind.arity} actor(s), got {len(tokens) - 2}", line_no)
        events.append(MutationEvent(step, kind, (parse_actor_id(t, line_no) for t in tokens[2:])))

    trace = MutationTrace(header[1], initial, events, int(header[2]))
    logger.debug(f"Parsed {trace!r}.")
    return trace


def spawn_graph(trace: MutationTrace) -> ActorGraph:
    """Every actor that ever exists in the trace, linked by its spawn edges."""
    actors = set(trace.initial.actors)
    references = set(trace.initial.references)
    for event in trace.events:
        if event.kind == EventKind.SPAWN:
            parent, child = event.args
            actors.add(child)
            references.add((parent, child))
    return ActorGraph(actors, references, trace.initial.roots, trace.initial.unblocked | actors)


class TraceState:
    """Mutable actor graph evolving under trace events."""

    def __init__(self, initial: ActorGraph):
        self.actors: Set[ActorId] = set(initial.actors)
        self.references: Set[Tuple[ActorId, ActorId]] = set()
        self.outgoing: Dict[ActorId, Set[ActorId]] = defaultdict(set)
        self.roots: Set[ActorId] = set(initial.roots)
        self.unblocked: Set[ActorId] = set(initial.unblocked)
        self.spawned: Set[ActorId] = set(initial.actors)
        self.collected: Set[ActorId] = set()
        self.step = 0
        # references created or destroyed, the collector's bookkeeping load
        self.reference_changes = 0
        for src, dst in initial.references:
            self._add_ref(src, dst)

    def _require(self, condition: bool, message: str, step: int) -> None:
        if not condition:
            logger.error(f"Trace precondition failed at step {step}: {message}")
            raise TraceError(message, step)

    def _add_ref(self, src: ActorId, dst: ActorId) -> None:
        self.references.add((src, dst))
        self.outgoing[src].add(dst)

    def _drop_ref(self, src: ActorId, dst: ActorId) -> None:
        self.references.discard((src, dst))
        self.outgoing[src].discard(dst)

    def apply(self, event: MutationEvent) -> int:
        """Applies one event and returns its mutator operation count."""
        step = event.step
        kind = event.kind
        if kind == EventKind.SPAWN:
            parent, child = event.args
            self._require(parent in self.actors, f"spawning actor {parent} does not exist", step)
            self._require(parent in self.unblocked, f"spawning actor {parent} is blocked", step)
            self._require(child not in self.spawned, f"spawned actor {child} is not fresh", step)
        else:
            for a in event.args:
                self._require(a in self.actors, f"actor {a} does not exist", step)

        ops = 1
        if kind == EventKind.SPAWN:
            parent, child = event.args
            self.actors.add(child)
            self.spawned.add(child)
            self.unblocked.add(child)
            self._add_ref(parent, child)
            self.reference_changes += 1
        elif kind == EventKind.ADD_REF:
            self._add_ref(*event.args)
            self.reference_changes += 1
        elif kind == EventKind.DROP_REF:
            self._require(event.args in self.references, f"reference {event.args[0]}->{event.args[1]} not held", step)
            self._drop_ref(*event.args)
            self.reference_changes += 1
        elif kind == EventKind.SEND:
            src, dst = event.args
            self._require(src in self.unblocked, f"sender {src} is blocked", step)
            self._require((src, dst) in self.references, f"sender {src} holds no reference to {dst}", step)
            self.unblocked.add(dst)
        elif kind == EventKind.BLOCK:
            (a,) = event.args
            self._require(a not in self.roots, f"root {a} cannot block", step)
            self.unblocked.discard(a)
        elif kind == EventKind.UNBLOCK:
            self.unblocked.add(event.args[0])
        elif kind == EventKind.TERMINATE:
            (a,) = event.args
            self._require(a not in self.roots, f"root {a} cannot terminate", step)
            dropped = self.outgoing.pop(a, set())
            self.references.difference_update((a, b) for b in dropped)
            self.unblocked.discard(a)
            ops += len(dropped)
            self.reference_changes += len(dropped)
        self.step = step
        return ops

    def snapshot(self) -> ActorGraph:
        return ActorGraph(self.actors, self.references, self.roots, self.unblocked)

    def remove(self, actors: Iterable[ActorId]) -> None:
        gone = set(actors)
        self.actors -= gone
        self.unblocked -= gone
        self.roots -= gone
        for a in gone:
            self.outgoing.pop(a, None)
        for targets in self.outgoing.values():
            targets -= gone
        self.references = {(s, d) for s, d in self.references if s not in gone and d not in gone}
        self.collected |= gone

    def conservation_problems(self, universe: FrozenSet[ActorId]) -> List[str]:
        problems = []
        if self.collected & self.actors:
            problems.append(f"step {self.step}: actors {sorted(self.collected & self.actors)} both collected and surviving")
        not_yet = universe - self.spawned
        if self.collected | self.actors | not_yet != universe:
            missing = sorted(universe - self.collected - self.actors - not_yet)
            problems.append(f"step {self.step}: actors {missing} unaccounted for")
        return problems


def premature_collections(collected: Iterable[ActorId], last_use: Dict[ActorId, int], step: int) -> List[ActorId]:
    """Actors collected at `step` that a later event still names."""
    return sorted(a for a in collected if last_use.get(a, 0) > step)


class GcCost:
    """GC work split into transform construction, marking and the mutator's
    reference bookkeeping. gc_ops is their sum."""

    def __init__(self, transform_ops: int = 0, mark_ops: int = 0, bookkeeping_ops: int = 0):
        self.transform_ops = transform_ops
        self.mark_ops = mark_ops
        self.bookkeeping_ops = bookkeeping_ops

    @property
    def gc_ops(self) -> int:
        return self.transform_ops + self.mark_ops + self.bookkeeping_ops

    def add_collection(self, outcome: CollectionOutcome) -> None:
        self.transform_ops += outcome.transform_ops
        self.mark_ops += outcome.mark_ops

    def add(self, other: "GcCost") -> None:
        self.transform_ops += other.transform_ops
        self.mark_ops += other.mark_ops
        self.bookkeeping_ops += other.bookkeeping_ops

    def to_dict(self) -> Dict[str, int]:
        return {
            "transform_ops": self.transform_ops,
            "mark_ops": self.mark_ops,
            "bookkeeping_ops": self.bookkeeping_ops,
            "gc_ops": self.gc_ops,
        }

    def __repr__(self) -> str:
        return f"GcCost({self.to_dict()})"


class CycleRecord:
    def __init__(self, step: int, actors: int, live: int, garbage: int, cumulative_collected: int, cost: GcCost):
        self.step = step
        self.actors = actors
        self.live = live
        self.garbage = garbage
        self.cumulative_collected = cumulative_collected
        self.cost = cost

    @property
    def gc_ops(self) -> int:
        return self.cost.gc_ops

    def to_schema(self) -> CycleSchema:
        return CycleSchema(step=self.step, actors=self.actors, live=self.live, garbage=self.garbage,
                           collected=self.garbage, cumulative_collected=self.cumulative_collected,
                           **self.cost.to_dict())


class RunReport:
    def __init__(self, trace: MutationTrace, method: TransformMethod, strategy: MarkStrategy,
                 gc_every: Optional[int]):
        self.label = trace.label
        self.expected_actor_total = trace.expected_actor_total
        self.events = len(trace.events)
        self.method = method
        self.strategy = strategy
        self.gc_every = gc_every
        self.cycles: List[CycleRecord] = []
        self.mutator_ops = 0
        self.cost = GcCost()
        self.collected: FrozenSet[ActorId] = frozenset()
        self.surviving: FrozenSet[ActorId] = frozenset()
        self.final_graph: Optional[ActorGraph] = None
        self.violations: List[str] = []

    @property
    def gc_ops(self) -> int:
        return self.cost.gc_ops

    @property
    def overhead(self) -> RatioSchema:
        return RatioSchema(numerator=self.mutator_ops + self.gc_ops, denominator=self.mutator_ops)

    def to_schema(self, seed: Optional[int] = None) -> RunReportSchema:
        return RunReportSchema(
            seed=seed,
            label=self.label,
            method=self.method,
            strategy=self.strategy,
            gc_every=self.gc_every,
            events=self.events,
            expected_actor_total=self.expected_actor_total,
            collected=len(self.collected),
            surviving=len(self.surviving),
            mutator_ops=self.mutator_ops,
            **self.cost.to_dict(),
            overhead=self.overhead,
            cycles=[c.to_schema() for c in self.cycles],
        )


def replay(trace: MutationTrace,
           gc_every: Optional[int] = None,
           method: TransformMethod = TransformMethod.DIRECT,
           strategy: MarkStrategy = MarkStrategy.TWO_SCAN,
           frontier: Frontier = Frontier.FIFO,
           memory_threshold: Optional[int] = None,
           final_collect: bool = True) -> RunReport:
    """Replays `trace`, collecting every `gc_every` events (None disables
    periodic collection) and whenever the actor count reaches
    `memory_threshold`. Raises SafetyViolationError on a premature collection.

    With collection enabled every reference created or destroyed costs one
    bookkeeping op, charged to the next cycle."""
    if gc_every is not None and gc_every < 1:
        raise ValueError(f"gc_every must be >= 1 or None, got {gc_every}.")
    if memory_threshold is not None and memory_threshold < 1:
        raise ValueError(f"memory_threshold must be >= 1 or None, got {memory_threshold}.")
    method, strategy = TransformMethod(method), MarkStrategy(strategy)

    universe = trace.actor_universe()
    last_use = trace.last_use()
    state = TraceState(trace.initial)
    marker = EpochMarker() if strategy == MarkStrategy.ONE_SCAN else None
    report = RunReport(trace, method, strategy, gc_every)
    gc_enabled = gc_every is not None or memory_threshold is not None
    pending = GcCost()

    def gc_cycle() -> None:
        nonlocal pending
        graph = state.snapshot()
        outcome = run_collection(graph, method, strategy, frontier, marker)
        garbage = outcome.result.garbage
        premature = premature_collections(garbage, last_use, state.step)
        if premature:
            msg = (f"Premature collection in '{trace.label}' at step {state.step}: "
                   f"actors {premature} are used by later events.")
            logger.error(msg)
            raise SafetyViolationError(msg)
        state.remove(garbage)
        pending.add_collection(outcome)
        report.cost.add(pending)
        report.cycles.append(CycleRecord(state.step, len(graph.actors), len(outcome.result.live), len(garbage),
                                         len(state.collected), pending))
        pending = GcCost()
        report.violations.extend(state.conservation_problems(universe))
        logger.debug(f"GC at step {state.step}: collected {len(garbage)}, {len(state.actors)} actors remain.")

    since_gc = 0
    for event in trace.events:
        changes = state.reference_changes
        report.mutator_ops += state.apply(event)
        if gc_enabled:
            pending.bookkeeping_ops += state.reference_changes - changes
        since_gc += 1
        due = gc_every is not None and since_gc >= gc_every
        pressured = memory_threshold is not None and len(state.actors) >= memory_threshold
        if due or pressured:
            gc_cycle()
            since_gc = 0
    if gc_enabled and final_collect and (since_gc or not report.cycles):
        gc_cycle()
    # bookkeeping done after the last cycle still counts toward the run
    report.cost.add(pending)

    report.collected = frozenset(state.collected)
    report.surviving = frozenset(state.actors)
    report.final_graph = state.snapshot()
    if len(state.spawned) != trace.expected_actor_total:
        report.violations.append(f"trace declares {trace.expected_actor_total} actors but "
                                 f"{len(state.spawned)} existed")
    for problem in report.violations:
        logger.warning(problem)
    logger.info(f"Replayed '{trace.label}' ({method}/{strategy}, gc_every={gc_every}): "
                f"{len(report.collected)} collected, {len(report.surviving)} surviving, "
                f"overhead {report.overhead}, {report.cost}.")
    return report
