from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Set, Tuple, Union
import itertools
import logging
import os
import random

logger = logging.getLogger(__name__)

ActorId = int
PassiveNodeId = int
Edge = Tuple[int, int]

BLOCKED = "blocked"
UNBLOCKED = "unblocked"
ROOT_MARKER = "root"


class GraphParseError(ValueError):
    def __init__(self, message: str, line_no: Optional[int] = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


def _adjacency(keys: Iterable[int], pairs: Iterable[Edge]) -> Dict[int, Tuple[int, ...]]:
    table: Dict[int, List[int]] = {k: [] for k in keys}
    for src, dst in sorted(pairs):
        table.setdefault(src, []).append(dst)
    return {k: tuple(v) for k, v in table.items()}


class ActorGraph:
    """Actor reference graph: actors (V), references (E), roots (R), unblocked (U).

    Instances are immutable. The constructor does not check the invariants so
    that malformed graphs can still be built and handed to validate().
    """

    def __init__(self,
                 actors: Iterable[ActorId] = (),
                 references: Iterable[Edge] = (),
                 roots: Iterable[ActorId] = (),
                 unblocked: Iterable[ActorId] = ()):
        self.actors: FrozenSet[ActorId] = frozenset(actors)
        self.references: FrozenSet[Edge] = frozenset((src, dst) for src, dst in references)
        self.roots: FrozenSet[ActorId] = frozenset(roots)
        self.unblocked: FrozenSet[ActorId] = frozenset(unblocked)
        self._successors: Optional[Dict[ActorId, Tuple[ActorId, ...]]] = None
        self._predecessors: Optional[Dict[ActorId, Tuple[ActorId, ...]]] = None

    @property
    def blocked(self) -> FrozenSet[ActorId]:
        return self.actors - self.unblocked

    @property
    def seeds(self) -> FrozenSet[ActorId]:
        """U ∪ R: the actors that can run without receiving a message first."""
        return self.unblocked | self.roots

    def successors(self) -> Dict[ActorId, Tuple[ActorId, ...]]:
        if self._successors is None:
            self._successors = _adjacency(self.actors, self.references)
        return self._successors

    def predecessors(self) -> Dict[ActorId, Tuple[ActorId, ...]]:
        if self._predecessors is None:
            self._predecessors = _adjacency(self.actors, ((dst, src) for src, dst in self.references))
        return self._predecessors

    def without(self, removed: Iterable[ActorId]) -> 'ActorGraph':
        gone = frozenset(removed)
        if not gone:
            return self
        return ActorGraph(
            actors=self.actors - gone,
            references=((s, d) for s, d in self.references if s not in gone and d not in gone),
            roots=self.roots - gone,
            unblocked=self.unblocked - gone,
        )

    def stats(self) -> Dict[str, int]:
        return {
            "actors": len(self.actors),
            "references": len(self.references),
            "roots": len(self.roots),
            "unblocked": len(self.unblocked),
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ActorGraph):
            return NotImplemented
        return (self.actors == other.actors and self.references == other.references
                and self.roots == other.roots and self.unblocked == other.unblocked)

    def __hash__(self) -> int:
        return hash((self.actors, self.references, self.roots, self.unblocked))

    def __repr__(self) -> str:
        return (f"ActorGraph(actors={sorted(self.actors)}, references={sorted(self.references)}, "
                f"roots={sorted(self.roots)}, unblocked={sorted(self.unblocked)})")

    def __str__(self) -> str:
        return (f"<ActorGraph |V|={len(self.actors)} |E|={len(self.references)} "
                f"|R|={len(self.roots)} |U|={len(self.unblocked)}>")


class PassiveGraph:
    def __init__(self,
                 nodes: Iterable[PassiveNodeId] = (),
                 edges: Iterable[Edge] = (),
                 roots: Iterable[PassiveNodeId] = ()):
        self.nodes: FrozenSet[PassiveNodeId] = frozenset(nodes)
        self.edges: FrozenSet[Edge] = frozenset((src, dst) for src, dst in edges)
        self.roots: FrozenSet[PassiveNodeId] = frozenset(roots)
        self._successors: Optional[Dict[PassiveNodeId, Tuple[PassiveNodeId, ...]]] = None

    def successors(self) -> Dict[PassiveNodeId, Tuple[PassiveNodeId, ...]]:
        if self._successors is None:
            self._successors = _adjacency(self.nodes, self.edges)
        return self._successors

    def violations(self) -> List[str]:
        problems = [f"root {r} not a node" for r in sorted(self.roots - self.nodes)]
        for src, dst in sorted(self.edges):
            for endpoint in (src, dst):
                if endpoint not in self.nodes:
                    problems.append(f"edge {src}->{dst}: endpoint {endpoint} not a node")
        return problems

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PassiveGraph):
            return NotImplemented
        return self.nodes == other.nodes and self.edges == other.edges and self.roots == other.roots

    def __hash__(self) -> int:
        return hash((self.nodes, self.edges, self.roots))

    def __repr__(self) -> str:
        return (f"PassiveGraph(nodes={sorted(self.nodes)}, edges={sorted(self.edges)}, "
                f"roots={sorted(self.roots)})")


class NodeMap:
    """Actor -> passive node(s). Vertex-preserving transforms map an actor to a
    single node; the dual-node transform maps it to an (alpha, mu) pair, where
    alpha is the original object and mu its mail queue."""

    def __init__(self, entries: Dict[ActorId, Union[PassiveNodeId, Tuple[PassiveNodeId, PassiveNodeId]]]):
        self._entries = dict(entries)
        self.paired = any(isinstance(v, tuple) for v in self._entries.values())
        if self.paired and not all(isinstance(v, tuple) for v in self._entries.values()):
            raise ValueError("NodeMap entries must be all single nodes or all (alpha, mu) pairs.")

    @staticmethod
    def identity(actors: Iterable[ActorId]) -> 'NodeMap':
        return NodeMap({a: a for a in actors})

    @staticmethod
    def alpha_mu(actors: Iterable[ActorId]) -> 'NodeMap':
        return NodeMap({a: (2 * a, 2 * a + 1) for a in actors})

    @property
    def actors(self) -> FrozenSet[ActorId]:
        return frozenset(self._entries)

    def alpha(self, actor: ActorId) -> PassiveNodeId:
        entry = self._entries[actor]
        return entry[0] if isinstance(entry, tuple) else entry

    def mu(self, actor: ActorId) -> PassiveNodeId:
        entry = self._entries[actor]
        if not isinstance(entry, tuple):
            raise ValueError(f"Actor {actor} has no mail-queue node in a vertex-preserving map.")
        return entry[1]

    def decision_node(self, actor: ActorId) -> PassiveNodeId:
        # garbage status is read from the object node
        return self.alpha(actor)

    def nodes_of(self, actor: ActorId) -> Tuple[PassiveNodeId, ...]:
        entry = self._entries[actor]
        return entry if isinstance(entry, tuple) else (entry,)

    def image(self) -> Set[PassiveNodeId]:
        return {n for a in self._entries for n in self.nodes_of(a)}

    def labels(self) -> Dict[PassiveNodeId, str]:
        if not self.paired:
            return {n: str(a) for a, n in self._entries.items()}
        labels: Dict[PassiveNodeId, str] = {}
        for a, (alpha, mu) in self._entries.items():
            labels[alpha] = f"α({a})"
            labels[mu] = f"μ({a})"
        return labels

    def violations(self, source: ActorGraph, target: PassiveGraph) -> List[str]:
        problems = [f"actor {a} has no node" for a in sorted(source.actors - self.actors)]
        seen: Dict[PassiveNodeId, ActorId] = {}
        for a in sorted(self._entries):
            for n in self.nodes_of(a):
                if n in seen:
                    problems.append(f"node {n} shared by actors {seen[n]} and {a}")
                seen[n] = a
        problems.extend(f"node {n} not in the image" for n in sorted(target.nodes - set(seen)))
        return problems

    def comment_lines(self) -> List[str]:
        lines = []
        for a in sorted(self._entries):
            entry = self._entries[a]
            if isinstance(entry, tuple):
                lines.append(f"# map {a} -> alpha {entry[0]} mu {entry[1]}")
            else:
                lines.append(f"# map {a} -> {entry}")
        return lines

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NodeMap):
            return NotImplemented
        return self._entries == other._entries

    def __repr__(self) -> str:
        return f"NodeMap({dict(sorted(self._entries.items()))})"


def validate(g: ActorGraph) -> List[str]:
    problems: List[str] = []
    for a in sorted(g.actors, key=repr):
        if not isinstance(a, int) or isinstance(a, bool) or a < 0:
            problems.append(f"actor {a!r} is not a non-negative integer id")
    problems.extend(f"root {r} not an actor" for r in sorted(g.roots - g.actors))
    problems.extend(f"unblocked {u} not an actor" for u in sorted(g.unblocked - g.actors))
    for src, dst in sorted(g.references):
        if src not in g.actors:
            problems.append(f"reference {src}->{dst}: source {src} not an actor")
        if dst not in g.actors:
            problems.append(f"reference {src}->{dst}: target {dst} not an actor")
    return problems


def parse_actor_id(token: str, line_no: int) -> int:
    if not (token.isascii() and token.isdigit()):
        raise GraphParseError(f"invalid actor id '{token}'", line_no)
    return int(token)


def parse_graph(text: str, warnings: Optional[List[str]] = None) -> ActorGraph:
    actors: Set[int] = set()
    unblocked: Set[int] = set()
    roots: Set[int] = set()
    references: Set[Edge] = set()
    declared = 0
    section = "header"

    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()

        if section == "header":
            if tokens[0] == "actors":
                if len(tokens) != 2 or not (tokens[1].isascii() and tokens[1].isdigit()):
                    raise GraphParseError(f"expected 'actors <count>', got '{line}'", line_no)
                declared = int(tokens[1])
                section = "actors" if declared else "await_edges"
            elif tokens == ["edges"]:
                section = "edges"
            else:
                raise GraphParseError(f"expected 'actors <count>' or 'edges', got '{line}'", line_no)
            continue

        if section == "actors":
            if tokens[0] == "edges":
                raise GraphParseError(f"expected {declared} actor lines, found {len(actors)}", line_no)
            if len(tokens) not in (2, 3) or tokens[1] not in (BLOCKED, UNBLOCKED) \
                    or (len(tokens) == 3 and tokens[2] != ROOT_MARKER):
                raise GraphParseError(f"expected '<id> <blocked|unblocked>[ root]', got '{line}'", line_no)
            actor_id = parse_actor_id(tokens[0], line_no)
            if actor_id in actors:
                raise GraphParseError(f"actor {actor_id} declared twice", line_no)
            actors.add(actor_id)
            is_root = len(tokens) == 3
            if tokens[1] == UNBLOCKED:
                unblocked.add(actor_id)
            if is_root:
                roots.add(actor_id)
                if tokens[1] == BLOCKED:
                    msg = f"root {actor_id} declared blocked; normalised to unblocked"
                    logger.warning(msg)
                    unblocked.add(actor_id)
                    if warnings is not None:
                        warnings.append(msg)
            if len(actors) == declared:
                section = "await_edges"
            continue

        if section == "await_edges":
            if tokens != ["edges"]:
                raise GraphParseError(f"expected 'edges', got '{line}'", line_no)
            section = "edges"
            continue

        if len(tokens) != 2:
            raise GraphParseError(f"expected '<src-id> <dst-id>', got '{line}'", line_no)
        src, dst = parse_actor_id(tokens[0], line_no), parse_actor_id(tokens[1], line_no)
        for endpoint in (src, dst):
            if endpoint not in actors:
                raise GraphParseError(f"actor {endpoint} undeclared", line_no)
        references.add((src, dst))

    if section == "actors":
        raise GraphParseError(f"expected {declared} actor lines, found {len(actors)}")

    graph = ActorGraph(actors, references, roots, unblocked)
    logger.debug(f"Parsed {graph}.")
    return graph


def serialize_graph(g: ActorGraph) -> str:
    lines = [f"actors {len(g.actors)}"]
    for a in sorted(g.actors):
        status = UNBLOCKED if a in g.unblocked else BLOCKED
        lines.append(f"{a} {status} {ROOT_MARKER}" if a in g.roots else f"{a} {status}")
    lines.append("edges")
    lines.extend(f"{src} {dst}" for src, dst in sorted(g.references))
    return "\n".join(lines) + "\n"


def serialize_passive_graph(p: PassiveGraph, node_map: Optional[NodeMap] = None) -> str:
    # passive objects are written as permanently blocked actors
    as_actors = ActorGraph(p.nodes, p.edges, p.roots, p.roots)
    text = serialize_graph(as_actors)
    if node_map is not None:
        text += "\n".join(node_map.comment_lines()) + "\n"
    return text


def random_graph(seed: int,
                 n_actors: int,
                 edge_density: float,
                 p_unblocked: float,
                 n_roots: int) -> ActorGraph:
    if n_actors < 0:
        raise ValueError(f"n_actors must be non-negative, got {n_actors}.")
    if not 0 <= n_roots <= n_actors:
        raise ValueError(f"n_roots must satisfy 0 <= n_roots <= n_actors ({n_actors}), got {n_roots}.")
    if not 0.0 <= p_unblocked <= 1.0:
        raise ValueError(f"p_unblocked must be within [0, 1], got {p_unblocked}.")
    if not 0.0 <= edge_density <= 1.0:
        raise ValueError(f"edge_density must be within [0, 1], got {edge_density}.")

    rng = random.Random(seed)
    pair_count = n_actors * n_actors
    picks = rng.sample(range(pair_count), round(edge_density * pair_count))
    references = [(i // n_actors, i % n_actors) for i in picks]
    roots = set(rng.sample(range(n_actors), n_roots))
    unblocked = {a for a in range(n_actors) if rng.random() < p_unblocked} | roots
    return ActorGraph(range(n_actors), references, roots, unblocked)


def all_graphs(n_actors: int, canonical: bool = False) -> Iterator[ActorGraph]:
    """Every graph over actors 0..n-1: each edge subset (self-loops included)
    times each per-actor state in {blocked, unblocked, unblocked root}.

    With canonical=True states are non-decreasing in actor id. Every graph is
    a relabeling of one of these, so checks of relabeling-invariant properties
    stay exhaustive on far fewer graphs."""
    actors = list(range(n_actors))
    pairs = [(s, d) for s in actors for d in actors]
    if canonical:
        state_choices = list(itertools.combinations_with_replacement((0, 1, 2), n_actors))
    else:
        state_choices = list(itertools.product((0, 1, 2), repeat=n_actors))
    for mask in range(1 << len(pairs)):
        yield from graphs_for_mask(actors, pairs, mask, state_choices)


def graphs_for_mask(actors: List[ActorId], pairs: List[Edge], mask: int,
                    state_choices: Iterable[Tuple[int, ...]]) -> Iterator[ActorGraph]:
    references = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
    for states in state_choices:
        yield ActorGraph(
            actors,
            references,
            roots=[a for a, s in zip(actors, states) if s == 2],
            unblocked=[a for a, s in zip(actors, states) if s >= 1],
        )


def to_dot(graph: Union[ActorGraph, PassiveGraph], node_map: Optional[NodeMap] = None) -> str:
    lines: List[str] = []
    if isinstance(graph, ActorGraph):
        lines.append("digraph actors {")
        for a in sorted(graph.actors):
            shape = "triangle" if a in graph.roots else "circle"
            style = "bold" if a in graph.unblocked else "dashed"
            lines.append(f"  {a} [shape={shape}, style={style}];")
        edges = graph.references
    else:
        lines.append("digraph passive {")
        labels = node_map.labels() if node_map is not None else {}
        for n in sorted(graph.nodes):
            shape = "triangle" if n in graph.roots else "circle"
            label = f', label="{labels[n]}"' if n in labels else ""
            lines.append(f"  {n} [shape={shape}{label}];")
        edges = graph.edges
    lines.extend(f"  {src} -> {dst};" for src, dst in sorted(edges))
    lines.append("}")
    return "\n".join(lines) + "\n"


def read_text_file(filepath: str) -> str:
    if not os.path.exists(filepath):
        logger.warning(f"File not found for loading: {filepath}")
        raise FileNotFoundError(f"File not found: {filepath}")
    try:
        with open(filepath, 'r', encoding='utf-8') as f:
            return f.read()
    except (IOError, UnicodeDecodeError) as e:
        logger.error(f"Error while reading file {filepath}: {e}", exc_info=True)
        raise IOError(f"Could not read file {filepath}: {e}")


def write_text_file(filepath: str, text: str) -> None:
    directory = os.path.dirname(filepath)
    if directory and not os.path.exists(directory):
        try:
            os.makedirs(directory, exist_ok=True)
            logger.debug(f"Created directory: {directory}")
        except OSError as e:
            logger.error(f"Could not create directory {directory}: {e}", exc_info=True)
            raise IOError(f"Could not create directory {directory}: {e}")
    try:
        with open(filepath, 'w', encoding='utf-8') as f:
            f.write(text)
        logger.info(f"Wrote {len(text)} characters to {filepath}.")
    except IOError as e:
        logger.error(f"IOError while writing to file {filepath}: {e}", exc_info=True)
        raise IOError(f"Could not write to file {filepath}: {e}")


def read_graph_file(filepath: str, warnings: Optional[List[str]] = None) -> ActorGraph:
    logger.info(f"Loading actor graph from: {filepath}")
    return parse_graph(read_text_file(filepath), warnings)
