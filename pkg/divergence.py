from typing import Any, Dict, FrozenSet, List, Optional, Tuple
import logging

from actor_graph import ActorGraph, ActorId
from enums.gc_enums import DivergenceClass, MarkStrategy, TransformMethod
from liveness import live_fixpoint
from passive_collect import marked_actors
from report_models import DivergenceReportSchema, DivergenceRowSchema, DivergenceSummarySchema
from transforms import RULE4_ALTERNATIVE_READING, RULE4_INTERPRETATION, va_edge_accounting

logger = logging.getLogger(__name__)


class DivergenceRow:
    def __init__(self, actor: ActorId, oracle: bool, direct: bool, indirect: bool, va: bool,
                 divergence: Optional[DivergenceClass] = None):
        self.actor = actor
        self.oracle = oracle
        self.direct = direct
        self.indirect = indirect
        self.va = va
        self.divergence = divergence

    @property
    def wang_agrees(self) -> bool:
        return self.direct == self.oracle and self.indirect == self.oracle

    def to_dict(self) -> Dict[str, Any]:
        return {
            "actor": self.actor,
            "oracle": self.oracle,
            "direct": self.direct,
            "indirect": self.indirect,
            "va": self.va,
            "divergence": str(self.divergence) if self.divergence else None,
        }


class DivergenceReport:
    def __init__(self, rows: List[DivergenceRow], header: Dict[str, str], va_edges: Dict[str, int]):
        self.rows = rows
        self.header = header
        self.va_edges = va_edges

    @property
    def wang_agrees(self) -> bool:
        return all(row.wang_agrees for row in self.rows)

    @property
    def va_divergences(self) -> List[DivergenceRow]:
        return [row for row in self.rows if row.divergence is not None]

    def class_counts(self) -> Dict[str, int]:
        counts = {str(c): 0 for c in DivergenceClass}
        for row in self.va_divergences:
            counts[str(row.divergence)] += 1
        return counts

    def to_dict(self) -> Dict[str, Any]:
        return {
            "header": self.header,
            "va_edges": self.va_edges,
            "wang_agrees": self.wang_agrees,
            "class_counts": self.class_counts(),
            "rows": [row.to_dict() for row in self.rows],
        }

    def summary_schema(self) -> DivergenceSummarySchema:
        return DivergenceSummarySchema(
            wang_agrees=self.wang_agrees,
            va_divergent_actors=[row.actor for row in self.va_divergences],
            class_counts=self.class_counts(),
            va_edges=self.va_edges,
        )

    def to_schema(self) -> DivergenceReportSchema:
        return DivergenceReportSchema(
            header=self.header,
            summary=self.summary_schema(),
            rows=[DivergenceRowSchema(**row.to_dict()) for row in self.rows],
        )


def _classify(g: ActorGraph, successors: Dict[ActorId, Tuple[ActorId, ...]], actor: ActorId,
              oracle_live: FrozenSet[ActorId], va_live: FrozenSet[ActorId],
              active: FrozenSet[ActorId]) -> DivergenceClass:
    if actor in oracle_live and actor not in va_live and actor not in g.unblocked:
        return DivergenceClass.BLOCKED_RECEIVER
    if (actor in va_live and actor not in oracle_live and actor not in active
            and any(b in oracle_live for b in successors.get(actor, ()))):
        return DivergenceClass.INACTIVE_REFERENCER
    return DivergenceClass.UNCLASSIFIED


def divergence_report(g: ActorGraph, strategy: MarkStrategy = MarkStrategy.TWO_SCAN) -> DivergenceReport:
    oracle = live_fixpoint(g)
    marked = {method: marked_actors(g, method, strategy) for method in TransformMethod}
    successors = g.successors()

    rows = []
    for a in sorted(g.actors):
        row = DivergenceRow(
            actor=a,
            oracle=a in oracle.live,
            direct=a in marked[TransformMethod.DIRECT],
            indirect=a in marked[TransformMethod.INDIRECT],
            va=a in marked[TransformMethod.VA],
        )
        if row.va != row.oracle:
            row.divergence = _classify(g, successors, a, oracle.live, marked[TransformMethod.VA],
                                      oracle.potentially_active)
        rows.append(row)

    va_edges = va_edge_accounting(g)
    header = {
        "oracle": "least fixpoint: roots live; referents of live actors live; "
                  "potentially active referencers of live actors live",
        "va_decision": "actor a is live iff alpha(a) is marked",
        "va_rule4": RULE4_INTERPRETATION,
        "va_rule4_alternative": RULE4_ALTERNATIVE_READING,
        "va_edge_claim": f"exact |V|+|U|+2|E| = {va_edges['exact']} vs claimed 3|E| = {va_edges['claimed']} "
                         f"(delta {va_edges['delta']:+d})",
    }
    report = DivergenceReport(rows, header, va_edges)

    if not report.wang_agrees:
        bad = [row.actor for row in report.rows if not row.wang_agrees]
        logger.error(f"Back-pointer transforms disagree with the oracle on actors {bad}.")
    if report.va_divergences:
        logger.warning(f"Vardhan-Agha rules diverge from the oracle on {len(report.va_divergences)} actors: "
                       f"{report.class_counts()}")
    return report
