from pydantic import BaseModel, Field
from typing import Dict, List, Optional

from enums.gc_enums import Frontier, GcMode, MarkStrategy, PartitionPolicy, TransformMethod, Workload

TOOL_VERSION = "1.0.0"
DEFAULT_FIB_THRESHOLD = 30


class RatioSchema(BaseModel):
    numerator: int = Field(..., description="Raw, unreduced numerator count")
    denominator: int = Field(..., description="Raw, unreduced denominator count")

    @property
    def value(self) -> Optional[float]:
        if self.denominator == 0:
            return None
        return self.numerator / self.denominator

    def __str__(self) -> str:
        value = self.value
        return "n/a" if value is None else f"{value:.3f}"


class GraphStatsSchema(BaseModel):
    actors: int
    references: int
    roots: int
    unblocked: int


class LivenessSchema(BaseModel):
    tool_version: str = TOOL_VERSION
    live: List[int]
    garbage: List[int]
    potentially_active: List[int]
    oracles_agree: bool = Field(..., description="Worklist fixpoint and reach-set closure give the same live set")
    warnings: List[str] = Field(default_factory=list)


class TransformStatsSchema(BaseModel):
    method: TransformMethod
    input_nodes: int
    input_edges: int
    output_nodes: int
    output_edges: int = Field(..., description="Edges emitted by the rules, before set collapse")
    added_edges: int
    collapsed_edges: int
    traversal_passes: int
    node_ratio: RatioSchema
    edge_ratio: RatioSchema


class MarkStatsSchema(BaseModel):
    strategy: MarkStrategy
    frontier: Frontier
    marked: int
    unmarked: int
    ops: int = Field(..., description="Node visits plus edge traversals")
    scans: int
    peak_frontier: int
    mark_storage: int
    ops_bound: int = Field(..., description="Documented constant c with ops <= c * (|V'| + |E'|)")
    ops_per_size: RatioSchema


class DivergenceRowSchema(BaseModel):
    actor: int
    oracle: bool
    direct: bool
    indirect: bool
    va: bool
    divergence: Optional[str] = None


class DivergenceSummarySchema(BaseModel):
    wang_agrees: bool
    va_divergent_actors: List[int] = Field(default_factory=list)
    class_counts: Dict[str, int] = Field(default_factory=dict)
    va_edges: Dict[str, int] = Field(default_factory=dict, description="Exact vs claimed dual-node edge counts")


class DivergenceReportSchema(BaseModel):
    tool_version: str = TOOL_VERSION
    header: Dict[str, str]
    summary: DivergenceSummarySchema
    rows: List[DivergenceRowSchema]


class ModeResultSchema(BaseModel):
    mode: GcMode
    label: str
    local_cycles: int
    global_cycles: int
    collected: int
    residual_garbage: int
    peak_actors: int
    mutator_ops: int
    transform_ops: int = 0
    mark_ops: int = 0
    bookkeeping_ops: int = Field(default=0, description="References created or destroyed while collection is on")
    gc_ops: int = Field(..., description="transform_ops + mark_ops + bookkeeping_ops")
    overhead: RatioSchema = Field(..., description="(mutator_ops + gc_ops) / mutator_ops")
    violations: List[str] = Field(default_factory=list)


class GcReport(BaseModel):
    tool_version: str = TOOL_VERSION
    seed: Optional[int] = None
    method: TransformMethod
    strategy: MarkStrategy
    graph: GraphStatsSchema
    transform: TransformStatsSchema
    mark: MarkStatsSchema
    live_count: int
    garbage_count: int
    modes: List[ModeResultSchema] = Field(default_factory=list)
    divergence: Optional[DivergenceSummarySchema] = None
    timings: Optional[Dict[str, float]] = Field(default=None, description="Wall-clock seconds, only with --timings")


class CycleSchema(BaseModel):
    step: int
    actors: int
    live: int
    garbage: int
    collected: int
    cumulative_collected: int
    transform_ops: int = 0
    mark_ops: int = 0
    bookkeeping_ops: int = 0
    gc_ops: int


class RunReportSchema(BaseModel):
    tool_version: str = TOOL_VERSION
    seed: Optional[int] = None
    label: str
    method: TransformMethod
    strategy: MarkStrategy
    gc_every: Optional[int] = Field(default=None, description="None means GC disabled")
    events: int
    expected_actor_total: int
    collected: int
    surviving: int
    mutator_ops: int
    transform_ops: int = 0
    mark_ops: int = 0
    bookkeeping_ops: int = 0
    gc_ops: int
    overhead: RatioSchema
    cycles: List[CycleSchema] = Field(default_factory=list)


class ModeReportSchema(BaseModel):
    tool_version: str = TOOL_VERSION
    seed: Optional[int] = None
    label: str
    actor_total: int
    nodes: int
    policy: PartitionPolicy
    method: TransformMethod
    strategy: MarkStrategy
    cross_edges: int
    local_every: Optional[int] = None
    global_every: Optional[int] = None
    modes: List[ModeResultSchema] = Field(default_factory=list)


class WorkloadSchema(BaseModel):
    workload: Workload
    arg: int = Field(..., ge=1, description="k for fib, n for nq, matrix dimension for mx")
    threshold: int = Field(default=DEFAULT_FIB_THRESHOLD, ge=0, description="Sequential cut-off, fib only")
    distributed: bool = Field(default=False, description="Four-worker variant, mx only")


class BenchSuiteSchema(BaseModel):
    seed: int = 0
    workloads: List[WorkloadSchema] = Field(default_factory=list)
    methods: List[TransformMethod] = Field(default_factory=lambda: list(TransformMethod))
    strategies: List[MarkStrategy] = Field(default_factory=lambda: list(MarkStrategy))
    modes: List[GcMode] = Field(default_factory=lambda: list(GcMode))
    nodes: int = Field(default=1, ge=1)
    policy: PartitionPolicy = PartitionPolicy.LOCALITY
    local_every: Optional[int] = Field(default=5, ge=1)
    global_every: Optional[int] = Field(default=None, ge=1)


class BenchCellReport(BaseModel):
    key: str
    workload: str
    actor_total: int
    method: TransformMethod
    strategy: MarkStrategy
    snapshots_checked: int
    va_divergent_snapshots: int = Field(default=0,
                                        description="Snapshots where the dual-node rules disagreed with the oracle")
    equivalence_failures: List[str] = Field(default_factory=list)
    violations: List[str] = Field(default_factory=list)
    ok: bool
    report: GcReport
