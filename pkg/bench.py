from typing import List, Optional, Sequence, Tuple
import csv
import io
import logging
import os
import time

import yaml
from pydantic import ValidationError

from actor_graph import ActorGraph, read_text_file, write_text_file
from distributed import ModeReport, run_modes
from divergence import divergence_report
from enums.gc_enums import GcMode, MarkStrategy, TransformMethod
from liveness import live_fixpoint, live_reachset
from passive_collect import build_report, run_collection
from report_models import BenchCellReport, BenchSuiteSchema, WorkloadSchema
from workloads import MutationTrace, generate_trace

logger = logging.getLogger(__name__)

Table = Tuple[List[str], List[List[str]]]


def load_suite(filepath: str) -> BenchSuiteSchema:
    text = read_text_file(filepath)
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        msg = f"Suite file {filepath} is not valid YAML: {e}"
        logger.error(msg)
        raise ValueError(msg)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        msg = f"Suite file {filepath} must contain a mapping, got {type(data).__name__}."
        logger.error(msg)
        raise ValueError(msg)
    try:
        suite = BenchSuiteSchema.model_validate(data)
    except ValidationError as e:
        msg = f"Suite file {filepath} is invalid: {e}"
        logger.error(msg)
        raise ValueError(msg)
    logger.info(f"Loaded suite from {filepath}: {len(suite.workloads)} workloads, "
                f"{len(suite.methods)} methods, {len(suite.strategies)} strategies.")
    return suite


class SnapshotChecker:
    """Checks oracle agreement on every collection snapshot of a run."""

    def __init__(self, method: TransformMethod, strategy: MarkStrategy):
        self.method = method
        self.strategy = strategy
        self.snapshots = 0
        self.va_divergent_snapshots = 0
        self.failures: List[str] = []
        self.peak: Optional[ActorGraph] = None

    def __call__(self, step: int, graph: ActorGraph) -> None:
        self.snapshots += 1
        if self.peak is None or len(graph.actors) > len(self.peak.actors):
            self.peak = graph
        oracle = live_fixpoint(graph)
        if live_reachset(graph).live != oracle.live:
            self.failures.append(f"step {step}: fixpoint and reach-set oracles disagree")
        marked = run_collection(graph, self.method, self.strategy).result.live
        if marked == oracle.live:
            return
        if self.method == TransformMethod.VA:
            self.va_divergent_snapshots += 1
        else:
            self.failures.append(f"step {step}: {self.method} live set differs from the oracle "
                                 f"on actors {sorted(marked ^ oracle.live)}")


def cell_key(trace: MutationTrace, method: TransformMethod, strategy: MarkStrategy) -> str:
    return f"{trace.label}-{method}-{strategy}"


def run_cell(workload: WorkloadSchema, method: TransformMethod, strategy: MarkStrategy,
             suite: BenchSuiteSchema, timed: bool = False) -> BenchCellReport:
    trace = generate_trace(workload.workload, workload.arg, workload.threshold, workload.distributed)
    checker = SnapshotChecker(method, strategy)
    started = time.perf_counter()
    mode_report = run_modes(
        trace,
        n_nodes=suite.nodes,
        policy=suite.policy,
        local_every=suite.local_every,
        global_every=suite.global_every,
        modes=[GcMode.NO_GC, *suite.modes],
        method=method,
        strategy=strategy,
        snapshot_hook=checker,
    )
    elapsed = time.perf_counter() - started

    peak = checker.peak if checker.peak is not None else trace.initial
    report = build_report(run_collection(peak, method, strategy), seed=suite.seed,
                          timings={"cell_seconds": elapsed} if timed else None)
    report.modes = [run.to_schema() for run in mode_report.runs.values()]
    divergence = divergence_report(peak, strategy)
    report.divergence = divergence.summary_schema()

    violations = list(mode_report.violations)
    universe = len(trace.actor_universe())
    if universe != trace.expected_actor_total:
        violations.append(f"trace declares {trace.expected_actor_total} actors but {universe} exist")
    if not divergence.wang_agrees:
        violations.append("back-pointer transforms disagree with the oracle on the peak snapshot")

    cell = BenchCellReport(
        key=cell_key(trace, method, strategy),
        workload=trace.label,
        actor_total=trace.expected_actor_total,
        method=method,
        strategy=strategy,
        snapshots_checked=checker.snapshots,
        va_divergent_snapshots=checker.va_divergent_snapshots,
        equivalence_failures=checker.failures,
        violations=violations,
        ok=not checker.failures and not violations,
        report=report,
    )
    level = logging.INFO if cell.ok else logging.WARNING
    logger.log(level, f"Cell {cell.key}: {checker.snapshots} snapshots checked, "
                      f"{checker.va_divergent_snapshots} va-divergent, ok={cell.ok}.")
    return cell


def run_suite(suite: BenchSuiteSchema, timed: bool = False) -> List[BenchCellReport]:
    cells = []
    for workload in suite.workloads:
        for method in suite.methods:
            for strategy in suite.strategies:
                cells.append(run_cell(workload, method, strategy, suite, timed))
    keys = [cell.key for cell in cells]
    duplicates = sorted({k for k in keys if keys.count(k) > 1})
    if duplicates:
        raise ValueError(f"Suite produces duplicate cells: {duplicates}.")
    return sorted(cells, key=lambda cell: cell.key)


def combined_table(cells: Sequence[BenchCellReport], modes: Sequence[GcMode]) -> Table:
    shown = [GcMode.NO_GC] + [m for m in GcMode if m in modes and m != GcMode.NO_GC]
    header = ["cell", "actors", "ok", "va divergent"]
    for mode in shown:
        header += [f"{mode.label} ops", f"{mode.label} collected", f"{mode.label} residual",
                   f"{mode.label} overhead"]
    rows = []
    for cell in cells:
        by_mode = {m.mode: m for m in cell.report.modes}
        row = [cell.key, str(cell.actor_total), "yes" if cell.ok else "NO", str(cell.va_divergent_snapshots)]
        for mode in shown:
            result = by_mode.get(mode)
            if result is None:
                row += ["-"] * 4
            else:
                row += [str(result.mutator_ops + result.gc_ops), str(result.collected),
                        str(result.residual_garbage), str(result.overhead)]
        rows.append(row)
    return header, rows


def mode_table(report: ModeReport) -> Table:
    header = ["workload/actors", "mode", "local", "global", "collected", "residual", "mutator ops",
              "transform ops", "mark ops", "bookkeeping ops", "gc ops", "overhead", "violations"]
    rows = []
    for run in report.runs.values():
        rows.append([f"{report.label}/{report.actor_total}", run.mode.label, str(run.local_cycles),
                     str(run.global_cycles), str(len(run.collected)), str(run.residual_garbage),
                     str(run.mutator_ops), str(run.cost.transform_ops), str(run.cost.mark_ops),
                     str(run.cost.bookkeeping_ops), str(run.gc_ops), str(run.overhead), str(len(run.violations))])
    return header, rows


def format_table(table: Table) -> str:
    header, rows = table
    widths = [len(h) for h in header]
    for row in rows:
        widths = [max(w, len(cell)) for w, cell in zip(widths, row)]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip() for line in [header, *rows]]
    return "\n".join(lines) + "\n"


def format_csv(table: Table) -> str:
    header, rows = table
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def write_suite_outputs(cells: Sequence[BenchCellReport], table: Table, out_dir: str) -> None:
    for cell in cells:
        write_text_file(os.path.join(out_dir, f"{cell.key}.json"), cell.model_dump_json(indent=2) + "\n")
    write_text_file(os.path.join(out_dir, "combined.txt"), format_table(table))
    write_text_file(os.path.join(out_dir, "combined.csv"), format_csv(table))
    logger.info(f"Wrote {len(cells)} cell reports and the combined table to {out_dir}.")
