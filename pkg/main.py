import functools
import json
import logging
import os
import sys
from typing import List, Optional

import click

try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    logging.warning("python-dotenv not installed, .env file will not be loaded.")

LOG_LEVEL_STR = os.getenv("GC_LOG_LEVEL", "INFO").upper()
LOG_LEVEL = getattr(logging, LOG_LEVEL_STR, logging.INFO)

logging.basicConfig(
    level=LOG_LEVEL,
    format="%(asctime)s - %(name)s [%(levelname)s] - %(message)s",
    handlers=[logging.StreamHandler(sys.stderr)]
)
logger = logging.getLogger(__name__)

from actor_graph import (ActorGraph, GraphParseError, random_graph, read_graph_file, read_text_file,
                         serialize_graph, serialize_passive_graph, to_dot, write_text_file)
from bench import combined_table, format_csv, format_table, load_suite, mode_table, run_suite, write_suite_outputs
from distributed import run_modes
from divergence import divergence_report
from enums.gc_enums import (Frontier, GcMode, MarkStrategy, OutputFormat, PartitionPolicy, TransformMethod,
                            Workload)
from liveness import live_fixpoint, live_reachset
from passive_collect import collect, transform_stats_schema
from report_models import DEFAULT_FIB_THRESHOLD, LivenessSchema
from transforms import transform
from workloads import MutationTrace, SafetyViolationError, format_trace, generate_trace, parse_trace, replay

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2


class CliSettings:
    def __init__(self, seed: int, out_dir: Optional[str], fmt: OutputFormat, timings: bool):
        self.seed = seed
        self.out_dir = out_dir
        self.fmt = fmt
        self.timings = timings


class PeriodType(click.ParamType):
    """A positive event count, or 'inf' for never."""
    name = "period"

    def convert(self, value, param, ctx):
        if value is None or isinstance(value, int):
            return value
        text = str(value).strip().lower()
        if text in ("inf", "never", "none"):
            return None
        try:
            period = int(text)
        except ValueError:
            self.fail(f"'{value}' is not a positive integer or 'inf'", param, ctx)
        if period < 1:
            self.fail(f"period must be >= 1, got {period}", param, ctx)
        return period


PERIOD = PeriodType()


def guarded(func):
    """Maps library errors onto exit codes: 2 for bad input, 1 for violations."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            code = func(*args, **kwargs) or EXIT_OK
        except click.ClickException:
            raise
        except (GraphParseError, ValueError, IOError) as e:
            logger.error(f"CLI: {ctx.info_name}: {e}")
            click.echo(f"Error: {e}", err=True)
            code = EXIT_USAGE
        except SafetyViolationError as e:
            click.echo(f"Invariant violation: {e}", err=True)
            code = EXIT_VIOLATION
        except Exception as e:
            logger.critical(f"CLI: unexpected error in '{ctx.info_name}': {e}", exc_info=True)
            code = EXIT_VIOLATION
        ctx.exit(code)
    return wrapper


def _settings() -> CliSettings:
    return click.get_current_context().find_object(CliSettings)


def _require_format(*allowed: OutputFormat) -> OutputFormat:
    fmt = _settings().fmt
    if fmt not in allowed:
        raise click.UsageError(f"--format {fmt} is not supported here (use one of {', '.join(map(str, allowed))}).")
    return fmt


def _emit(text: str, filename: str) -> None:
    out_dir = _settings().out_dir
    if out_dir:
        write_text_file(os.path.join(out_dir, filename), text)
    else:
        click.echo(text, nl=False)


def _ids(values) -> str:
    return " ".join(str(v) for v in sorted(values))


def _load_graph(path: str) -> ActorGraph:
    warnings: List[str] = []
    g = read_graph_file(path, warnings)
    for warning in warnings:
        click.echo(f"warning: {warning}", err=True)
    return g


def _choice(enum_cls) -> click.Choice:
    return click.Choice([m.value for m in enum_cls])


def trace_options(func):
    decorators = [
        click.option("--workload", type=_choice(Workload), help="Generate a workload trace."),
        click.option("--args", "--arg", "arg", type=int, help="k for fib, n for nq, matrix dimension for mx."),
        click.option("--threshold", type=int, default=DEFAULT_FIB_THRESHOLD, show_default=True,
                     help="Fib sequential cut-off."),
        click.option("--distributed", is_flag=True, help="Four-worker matrix variant."),
        click.option("--trace", "trace_file", type=click.Path(dir_okay=False), help="Import a trace file instead."),
    ]
    for decorator in reversed(decorators):
        func = decorator(func)
    return func


def _load_trace(workload: Optional[str], arg: Optional[int], threshold: int, distributed: bool,
                trace_file: Optional[str]) -> MutationTrace:
    if trace_file:
        return parse_trace(read_text_file(trace_file))
    if workload is None or arg is None:
        raise click.UsageError("Give --workload with --args, or --trace FILE.")
    return generate_trace(Workload(workload), arg, threshold, distributed)


@click.group()
@click.option("--seed", type=int, default=lambda: int(os.getenv("GC_SEED", "0")), show_default="$GC_SEED or 0",
              help="Seed surfaced in every report and used by random generation.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=lambda: os.getenv("GC_OUT_DIR"),
              help="Write outputs into this directory instead of stdout.")
@click.option("--format", "fmt", type=_choice(OutputFormat), default=OutputFormat.JSON.value, show_default=True)
@click.option("--timings", is_flag=True, help="Record wall-clock timings (reports stop being byte-identical).")
@click.pass_context
def cli(ctx, seed, out_dir, fmt, timings):
    """Actor-to-passive graph transformation lab for actor garbage collection."""
    ctx.obj = CliSettings(seed, out_dir, OutputFormat(fmt), timings)


@cli.command()
@click.option("--actors", "n_actors", type=int, default=10, show_default=True)
@click.option("--density", type=float, default=0.1, show_default=True)
@click.option("--p-unblocked", type=float, default=0.3, show_default=True)
@click.option("--roots", "n_roots", type=int, default=1, show_default=True)
@trace_options
@guarded
def gen(n_actors, density, p_unblocked, n_roots, workload, arg, threshold, distributed, trace_file):
    """Emit a seeded random graph, or a workload trace with --workload."""
    settings = _settings()
    if workload is not None or trace_file:
        trace = _load_trace(workload, arg, threshold, distributed, trace_file)
        _emit(format_trace(trace), f"{trace.label}.trace")
        return EXIT_OK
    fmt = _require_format(OutputFormat.JSON, OutputFormat.TABLE, OutputFormat.DOT)
    g = random_graph(settings.seed, n_actors, density, p_unblocked, n_roots)
    if fmt == OutputFormat.DOT:
        _emit(to_dot(g), f"random-{settings.seed}.dot")
    else:
        _emit(serialize_graph(g), f"random-{settings.seed}.graph")
    return EXIT_OK


@cli.command()
@click.argument("graph_file", type=click.Path(dir_okay=False))
@click.option("--frontier", type=_choice(Frontier), default=Frontier.FIFO.value, show_default=True)
@guarded
def oracle(graph_file, frontier):
    """Print the live, garbage and potentially active sets of a graph."""
    fmt = _require_format(OutputFormat.JSON, OutputFormat.TABLE)
    warnings: List[str] = []
    g = read_graph_file(graph_file, warnings)
    result = live_fixpoint(g, Frontier(frontier))
    agree = live_reachset(g).live == result.live
    if fmt == OutputFormat.TABLE:
        text = (f"live: {_ids(result.live)}\n"
                f"garbage: {_ids(result.garbage)}\n"
                f"potentially_active: {_ids(result.potentially_active)}\n")
    else:
        text = LivenessSchema(live=sorted(result.live), garbage=sorted(result.garbage),
                              potentially_active=sorted(result.potentially_active), oracles_agree=agree,
                              warnings=warnings).model_dump_json(indent=2) + "\n"
    _emit(text, "oracle.txt" if fmt == OutputFormat.TABLE else "oracle.json")
    if not agree:
        click.echo("Invariant violation: fixpoint and reach-set oracles disagree.", err=True)
        return EXIT_VIOLATION
    return EXIT_OK


@cli.command(name="transform")
@click.argument("graph_file", type=click.Path(dir_okay=False))
@click.option("--method", type=_choice(TransformMethod), required=True)
@guarded
def transform_cmd(graph_file, method):
    """Transform an actor graph into a passive graph."""
    g = _load_graph(graph_file)
    passive, node_map, stats = transform(g, TransformMethod(method))
    graph_text = serialize_passive_graph(passive, node_map)
    stats_text = transform_stats_schema(stats).model_dump_json(indent=2) + "\n"
    dot_text = to_dot(passive, node_map)
    settings = _settings()
    if settings.out_dir:
        _emit(graph_text, f"passive-{method}.graph")
        _emit(stats_text, f"passive-{method}.json")
        _emit(dot_text, f"passive-{method}.dot")
        return EXIT_OK
    fmt = _require_format(OutputFormat.JSON, OutputFormat.TABLE, OutputFormat.DOT)
    click.echo({OutputFormat.JSON: stats_text, OutputFormat.TABLE: graph_text, OutputFormat.DOT: dot_text}[fmt],
               nl=False)
    return EXIT_OK


@cli.command(name="collect")
@click.argument("graph_file", type=click.Path(dir_okay=False))
@click.option("--method", type=_choice(TransformMethod), required=True)
@click.option("--strategy", type=_choice(MarkStrategy), default=MarkStrategy.TWO_SCAN.value, show_default=True)
@click.option("--frontier", type=_choice(Frontier), default=Frontier.FIFO.value, show_default=True)
@guarded
def collect_cmd(graph_file, method, strategy, frontier):
    """Transform, mark and report live and garbage actors."""
    fmt = _require_format(OutputFormat.JSON, OutputFormat.TABLE)
    settings = _settings()
    g = _load_graph(graph_file)
    method = TransformMethod(method)
    result, report = collect(g, method, MarkStrategy(strategy), Frontier(frontier), seed=settings.seed,
                             timed=settings.timings)
    if fmt == OutputFormat.TABLE:
        text = (f"live: {_ids(result.live)}\n"
                f"garbage: {_ids(result.garbage)}\n"
                f"nodes: {report.transform.output_nodes} edges: {report.transform.output_edges} "
                f"mark ops: {report.mark.ops} scans: {report.mark.scans}\n")
    else:
        text = report.model_dump_json(indent=2) + "\n"
    _emit(text, f"collect-{method}-{strategy}.{'txt' if fmt == OutputFormat.TABLE else 'json'}")
    if method != TransformMethod.VA and result.live != live_fixpoint(g).live:
        click.echo(f"Invariant violation: {method} disagrees with the oracle.", err=True)
        return EXIT_VIOLATION
    return EXIT_OK


@cli.command()
@click.argument("graph_file", type=click.Path(dir_okay=False))
@guarded
def diff(graph_file):
    """Compare oracle, back-pointer and dual-node live sets per actor."""
    fmt = _require_format(OutputFormat.JSON, OutputFormat.TABLE)
    g = _load_graph(graph_file)
    report = divergence_report(g)
    if fmt == OutputFormat.TABLE:
        header = ["actor", "oracle", "direct", "indirect", "va", "class"]
        rows = [[str(r.actor), *("live" if v else "garbage" for v in (r.oracle, r.direct, r.indirect, r.va)),
                 str(r.divergence) if r.divergence else "-"] for r in report.rows]
        notes = "".join(f"# {key}: {value}\n" for key, value in report.header.items())
        text = notes + format_table((header, rows))
    else:
        text = report.to_schema().model_dump_json(indent=2) + "\n"
    _emit(text, "diff.txt" if fmt == OutputFormat.TABLE else "diff.json")
    if report.va_divergences:
        click.echo(f"warning: dual-node rules diverge from the oracle on actors "
                   f"{[r.actor for r in report.va_divergences]} (classes {report.class_counts()})", err=True)
    if not report.wang_agrees:
        click.echo("Invariant violation: back-pointer transforms disagree with the oracle.", err=True)
        return EXIT_VIOLATION
    return EXIT_OK


@cli.command()
@trace_options
@click.option("--gc-every", type=PERIOD, default="10", show_default=True, help="Events between collections, or 'inf'.")
@click.option("--method", type=_choice(TransformMethod), default=TransformMethod.DIRECT.value, show_default=True)
@click.option("--strategy", type=_choice(MarkStrategy), default=MarkStrategy.TWO_SCAN.value, show_default=True)
@click.option("--memory-threshold", type=int, default=None, help="Also collect when this many actors exist.")
@guarded
def sim(workload, arg, threshold, distributed, trace_file, gc_every, method, strategy, memory_threshold):
    """Replay a workload trace with periodic collection."""
    fmt = _require_format(OutputFormat.JSON, OutputFormat.TABLE)
    trace = _load_trace(workload, arg, threshold, distributed, trace_file)
    run = replay(trace, gc_every, TransformMethod(method), MarkStrategy(strategy),
                 memory_threshold=memory_threshold)
    schema = run.to_schema(seed=_settings().seed)
    if fmt == OutputFormat.TABLE:
        header = ["step", "actors", "live", "collected", "cumulative", "transform ops", "mark ops", "bookkeeping ops",
                  "gc ops"]
        rows = [[str(c.step), str(c.actors), str(c.live), str(c.collected), str(c.cumulative_collected),
                 str(c.transform_ops), str(c.mark_ops), str(c.bookkeeping_ops), str(c.gc_ops)] for c in schema.cycles]
        text = (f"# {schema.label}: {schema.collected} collected + {schema.surviving} surviving "
                f"of {schema.expected_actor_total}, overhead {schema.overhead}\n" + format_table((header, rows)))
    else:
        text = schema.model_dump_json(indent=2) + "\n"
    _emit(text, f"sim-{trace.label}.{'txt' if fmt == OutputFormat.TABLE else 'json'}")
    if run.violations:
        for violation in run.violations:
            click.echo(f"Invariant violation: {violation}", err=True)
        return EXIT_VIOLATION
    return EXIT_OK


@cli.command()
@trace_options
@click.option("--nodes", "n_nodes", type=int, default=4, show_default=True)
@click.option("--policy", type=_choice(PartitionPolicy), default=PartitionPolicy.LOCALITY.value, show_default=True)
@click.option("--local-every", type=PERIOD, default="5", show_default=True)
@click.option("--global-every", type=PERIOD, default=None, help="Defaults to 10x the local period.")
@click.option("--mode", "mode", type=click.Choice([m.value for m in GcMode] + ["all"]), default="all",
              show_default=True)
@click.option("--method", type=_choice(TransformMethod), default=TransformMethod.DIRECT.value, show_default=True)
@click.option("--strategy", type=_choice(MarkStrategy), default=MarkStrategy.TWO_SCAN.value, show_default=True)
@click.option("--memory-threshold", type=int, default=None)
@guarded
def dsim(workload, arg, threshold, distributed, trace_file, n_nodes, policy, local_every, global_every, mode,
         method, strategy, memory_threshold):
    """Simulate NO-GC, GDP, LGC and CDGC over partitioned nodes."""
    fmt = _require_format(OutputFormat.JSON, OutputFormat.TABLE, OutputFormat.CSV)
    trace = _load_trace(workload, arg, threshold, distributed, trace_file)
    modes = None if mode == "all" else [GcMode(mode)]
    report = run_modes(trace, n_nodes, PartitionPolicy(policy), local_every, global_every, modes,
                       TransformMethod(method), MarkStrategy(strategy), memory_threshold=memory_threshold)
    if fmt == OutputFormat.JSON:
        text = report.to_schema(seed=_settings().seed).model_dump_json(indent=2) + "\n"
    elif fmt == OutputFormat.CSV:
        text = format_csv(mode_table(report))
    else:
        text = format_table(mode_table(report))
    _emit(text, f"dsim-{trace.label}.{fmt}")
    if report.violations:
        for violation in report.violations:
            click.echo(f"Invariant violation: {violation}", err=True)
        return EXIT_VIOLATION
    return EXIT_OK


@cli.command()
@click.argument("suite_file", type=click.Path(dir_okay=False))
@guarded
def bench(suite_file):
    """Run a benchmark suite and emit per-cell reports plus a combined table."""
    fmt = _require_format(OutputFormat.JSON, OutputFormat.TABLE, OutputFormat.CSV)
    settings = _settings()
    suite = load_suite(suite_file)
    if "seed" not in suite.model_fields_set:
        suite.seed = settings.seed
    cells = run_suite(suite, timed=settings.timings)
    table = combined_table(cells, suite.modes)
    if settings.out_dir:
        write_suite_outputs(cells, table, settings.out_dir)
    if fmt == OutputFormat.JSON:
        click.echo(json.dumps([cell.model_dump(mode="json") for cell in cells], indent=2))
    elif fmt == OutputFormat.CSV:
        click.echo(format_csv(table), nl=False)
    else:
        click.echo(format_table(table), nl=False)
    failed = [cell.key for cell in cells if not cell.ok]
    if failed:
        click.echo(f"Invariant violation in cells: {', '.join(failed)}", err=True)
        return EXIT_VIOLATION
    return EXIT_OK


if __name__ == "__main__":
    cli()
