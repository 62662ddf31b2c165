import json
import os
import tempfile
import unittest

from click.testing import CliRunner

from main import EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, cli
from workloads import format_trace, gen_nqueens_trace
from tests.strategies import fixture_path
from tests.test_workloads import PREMATURE_TRACE


class TestCli(unittest.TestCase):

    def setUp(self):
        self.runner = CliRunner()
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, name: str, text: str) -> str:
        path = os.path.join(self.tmp.name, name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        return path

    def invoke(self, *args):
        return self.runner.invoke(cli, list(args))

    def test_oracle_table(self):
        result = self.invoke("--format", "table", "oracle", fixture_path("passive_objects.graph"))
        self.assertEqual(result.exit_code, EXIT_OK)
        lines = result.stdout.splitlines()
        self.assertEqual(lines[0], "live: 0 1 2")
        self.assertEqual(lines[1], "garbage: 3 4")

    def test_oracle_json_reports_warnings(self):
        path = self.write("blocked_root.graph", "actors 1\n0 blocked root\nedges\n")
        result = self.invoke("oracle", path)
        self.assertEqual(result.exit_code, EXIT_OK)
        data = json.loads(result.stdout)
        self.assertTrue(data["oracles_agree"])
        self.assertEqual(data["live"], [0])
        self.assertEqual(len(data["warnings"]), 1)

    def test_unsupported_format(self):
        result = self.invoke("--format", "dot", "oracle", fixture_path("indirect_root.graph"))
        self.assertEqual(result.exit_code, EXIT_USAGE)

    def test_transform_table_lists_back_pointers(self):
        result = self.invoke("--format", "table", "transform", fixture_path("direct_back_pointers.graph"),
                             "--method", "direct")
        self.assertEqual(result.exit_code, EXIT_OK)
        lines = result.stdout.splitlines()
        for edge in ("2 1", "3 1", "10 9", "11 9", "12 13", "11 13"):
            self.assertIn(edge, lines)
        self.assertNotIn("3 5", lines)

    def test_transform_json_stats(self):
        result = self.invoke("transform", fixture_path("indirect_root.graph"), "--method", "va")
        data = json.loads(result.stdout)
        self.assertEqual(data["output_nodes"], 6)
        self.assertEqual(data["output_edges"], 9)
        self.assertEqual(data["node_ratio"], {"numerator": 6, "denominator": 3})

    def test_transform_writes_files(self):
        out = os.path.join(self.tmp.name, "out")
        result = self.invoke("--out", out, "transform", fixture_path("indirect_back_pointers.graph"), "--method", "indirect")
        self.assertEqual(result.exit_code, EXIT_OK)
        self.assertEqual(sorted(os.listdir(out)), ["passive-indirect.dot", "passive-indirect.graph",
                                                   "passive-indirect.json"])

    def test_collect_json(self):
        result = self.invoke("--seed", "5", "collect", fixture_path("indirect_root.graph"), "--method", "direct",
                             "--strategy", "one_scan")
        self.assertEqual(result.exit_code, EXIT_OK)
        data = json.loads(result.stdout)
        self.assertEqual((data["seed"], data["live_count"], data["garbage_count"]), (5, 3, 0))
        self.assertEqual(data["mark"]["scans"], 1)
        self.assertIsNone(data["timings"])

    def test_collect_table_with_timings(self):
        result = self.invoke("--format", "table", "--timings", "collect", fixture_path("va_blocked_sink.graph"),
                             "--method", "va")
        self.assertEqual(result.exit_code, EXIT_OK)
        self.assertIn("garbage: 1", result.stdout)

    def test_diff_warns_on_dual_node_divergence(self):
        result = self.invoke("--format", "table", "diff", fixture_path("va_blocked_sink.graph"))
        self.assertEqual(result.exit_code, EXIT_OK)
        self.assertIn("# va_rule4:", result.stdout)
        self.assertIn("diverge from the oracle on actors [1]", result.stderr)
        row = result.stdout.splitlines()[-1].split()
        self.assertEqual(row, ["1", "live", "live", "live", "garbage", "a"])

    def test_diff_json(self):
        result = self.invoke("diff", fixture_path("va_inactive_referencer.graph"))
        self.assertEqual(result.exit_code, EXIT_OK)
        data = json.loads(result.stdout)
        self.assertEqual(data["summary"]["class_counts"], {"a": 0, "b": 1, "c": 0})

    def test_corrupt_and_missing_graphs(self):
        corrupt = self.write("corrupt.graph", "actors 2\n1 blocked\n")
        result = self.invoke("diff", corrupt)
        self.assertEqual(result.exit_code, EXIT_USAGE)
        self.assertIn("expected 2 actor lines", result.stderr)
        missing = self.invoke("collect", os.path.join(self.tmp.name, "nope.graph"), "--method", "direct")
        self.assertEqual(missing.exit_code, EXIT_USAGE)

    def test_gen_is_deterministic(self):
        first = self.invoke("--seed", "3", "--format", "table", "gen", "--actors", "20")
        second = self.invoke("--seed", "3", "--format", "table", "gen", "--actors", "20")
        self.assertEqual(first.exit_code, EXIT_OK)
        self.assertEqual(first.stdout, second.stdout)
        self.assertTrue(first.stdout.startswith("actors 20\n"))
        dot = self.invoke("--format", "dot", "gen", "--actors", "2", "--density", "0")
        self.assertTrue(dot.stdout.startswith("digraph actors {"))

    def test_gen_trace(self):
        result = self.invoke("gen", "--workload", "mx", "--args", "3", "--distributed")
        self.assertEqual(result.exit_code, EXIT_OK)
        self.assertEqual(result.stdout.splitlines()[0], "trace dmx-3 5")

    def test_gen_rejects_bad_parameters(self):
        self.assertEqual(self.invoke("--format", "csv", "gen").exit_code, EXIT_USAGE)
        self.assertEqual(self.invoke("gen", "--actors", "3", "--roots", "5").exit_code, EXIT_USAGE)

    def test_sim_json(self):
        result = self.invoke("sim", "--workload", "fib", "--args", "6", "--threshold", "1", "--gc-every", "5")
        self.assertEqual(result.exit_code, EXIT_OK)
        data = json.loads(result.stdout)
        self.assertEqual(data["collected"] + data["surviving"], 25)
        self.assertEqual(data["gc_every"], 5)

    def test_sim_without_gc(self):
        result = self.invoke("sim", "--workload", "nq", "--args", "5", "--gc-every", "inf")
        data = json.loads(result.stdout)
        self.assertIsNone(data["gc_every"])
        self.assertEqual(data["cycles"], [])
        self.assertEqual(data["surviving"], 13)

    def test_sim_imported_trace_table(self):
        path = self.write("nq.trace", format_trace(gen_nqueens_trace(4)))
        result = self.invoke("--format", "table", "sim", "--trace", path, "--gc-every", "3")
        self.assertEqual(result.exit_code, EXIT_OK)
        self.assertTrue(result.stdout.startswith("# nq-4: 6 collected + 1 surviving of 7"))

    def test_sim_usage_errors(self):
        self.assertEqual(self.invoke("sim").exit_code, EXIT_USAGE)
        self.assertEqual(self.invoke("sim", "--workload", "fib", "--args", "5", "--gc-every", "0").exit_code,
                         EXIT_USAGE)

    def test_sim_premature_collection_exits_with_violation(self):
        path = self.write("early.trace", PREMATURE_TRACE)
        result = self.invoke("sim", "--trace", path, "--gc-every", "1")
        self.assertEqual(result.exit_code, EXIT_VIOLATION)
        self.assertIn("Invariant violation", result.stderr)

    def test_dsim_csv(self):
        result = self.invoke("--format", "csv", "dsim", "--workload", "nq", "--args", "5", "--nodes", "2",
                             "--local-every", "3")
        self.assertEqual(result.exit_code, EXIT_OK)
        lines = result.stdout.splitlines()
        self.assertTrue(lines[0].startswith("workload/actors,mode,"))
        self.assertEqual([line.split(",")[1] for line in lines[1:]], ["NO-GC", "GDP", "LGC+GDP", "LGC+GDP+CDGC"])

    def test_dsim_single_mode_json(self):
        result = self.invoke("dsim", "--workload", "fib", "--args", "7", "--threshold", "1", "--mode", "cdgc",
                             "--policy", "round_robin_bfs", "--global-every", "20")
        self.assertEqual(result.exit_code, EXIT_OK)
        data = json.loads(result.stdout)
        self.assertEqual([m["mode"] for m in data["modes"]], ["cdgc"])
        self.assertEqual(data["modes"][0]["residual_garbage"], 0)

    def test_bench_writes_outputs(self):
        suite = self.write("suite.yaml", "workloads:\n  - workload: fib\n    arg: 5\n    threshold: 1\n"
                                         "methods: [direct]\nstrategies: [one_scan]\nmodes: [lgc]\nnodes: 2\n")
        out = os.path.join(self.tmp.name, "bench")
        result = self.invoke("--seed", "9", "--out", out, "bench", suite)
        self.assertEqual(result.exit_code, EXIT_OK)
        [cell] = json.loads(result.stdout)
        self.assertEqual(cell["key"], "fib-5-t1-direct-one_scan")
        self.assertEqual(cell["report"]["seed"], 9)
        self.assertTrue(cell["ok"])
        self.assertEqual(sorted(os.listdir(out)), ["combined.csv", "combined.txt", "fib-5-t1-direct-one_scan.json"])

    def test_bench_empty_suite_and_invalid_suite(self):
        empty = self.invoke("bench", self.write("empty.yaml", ""))
        self.assertEqual(empty.exit_code, EXIT_OK)
        self.assertEqual(json.loads(empty.stdout), [])
        invalid = self.invoke("bench", self.write("bad.yaml", "nodes: zero\n"))
        self.assertEqual(invalid.exit_code, EXIT_USAGE)


if __name__ == '__main__':
    unittest.main()
