import os
import tempfile
import unittest

from hypothesis import given, settings

from actor_graph import (ActorGraph, GraphParseError, NodeMap, PassiveGraph, all_graphs, parse_graph,
                         random_graph, read_graph_file, serialize_graph, serialize_passive_graph, to_dot,
                         validate, write_text_file)
from tests.strategies import actor_graphs, fixture_path, sampled_graphs


class TestActorGraph(unittest.TestCase):

    def test_validate_reports_root_outside_actors(self):
        g = ActorGraph(actors=[1], roots=[5])
        self.assertEqual(validate(g), ["root 5 not an actor"])

    def test_validate_empty_and_well_formed(self):
        self.assertEqual(validate(ActorGraph()), [])
        g = ActorGraph(actors=[1, 2], references=[(1, 2)], roots=[1], unblocked=[1])
        self.assertEqual(validate(g), [])

    def test_validate_names_dangling_reference_and_unblocked(self):
        g = ActorGraph(actors=[1], references=[(1, 7)], unblocked=[3])
        problems = validate(g)
        self.assertIn("unblocked 3 not an actor", problems)
        self.assertIn("reference 1->7: target 7 not an actor", problems)

    def test_self_reference_allowed(self):
        g = ActorGraph(actors=[4], references=[(4, 4)], roots=[4], unblocked=[4])
        self.assertEqual(validate(g), [])
        self.assertEqual(g.successors()[4], (4,))

    def test_without_removes_incident_edges(self):
        g = ActorGraph(actors=[1, 2, 3], references=[(1, 2), (2, 3), (3, 1)], roots=[1], unblocked=[1, 3])
        smaller = g.without([3])
        self.assertEqual(smaller.actors, {1, 2})
        self.assertEqual(smaller.references, {(1, 2)})
        self.assertEqual(smaller.unblocked, {1})
        self.assertIs(g.without([]), g)

    def test_seeds_and_blocked(self):
        g = ActorGraph(actors=[1, 2, 3], roots=[1], unblocked=[1, 2])
        self.assertEqual(g.seeds, {1, 2})
        self.assertEqual(g.blocked, {3})


class TestGraphFormat(unittest.TestCase):

    def test_parse_documented_example(self):
        g = parse_graph("actors 2\n1 unblocked root\n2 blocked\nedges\n1 2\n")
        self.assertEqual(g, ActorGraph(actors=[1, 2], references=[(1, 2)], roots=[1], unblocked=[1]))

    def test_parse_rejects_undeclared_actor(self):
        with self.assertRaisesRegex(GraphParseError, "actor 1 undeclared"):
            parse_graph("edges\n1 2\n")

    def test_parse_error_carries_line_number(self):
        with self.assertRaisesRegex(GraphParseError, "line 3: expected '<id> "):
            parse_graph("actors 2\n1 unblocked\n2 sleeping\nedges\n")
        try:
            parse_graph("actors 1\n1 blocked\nedges\n1\n")
        except GraphParseError as e:
            self.assertEqual(e.line_no, 4)
        else:
            self.fail("GraphParseError not raised")

    def test_parse_rejects_non_ascii_digits(self):
        with self.assertRaisesRegex(GraphParseError, "line 1: expected 'actors <count>'"):
            parse_graph("actors ³\n")
        with self.assertRaisesRegex(GraphParseError, "line 2: invalid actor id"):
            parse_graph("actors 1\n١ blocked\nedges\n")

    def test_parse_rejects_short_actor_section_and_duplicates(self):
        with self.assertRaisesRegex(GraphParseError, "expected 3 actor lines, found 1"):
            parse_graph("actors 3\n1 blocked\nedges\n")
        with self.assertRaisesRegex(GraphParseError, "actor 1 declared twice"):
            parse_graph("actors 2\n1 blocked\n1 unblocked\nedges\n")

    def test_parse_ignores_comments_blank_lines_and_duplicate_edges(self):
        text = "# header comment\nactors 2\n\n1 unblocked root  # the root\n2 blocked\nedges\n1 2\n1 2\n"
        g = parse_graph(text)
        self.assertEqual(g.references, {(1, 2)})

    def test_blocked_root_is_normalised_with_warning(self):
        warnings = []
        with self.assertLogs("actor_graph", level="WARNING"):
            g = parse_graph("actors 1\n3 blocked root\nedges\n", warnings)
        self.assertIn(3, g.unblocked)
        self.assertEqual(warnings, ["root 3 declared blocked; normalised to unblocked"])

    def test_serialize_is_sorted_text(self):
        g = ActorGraph(actors=[2, 1], references=[(2, 1), (1, 2)], roots=[1], unblocked=[1])
        self.assertEqual(serialize_graph(g), "actors 2\n1 unblocked root\n2 blocked\nedges\n1 2\n2 1\n")

    @given(actor_graphs())
    @settings(max_examples=100, deadline=None)
    def test_parse_serialize_round_trip(self, g):
        self.assertEqual(parse_graph(serialize_graph(g)), g)
        self.assertEqual(validate(parse_graph(serialize_graph(g))), [])

    def test_serialize_passive_graph_with_map(self):
        p = PassiveGraph(nodes=[2, 3], edges=[(2, 3), (3, 2)], roots=[3])
        text = serialize_passive_graph(p, NodeMap.alpha_mu([1]))
        self.assertTrue(text.endswith("# map 1 -> alpha 2 mu 3\n"))
        back = parse_graph(text)
        self.assertEqual(back.actors, {2, 3})
        self.assertEqual(back.roots, {3})
        self.assertEqual(back.unblocked, {3})

    def test_read_and_write_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "nested", "g.graph")
            write_text_file(path, "actors 1\n0 unblocked root\nedges\n")
            self.assertEqual(read_graph_file(path).roots, {0})
            with self.assertRaises(FileNotFoundError):
                read_graph_file(os.path.join(tmp, "missing.graph"))

    def test_fixture_files_parse_and_validate(self):
        for name in ("passive_objects.graph", "indirect_root.graph", "direct_back_pointers.graph",
                     "indirect_back_pointers.graph", "va_blocked_sink.graph", "va_inactive_referencer.graph",
                     "cross_cycle.graph"):
            with self.subTest(fixture=name):
                self.assertEqual(validate(read_graph_file(fixture_path(name))), [])


class TestRandomGraph(unittest.TestCase):

    def test_zero_actors(self):
        self.assertEqual(random_graph(1, 0, 0.5, 0.5, 0), ActorGraph())

    def test_deterministic_for_seed(self):
        first = random_graph(7, 50, 0.05, 0.3, 2)
        second = random_graph(7, 50, 0.05, 0.3, 2)
        self.assertEqual(first, second)
        self.assertEqual(serialize_graph(first), serialize_graph(second))
        self.assertNotEqual(first, random_graph(8, 50, 0.05, 0.3, 2))

    def test_roots_are_unblocked_and_graph_valid(self):
        g = random_graph(7, 200, 0.02, 0.2, 1)
        self.assertEqual(validate(g), [])
        self.assertEqual(len(g.roots), 1)
        self.assertTrue(g.roots <= g.unblocked)
        self.assertEqual(len(g.references), round(0.02 * 200 * 200))

    def test_parameter_ranges(self):
        with self.assertRaisesRegex(ValueError, "n_roots"):
            random_graph(1, 3, 0.1, 0.1, 4)
        with self.assertRaisesRegex(ValueError, "p_unblocked"):
            random_graph(1, 3, 0.1, 1.5, 1)
        with self.assertRaisesRegex(ValueError, "n_actors"):
            random_graph(1, -1, 0.1, 0.1, 0)

    def test_all_graphs_counts(self):
        self.assertEqual(sum(1 for _ in all_graphs(0)), 1)
        self.assertEqual(sum(1 for _ in all_graphs(1)), 2 * 3)
        graphs = list(all_graphs(2))
        self.assertEqual(len(graphs), 16 * 9)
        self.assertEqual(len(set(graphs)), 16 * 9)
        self.assertTrue(all(g.roots <= g.unblocked for g in graphs))

    def test_canonical_graphs_cover_every_relabeling(self):
        canonical = set(all_graphs(2, canonical=True))
        self.assertEqual(len(canonical), 16 * 6)
        self.assertEqual(sum(1 for _ in all_graphs(3, canonical=True)), 2 ** 9 * 10)

        def swapped(g):
            flip = {0: 1, 1: 0}
            return ActorGraph(g.actors, ((flip[s], flip[d]) for s, d in g.references),
                              (flip[r] for r in g.roots), (flip[u] for u in g.unblocked))

        for g in all_graphs(2):
            self.assertTrue(g in canonical or swapped(g) in canonical, msg=repr(g))

    def test_sampled_graphs_are_seeded_and_canonical(self):
        graphs = list(sampled_graphs(3, n_masks=4, seed=1))
        self.assertEqual(len(graphs), 4 * 10)
        self.assertEqual(graphs, list(sampled_graphs(3, n_masks=4, seed=1)))
        self.assertTrue(all(g.actors == {0, 1, 2} and g.roots <= g.unblocked for g in graphs))


class TestNodeMapAndDot(unittest.TestCase):

    def test_alpha_mu_pairs(self):
        node_map = NodeMap.alpha_mu([0, 3])
        self.assertEqual((node_map.alpha(3), node_map.mu(3)), (6, 7))
        self.assertEqual(node_map.image(), {0, 1, 6, 7})
        self.assertEqual(node_map.labels()[7], "μ(3)")

    def test_identity_has_no_mail_queue(self):
        node_map = NodeMap.identity([1, 2])
        self.assertEqual(node_map.decision_node(2), 2)
        with self.assertRaisesRegex(ValueError, "no mail-queue node"):
            node_map.mu(1)

    def test_mixed_entries_rejected(self):
        with self.assertRaisesRegex(ValueError, "all single nodes or all"):
            NodeMap({1: 1, 2: (4, 5)})

    def test_violations(self):
        g = ActorGraph(actors=[1, 2])
        p = PassiveGraph(nodes=[1, 9])
        problems = NodeMap({1: 1}).violations(g, p)
        self.assertIn("actor 2 has no node", problems)
        self.assertIn("node 9 not in the image", problems)

    def test_dot_empty_graph(self):
        self.assertEqual(to_dot(ActorGraph()), "digraph actors {\n}\n")

    def test_dot_root_is_triangle_and_edges_listed(self):
        g = ActorGraph(actors=[1, 2], references=[(1, 2)], roots=[1], unblocked=[1])
        dot = to_dot(g)
        self.assertIn("  1 [shape=triangle, style=bold];", dot)
        self.assertIn("  2 [shape=circle, style=dashed];", dot)
        self.assertEqual(dot.count("->"), 1)
        self.assertIn("  1 -> 2;", dot)

    def test_dot_passive_graph_uses_labels(self):
        p = PassiveGraph(nodes=[0, 1], edges=[(0, 1)], roots=[1])
        dot = to_dot(p, NodeMap.alpha_mu([0]))
        self.assertTrue(dot.startswith("digraph passive {"))
        self.assertIn('label="α(0)"', dot)


if __name__ == '__main__':
    unittest.main()
