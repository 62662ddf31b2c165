import unittest

from hypothesis import given, settings

from actor_graph import ActorGraph, all_graphs, read_graph_file
from enums.gc_enums import Frontier
from liveness import LivenessResult, live_fixpoint, live_reachset, potentially_active
from tests.strategies import SLOW_REASON, SLOW_TESTS, actor_graphs, fixture_path, sampled_graphs, seeded_graph


def oracle_examples():
    """The documented live_fixpoint inputs with their expected live sets."""
    return [
        (ActorGraph(actors=[1, 2, 3], references=[(1, 2), (3, 2)], roots=[1], unblocked=[1, 3]), {1, 2, 3}),
        (ActorGraph(actors=[0], roots=[0], unblocked=[0]), {0}),
        (ActorGraph(actors=[0, 1], roots=[0], unblocked=[0]), {0}),
    ]


class TestPotentiallyActive(unittest.TestCase):

    def test_no_seeds(self):
        g = ActorGraph(actors=[1, 2], references=[(1, 2)])
        self.assertEqual(potentially_active(g), frozenset())

    def test_forward_closure_of_chain(self):
        g = ActorGraph(actors=[0, 1, 2], references=[(0, 1), (1, 2)], roots=[0], unblocked=[0])
        self.assertEqual(potentially_active(g), {0, 1, 2})

    def test_blocked_referencer_of_root_is_not_active(self):
        g = ActorGraph(actors=[0, 5], references=[(5, 0)], roots=[0], unblocked=[0])
        self.assertEqual(potentially_active(g), {0})


class TestLiveFixpoint(unittest.TestCase):

    def test_documented_examples(self):
        for g, live in oracle_examples():
            with self.subTest(graph=g):
                result = live_fixpoint(g)
                self.assertEqual(result.live, live)
                self.assertEqual(result.garbage, g.actors - live)
                self.assertEqual(result.violations(g), [])

    def test_fixture_from_overview(self):
        g = read_graph_file(fixture_path("indirect_root.graph"))
        self.assertEqual(live_fixpoint(g).live, {1, 2, 3})

    def test_blocked_sink_is_live(self):
        g = read_graph_file(fixture_path("va_blocked_sink.graph"))
        self.assertEqual(live_fixpoint(g).live, {0, 1})

    def test_inactive_referencer_is_garbage(self):
        g = read_graph_file(fixture_path("va_inactive_referencer.graph"))
        result = live_fixpoint(g)
        self.assertEqual(result.live, {0, 1})
        self.assertEqual(result.garbage, {2})

    def test_passive_cycle_unreachable_from_root(self):
        g = read_graph_file(fixture_path("passive_objects.graph"))
        self.assertEqual(live_fixpoint(g).garbage, {3, 4})

    def test_to_dict_is_sorted(self):
        g = ActorGraph(actors=[3, 1, 2], references=[(1, 3)], roots=[1], unblocked=[1])
        self.assertEqual(live_fixpoint(g).to_dict(),
                         {"live": [1, 3], "garbage": [2], "potentially_active": [1, 3]})

    def test_violations_flag_broken_results(self):
        g = ActorGraph(actors=[0, 1], roots=[0], unblocked=[0])
        broken = LivenessResult(live=[1], garbage=[1], potentially_active=[0])
        problems = broken.violations(g)
        self.assertIn("roots [0] not live", problems)
        self.assertIn("actors [1] both live and garbage", problems)
        self.assertIn("live actors [1] not potentially active", problems)


class TestLiveReachset(unittest.TestCase):

    def test_documented_examples_match_fixpoint(self):
        for g, live in oracle_examples():
            with self.subTest(graph=g):
                self.assertEqual(live_reachset(g), live_fixpoint(g))

    def test_unblocked_reach_set_meeting_live_set(self):
        # u -> b <- r, b a blocked sink
        g = ActorGraph(actors=[0, 1, 2], references=[(2, 1), (0, 1)], roots=[0], unblocked=[0, 2])
        self.assertEqual(live_reachset(g).live, {0, 1, 2})

    def test_blocked_referencer_stays_garbage(self):
        g = ActorGraph(actors=[0, 1, 2], references=[(2, 1), (0, 1)], roots=[0], unblocked=[0])
        self.assertEqual(live_reachset(g).garbage, {2})

    def test_absorption_chains_through_several_reach_sets(self):
        # 3 reaches 2's reach-set only after 2 joins through 1
        g = ActorGraph(actors=[0, 1, 2, 3, 4, 5],
                       references=[(0, 1), (2, 1), (2, 4), (3, 4), (3, 5)],
                       roots=[0], unblocked=[0, 2, 3])
        self.assertEqual(live_reachset(g).live, {0, 1, 2, 3, 4, 5})
        self.assertEqual(live_fixpoint(g).live, {0, 1, 2, 3, 4, 5})


class TestOracleProperties(unittest.TestCase):

    def assert_oracles_agree(self, g: ActorGraph):
        fixpoint = live_fixpoint(g)
        self.assertEqual(live_reachset(g).live, fixpoint.live, msg=repr(g))
        self.assertEqual(live_fixpoint(g, Frontier.LIFO).live, fixpoint.live, msg=repr(g))

    def test_exhaustive_small_graphs(self):
        for n in range(4):
            for g in all_graphs(n):
                self.assert_oracles_agree(g)

    @given(actor_graphs(max_actors=25))
    @settings(max_examples=200, deadline=None)
    def test_oracles_agree_on_random_graphs(self, g):
        self.assert_oracles_agree(g)
        self.assertEqual(live_fixpoint(g).violations(g), [])

    @given(actor_graphs(max_actors=15))
    @settings(max_examples=150, deadline=None)
    def test_adding_a_reference_never_shrinks_live(self, g):
        if not g.actors:
            return
        src, dst = min(g.actors), max(g.actors)
        bigger = ActorGraph(g.actors, g.references | {(src, dst)}, g.roots, g.unblocked)
        self.assertTrue(live_fixpoint(g).live <= live_fixpoint(bigger).live)

    @given(actor_graphs(max_actors=15))
    @settings(max_examples=150, deadline=None)
    def test_unblocking_never_shrinks_live(self, g):
        bigger = ActorGraph(g.actors, g.references, g.roots, g.actors)
        self.assertTrue(live_fixpoint(g).live <= live_fixpoint(bigger).live)

    @given(actor_graphs(max_actors=20))
    @settings(max_examples=150, deadline=None)
    def test_removing_garbage_keeps_live_set(self, g):
        result = live_fixpoint(g)
        remaining = g.without(result.garbage)
        self.assertEqual(live_fixpoint(remaining).live, result.live)

    @unittest.skipUnless(SLOW_TESTS, SLOW_REASON)
    def test_exhaustive_four_actor_graphs(self):
        for g in all_graphs(4, canonical=True):
            self.assert_oracles_agree(g)

    @unittest.skipUnless(SLOW_TESTS, SLOW_REASON)
    def test_sampled_five_actor_graphs(self):
        for g in sampled_graphs(5, n_masks=200, seed=5):
            self.assert_oracles_agree(g)

    @unittest.skipUnless(SLOW_TESTS, SLOW_REASON)
    def test_ten_thousand_random_graphs(self):
        for seed in range(10_000):
            self.assert_oracles_agree(seeded_graph(seed))


if __name__ == '__main__':
    unittest.main()
