"""
Tests for Safety app.
"""

import time

import factory
from django.test import SimpleTestCase
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from apps.games.exceptions import DeviatorHasSingletonAlphabet, UnknownState
from apps.games.factories import fixture_game, random_goal
from apps.games.models import GameSpec, GoalDfa, ProjectedLetter
from apps.games.strategies import PROPERTY_SETTINGS, games

from .models import P1Node
from .services import (
    SafetyService,
    arena_size_bounds,
    build_safety_arena,
    dump_arena,
    minimax_safety_oracle,
    solve_safety,
    spoiling_path,
    winning_moves,
)


def single_agent_game(accepting, delta):
    """One agent with actions a, b and a goal over states q0..qn."""
    size = len(delta)
    goal = GoalDfa(
        states=tuple(f"q{q}" for q in range(size)),
        initial=0,
        accepting=frozenset(accepting),
        delta=tuple({(0,): row[0], (1,): row[1]} for row in delta),
    )
    return GameSpec(actions=(('a', 'b'),), goals=(goal,))


class PenniesArenaTest(SimpleTestCase):
    """G_1 of matching pennies: the mismatching agent always escapes."""

    def setUp(self):
        self.game = fixture_game('pennies')
        self.arena = build_safety_arena(self.game, 1)
        self.solution = solve_safety(self.arena)

    def test_shape(self):
        """Test the PENNIES arena's nodes and edges."""
        self.assertEqual(self.arena.p0_nodes, (0, 1, 2))
        self.assertEqual(len(self.arena.p1_nodes), 6)
        self.assertTrue(self.arena.is_dead_end(1))
        self.assertFalse(self.arena.is_dead_end(0))
        self.assertFalse(self.arena.is_dead_end(2))

    def test_initial_state_is_losing(self):
        """Test agent 1 of PENNIES cannot be stopped."""
        self.assertNotIn(0, self.solution.win0)
        for letter in self.game.letters:
            self.assertFalse(winning_moves(self.solution, 0, letter))

    def test_accepting_state_never_winning(self):
        """Test accepting states are never safe."""
        for letter in self.game.letters:
            self.assertFalse(winning_moves(self.solution, 1, letter))

    def test_reject_sink_is_safe(self):
        """Test the reject sink is safe."""
        self.assertIn(2, self.solution.win0)
        self.assertEqual(self.solution.strategy0[2], ProjectedLetter(1, (0,)))

    def test_spoiling_path_reaches_accepting_state(self):
        """Test the spoiling path ends in the goal."""
        path = spoiling_path(self.solution, 0)
        self.assertEqual(path, [0, P1Node(0, ProjectedLetter(1, (0,))), 1])

    def test_spoiling_path_rejects_winning_state(self):
        """Test safe states have no spoiling path."""
        with self.assertRaises(ValueError):
            spoiling_path(self.solution, 2)

    def test_unknown_state(self):
        """Test unknown goal states are rejected."""
        with self.assertRaises(UnknownState):
            winning_moves(self.solution, 7, (0, 0))

    def test_dump(self):
        """Test the arena dump format."""
        lines = list(dump_arena(self.game, self.arena))
        self.assertEqual(len(lines), 9)
        self.assertIn("acc'\t0\t", lines)
        self.assertIn("s0'\t0\ts0'[a],s0'[b]", lines)
        self.assertIn("s0'[a]\t1\trej',acc'", lines)


class CoopArenaTest(SimpleTestCase):
    """In both safety games of COOP the other agent keeps away from (a,x)."""

    def setUp(self):
        self.game = fixture_game('coop')

    def test_agent_0(self):
        """Test COOP agent 0's safety game."""
        solution = solve_safety(build_safety_arena(self.game, 0))
        self.assertEqual({q for q in solution.arena.p0_nodes if q in solution.win0}, {0, 2})
        self.assertEqual(solution.strategy0[0], ProjectedLetter(0, (1,)))
        self.assertTrue(winning_moves(solution, 0, self.game.parse_letter(['b', 'y'])))
        self.assertFalse(winning_moves(solution, 0, self.game.parse_letter(['b', 'x'])))

    def test_agent_1(self):
        """Test COOP agent 1's safety game."""
        solution = solve_safety(build_safety_arena(self.game, 1))
        self.assertEqual(solution.strategy0[0], ProjectedLetter(1, (1,)))

    def test_cached_solution_matches_direct(self):
        """Test cached solutions equal fresh ones."""
        direct = SafetyService.solve_for_agent(self.game, 0)
        cached = SafetyService.cached_solution(self.game, 0)
        self.assertEqual(cached.win0, direct.win0)
        self.assertEqual(cached.strategy0, direct.strategy0)

    def test_solutions_for_skips_singleton_agents(self):
        """Test agents without a choice get no solution."""
        game = GameSpec(actions=(('a', 'b'), ('x',)), goals=(
            random_goal((('a', 'b'), ('x',)), 2),
            random_goal((('a', 'b'), ('x',)), 2),
        ))
        self.assertEqual(set(SafetyService.solutions_for(game, [0, 1], use_cache=False)), {0})


class SmallArenaTest(SimpleTestCase):

    def test_no_dead_ends(self):
        """Test an arena without dead ends is all safe."""
        game = single_agent_game(accepting=[], delta=[(0, 1), (1, 0)])
        solution = solve_safety(build_safety_arena(game, 0))
        self.assertEqual(solution.win0, frozenset(solution.arena.nodes))
        for q in (0, 1):
            self.assertTrue(winning_moves(solution, q, (0,)))

    def test_unreachable_accepting_state_is_the_only_dead_end(self):
        """Test an unreachable goal state is the only loss."""
        game = single_agent_game(accepting=[2], delta=[(0, 1), (1, 0), (2, 2)])
        arena = build_safety_arena(game, 0)
        self.assertEqual([q for q in arena.p0_nodes if arena.is_dead_end(q)], [2])
        self.assertIn(0, solve_safety(arena).win0)

    def test_forced_loss(self):
        """Test a goal forced on every move."""
        game = single_agent_game(accepting=[1], delta=[(1, 1), (1, 1)])
        solution = solve_safety(build_safety_arena(game, 0))
        self.assertEqual(solution.win0, frozenset())

    def test_singleton_deviator(self):
        """Test a deviator with one action has no arena."""
        game = GameSpec(actions=(('a',),), goals=(random_goal((('a',),), 2),))
        with self.assertRaises(DeviatorHasSingletonAlphabet):
            build_safety_arena(game, 0)


@st.composite
def arenas(draw):
    """A random game and the arena of one of its agents that has a choice."""
    game = draw(games(agent_count=2, max_actions=2, max_states=5))
    deviators = [j for j in game.agents if game.has_choice(j)]
    assume(deviators)
    return game, build_safety_arena(game, draw(st.sampled_from(deviators)))


class SafetyPropertyTest(SimpleTestCase):
    """solve_safety against the minimax oracle and the structural invariants."""

    @given(pair=arenas())
    @settings(PROPERTY_SETTINGS, max_examples=500)
    def test_agrees_with_minimax(self, pair):
        """Test the attractor against minimax search."""
        _, arena = pair
        solution = solve_safety(arena)
        for node in arena.nodes:
            self.assertEqual(node in solution.win0, minimax_safety_oracle(arena, node), node)

    @given(pair=arenas())
    @settings(PROPERTY_SETTINGS, max_examples=200)
    def test_closure_and_size_bounds(self, pair):
        """Test the strategy stays in the winning region and the arena stays in bounds."""
        game, arena = pair
        solution = solve_safety(arena)
        for q, move in solution.strategy0.items():
            self.assertIn(P1Node(q, move), solution.win0)
        for node in arena.p1_nodes:
            if node in solution.win0:
                self.assertTrue(all(t in solution.win0 for t in arena.successors[node]))
        for q in arena.p0_nodes:
            if arena.goal.is_accepting(q):
                self.assertNotIn(q, solution.win0)
        max_nodes, max_edges = arena_size_bounds(game, arena.deviator)
        self.assertLessEqual(arena.node_count, max_nodes)
        self.assertLessEqual(arena.edge_count, max_edges)

    @given(pair=arenas())
    @settings(PROPERTY_SETTINGS, max_examples=100)
    def test_spoiling_paths_end_in_dead_ends(self, pair):
        """Test spoiling paths end in dead ends within their rank."""
        _, arena = pair
        solution = solve_safety(arena)
        for q in arena.p0_nodes:
            if q not in solution.win0:
                path = spoiling_path(solution, q)
                self.assertTrue(arena.is_dead_end(path[-1]))
                self.assertLessEqual(len(path) - 1, solution.ranks[q])


class SafetyScalingTest(SimpleTestCase):

    def test_large_arena_solves_quickly(self):
        """Test a large arena solves in linear time."""
        factory.random.reseed_random('safety-scaling')
        actions = (tuple(f"a{n}" for n in range(12)), tuple(f"b{n}" for n in range(20)))
        game = GameSpec(actions=actions, goals=(
            random_goal(actions, max_states=1),
            random_goal(actions, max_states=500, min_states=500),
        ))
        arena = build_safety_arena(game, 1)
        self.assertGreaterEqual(arena.edge_count, 100_000)

        started = time.perf_counter()
        solution = solve_safety(arena)
        self.assertLess(time.perf_counter() - started, 5.0)
        self.assertEqual(len(solution.win0) + len(solution.ranks), arena.node_count)
