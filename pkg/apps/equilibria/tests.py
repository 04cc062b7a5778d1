"""
Tests for Equilibria app.
"""

import itertools
from collections import deque
from functools import partial
from math import prod
from unittest import mock

from celery import group
from django.core.cache import cache
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from apps.games.exceptions import MissingSolution, StateBudgetExceeded, UnknownAgent
from apps.games.factories import fixture_game
from apps.games.models import GameSpec, GoalDfa, Lasso
from apps.games.services import game_digest, winning_set_of
from apps.games.strategies import PROPERTY_SETTINGS, games, games_with_lassos, winning_sets
from apps.safety.services import SafetyService

from .models import AwState, Verdict
from .serializers import VerdictSerializer
from .services import (
    accepts_lasso,
    all_winning_sets,
    apw_initial,
    apw_step,
    aw_initial,
    aw_step,
    buchi_nonempty,
    decide_w_ne,
    enumerate_ne_sets,
)
from .tasks import EnumerationService, split_chunks

EMPTY = frozenset()
BOTH = frozenset({0, 1})


def single_agent_game(actions, accepting, delta):
    goal = GoalDfa(
        states=tuple(f"q{q}" for q in range(len(delta))),
        initial=0,
        accepting=frozenset(accepting),
        delta=tuple({(a,): row[a] for a in range(len(actions))} for row in delta),
    )
    return GameSpec(actions=(tuple(actions),), goals=(goal,))


def letter(game, *names):
    return game.parse_letter(list(names))


class AwStepTest(SimpleTestCase):

    def setUp(self):
        self.coop = fixture_game('coop')
        self.pennies = fixture_game('pennies')

    def test_initial_states(self):
        """Test A_W starts in the goals' initial states with all of W pending."""
        self.assertTrue(aw_initial(self.coop, EMPTY).accepting)
        self.assertEqual(aw_initial(self.coop, BOTH).pending, BOTH)
        self.assertEqual(aw_initial(self.pennies, frozenset({0})), AwState((0, 0), frozenset({0})))

    def test_both_goals_reached_together(self):
        """Test one letter can clear every pending winner."""
        state = aw_step(self.coop, BOTH, aw_initial(self.coop, BOTH), letter(self.coop, 'a', 'x'))
        self.assertEqual(state, AwState((1, 1), EMPTY))

    def test_loser_rejected_is_fine(self):
        """Test a loser moving into a rejecting sink keeps the run alive."""
        winning_set = frozenset({0})
        initial = aw_initial(self.pennies, winning_set)
        state = aw_step(self.pennies, winning_set, initial, letter(self.pennies, 'a', 'x'))
        self.assertEqual(state, AwState((1, 2), EMPTY))

    def test_loser_reaching_its_goal_is_stuck(self):
        """Test A_W gets stuck when a loser reaches its goal."""
        winning_set = frozenset({0})
        initial = aw_initial(self.pennies, winning_set)
        self.assertIsNone(aw_step(self.pennies, winning_set, initial, letter(self.pennies, 'a', 'y')))

    def test_pennies_guard_blocks_every_letter(self):
        """Test A'_W has no move once agent 1 starts outside its safe region."""
        winning_set = frozenset({0})
        solutions = SafetyService.solutions_for(self.pennies, [1])
        initial = aw_initial(self.pennies, winning_set)
        for candidate in self.pennies.letters:
            self.assertIsNone(apw_step(self.pennies, winning_set, solutions, initial, candidate))

    @given(game=games(agent_count=2))
    @settings(PROPERTY_SETTINGS, max_examples=20)
    def test_no_deviators_means_no_guard(self, game):
        """Test A'_W equals A_W when nobody outside W is guarded."""
        everyone = frozenset(game.agents)
        state = aw_initial(game, everyone)
        for candidate in game.letters:
            self.assertEqual(
                apw_step(game, everyone, {}, state, candidate),
                aw_step(game, everyone, state, candidate),
            )

    def test_all_winning_arena_means_no_restriction(self):
        """Test an unreachable goal puts no restriction on A'_W."""
        game = GameSpec(
            actions=(('a', 'b'), ('x', 'y')),
            goals=(
                fixture_game('coop').goals[0],
                GoalDfa(states=('q0', 'q1'), initial=0, accepting=frozenset({1}),
                        delta=({pair: 0 for pair in itertools.product(range(2), range(2))},) * 2),
            ),
        )
        winning_set = frozenset({0})
        solutions = SafetyService.solutions_for(game, [1])
        state = aw_initial(game, winning_set)
        for candidate in game.letters:
            self.assertEqual(
                apw_step(game, winning_set, solutions, state, candidate),
                aw_step(game, winning_set, state, candidate),
            )


class BuchiSearchTest(SimpleTestCase):

    def test_accept_after_one_letter(self):
        """Test the lasso search finds a one-letter prefix."""
        game = single_agent_game(['a'], accepting=[1], delta=[(1,), (1,)])
        winning_set = frozenset({0})
        lasso = buchi_nonempty(
            aw_initial(game, winning_set),
            partial(aw_step, game, winning_set),
            lambda state: state.accepting,
            game.letters,
        )
        self.assertEqual(lasso, Lasso(prefix=((0,),), cycle=((0,),)))

    def test_stuck_everywhere(self):
        """Test an automaton stuck on every letter is empty."""
        lasso = buchi_nonempty(0, lambda state, letter: None, lambda state: True, [(0,)])
        self.assertIsNone(lasso)

    def test_missing_initial_state(self):
        """Test a missing initial state means an empty language."""
        self.assertIsNone(buchi_nonempty(None, lambda state, letter: state, lambda state: True, [(0,)]))

    def test_accepting_state_without_cycle_is_skipped(self):
        """Test accepting states off every cycle do not count."""
        # 0 -> 1 (accepting, no way back) -> 2 (accepting, self loop)
        successor = {0: 1, 1: 2, 2: 2}
        lasso = buchi_nonempty(0, lambda state, letter: successor[state], lambda state: state > 0, [(0,)])
        self.assertEqual(lasso, Lasso(prefix=((0,), (0,)), cycle=((0,),)))

    def test_budget(self):
        """Test the search stops at the state budget."""
        game = fixture_game('coop')
        with self.assertRaises(StateBudgetExceeded):
            decide_w_ne(game, BOTH, state_budget=1)


class DecideTest(SimpleTestCase):

    def setUp(self):
        self.coop = fixture_game('coop')
        self.pennies = fixture_game('pennies')

    def test_coop_everyone_wins(self):
        """Test COOP has an equilibrium where both agents win."""
        verdict = decide_w_ne(self.coop, BOTH)
        self.assertTrue(verdict.exists)
        ax = letter(self.coop, 'a', 'x')
        self.assertEqual(verdict.witness, Lasso(prefix=(ax, ax), cycle=(ax,)))

    def test_coop_nobody_wins(self):
        """Test COOP has an equilibrium where nobody wins."""
        verdict = decide_w_ne(self.coop, EMPTY)
        self.assertTrue(verdict.exists)
        self.assertEqual(verdict.witness, Lasso(prefix=(), cycle=(letter(self.coop, 'b', 'y'),)))

    def test_coop_single_winner_impossible(self):
        """Test COOP has no equilibrium with a single winner."""
        self.assertFalse(decide_w_ne(self.coop, {0}).exists)
        self.assertFalse(decide_w_ne(self.coop, {1}).exists)

    def test_pennies_has_no_equilibrium(self):
        """Test matching pennies has no equilibrium for any W."""
        for winning_set in all_winning_sets(self.pennies):
            verdict = decide_w_ne(self.pennies, winning_set)
            self.assertFalse(verdict.exists, winning_set)
            self.assertIsNone(verdict.witness)

    def test_unknown_agent(self):
        """Test unknown agent ids are rejected."""
        with self.assertRaisesMessage(UnknownAgent, 'unknown agent 5'):
            decide_w_ne(self.coop, {5})

    def test_missing_solution(self):
        """Test a deviator without a safety solution is reported."""
        with self.assertRaises(MissingSolution):
            decide_w_ne(self.pennies, {0}, solutions={})

    def test_enumerate_coop(self):
        """Test enumeration covers every subset of COOP's agents."""
        verdicts = enumerate_ne_sets(self.coop)
        self.assertEqual(list(verdicts), [EMPTY, frozenset({0}), frozenset({1}), BOTH])
        self.assertEqual({w for w, v in verdicts.items() if v.exists}, {EMPTY, BOTH})

    def test_enumerate_pennies(self):
        """Test enumeration of matching pennies is all negative."""
        self.assertFalse(any(v.exists for v in enumerate_ne_sets(self.pennies).values()))

    def test_verdict_requires_matching_witness(self):
        """Test a verdict's witness must match its answer."""
        with self.assertRaises(ValueError):
            Verdict(winning_set=EMPTY, exists=True)

    def test_verdict_serialization(self):
        """Test the VerdictFile line."""
        data = VerdictSerializer(decide_w_ne(self.coop, EMPTY), context={'game': self.coop}).data
        self.assertEqual(data['winning_set'], [])
        self.assertTrue(data['exists'])
        self.assertEqual(data['witness'], {'prefix': [], 'cycle': [['b', 'y']]})
        self.assertEqual(set(data['stats']), {'explored_states', 'elapsed_seconds'})

        data = VerdictSerializer(decide_w_ne(self.pennies, {0}), context={'game': self.pennies}).data
        self.assertIsNone(data['witness'])


class SingleAgentTest(SimpleTestCase):
    """With one agent, W = {} needs the agent to be unable to reach its goal at all."""

    def answers(self, game):
        return {w for w, verdict in enumerate_ne_sets(game).items() if verdict.exists}

    def test_goal_hit_by_every_word(self):
        """Test a goal reached by every word forces the agent to win."""
        game = single_agent_game(['a', 'b'], accepting=[1], delta=[(1, 1), (1, 1)])
        self.assertEqual(self.answers(game), {frozenset({0})})

    def test_goal_unreachable(self):
        """Test an unreachable goal forces the agent to lose."""
        game = single_agent_game(['a', 'b'], accepting=[2], delta=[(0, 1), (1, 0), (2, 2)])
        self.assertEqual(self.answers(game), {EMPTY})

    def test_avoidable_goal_with_a_choice(self):
        """Test an agent who can reach its goal cannot be a stable loser."""
        game = single_agent_game(['a', 'b'], accepting=[1], delta=[(1, 0), (1, 1)])
        self.assertEqual(self.answers(game), {frozenset({0})})

    def test_single_action_avoiding_the_goal(self):
        """Test a single action that avoids the goal only loses."""
        game = single_agent_game(['a'], accepting=[1], delta=[(0,), (1,)])
        self.assertEqual(self.answers(game), {EMPTY})


class EquilibriumPropertyTest(SimpleTestCase):

    @given(pair=games_with_lassos(max_states=4), data=st.data())
    @settings(PROPERTY_SETTINGS, max_examples=1000)
    def test_aw_accepts_exactly_the_traces_winning_w(self, pair, data):
        """Test A_W accepts a lasso exactly when W is its winning set."""
        game, lasso = pair
        winning_set = data.draw(winning_sets(game))
        accepted = accepts_lasso(
            aw_initial(game, winning_set),
            partial(aw_step, game, winning_set),
            lambda state: state.accepting,
            lasso,
        )
        self.assertEqual(accepted, winning_set_of(game, lasso) == winning_set)

    @given(game=games(max_states=4))
    @settings(PROPERTY_SETTINGS, max_examples=100)
    def test_witnesses(self, game):
        """Test every witness wins exactly W and is accepted by A'_W."""
        solutions = SafetyService.solutions_for(game, game.agents, use_cache=False)
        for winning_set, verdict in enumerate_ne_sets(game, solutions=solutions).items():
            bound = prod(goal.size for goal in game.goals) * 2 ** len(winning_set)
            self.assertLessEqual(verdict.explored, bound)
            if not verdict.exists:
                continue
            self.assertEqual(winning_set_of(game, verdict.witness), winning_set)
            guarded = {j: s for j, s in solutions.items() if j not in winning_set}
            self.assertTrue(accepts_lasso(
                apw_initial(game, winning_set, guarded),
                partial(apw_step, game, winning_set, guarded),
                lambda state: state.accepting,
                verdict.witness,
            ))

    @given(game=games(max_states=4))
    @settings(PROPERTY_SETTINGS, max_examples=100)
    def test_reachable_states_stay_in_winning_regions(self, game):
        """Test every reachable A'_W state keeps guarded agents in their safe regions."""
        solutions = SafetyService.solutions_for(game, game.agents, use_cache=False)
        for winning_set in all_winning_sets(game):
            guarded = {j: s for j, s in solutions.items() if j not in winning_set}
            initial = apw_initial(game, winning_set, guarded)
            if initial is None:
                continue
            seen, queue = {initial}, deque([initial])
            while queue:
                state = queue.popleft()
                for j, solution in guarded.items():
                    self.assertTrue(solution.is_winning_state(state.components[j]))
                self.assertLessEqual(state.pending, winning_set)
                for candidate in game.letters:
                    successor = apw_step(game, winning_set, guarded, state, candidate)
                    if successor is not None and successor not in seen:
                        seen.add(successor)
                        queue.append(successor)


class ParallelEnumerationTest(SimpleTestCase):

    def test_split_chunks(self):
        """Test round-robin chunking."""
        self.assertEqual(split_chunks([1, 2, 3, 4, 5], 2), [[1, 3, 5], [2, 4]])
        self.assertEqual(split_chunks([1], 4), [[1]])

    def test_matches_serial_enumeration(self):
        """Test the Celery group reproduces serial enumeration."""
        game = fixture_game('coop')
        lines = EnumerationService.enumerate_parallel(game, workers=3)
        serial = enumerate_ne_sets(game)
        self.assertEqual([line['winning_set'] for line in lines], [sorted(w) for w in serial])
        for line, verdict in zip(lines, serial.values()):
            self.assertEqual(line['exists'], verdict.exists)
            expected = VerdictSerializer(verdict, context={'game': game}).data['witness']
            self.assertEqual(line['witness'], expected)

    def test_budget_surfaces_from_tasks(self):
        """Test budget markers from chunks become StateBudgetExceeded."""
        with self.assertRaises(StateBudgetExceeded):
            EnumerationService.enumerate_parallel(fixture_game('coop'), workers=2, state_budget=1)

    def test_safety_solutions_cached_before_dispatch(self):
        """Every deviator's solution is in the cache before any chunk is queued."""
        game = fixture_game('coop')
        cache.clear()
        digest = game_digest(game)
        keys = [SafetyService.cache_key(digest, j) for j in game.agents]
        cached_at_dispatch = []

        def inspecting_group(signatures):
            cached_at_dispatch.append(all(cache.get(key) is not None for key in keys))
            return group(signatures)

        with mock.patch('apps.equilibria.tasks.group', side_effect=inspecting_group):
            EnumerationService.enumerate_parallel(game, workers=2)
        self.assertEqual(cached_at_dispatch, [True])
