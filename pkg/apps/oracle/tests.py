"""
Tests for Oracle app.
"""

import itertools
from collections import deque
from functools import partial

from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from apps.equilibria.services import all_winning_sets, aw_initial, aw_step, buchi_nonempty, decide_w_ne
from apps.games.exceptions import SizeBudgetExceeded, UnknownAgent
from apps.games.factories import fixture_game
from apps.games.models import GameSpec, GoalDfa
from apps.games.strategies import PROPERTY_SETTINGS, games
from apps.safety.models import PLAYER_0, PLAYER_1
from apps.safety.services import SafetyService

from .models import ACCEPT_ALL, PRIMARY, BuchiGame, TwState
from .services import (
    OracleService,
    build_tw,
    deviator_of,
    oracle_decide_w_ne,
    solve_buchi_game,
    tw_nonempty_from,
)

EMPTY = frozenset()
BOTH = frozenset({0, 1})


def letter(game, *names):
    return game.parse_letter(list(names))


def reaches(edges, source, targets, allowed=None):
    """Is some target reachable from source in at least one step?"""
    seen = set()
    queue = deque([source])
    while queue:
        position = queue.popleft()
        for successor in edges[position]:
            if successor in targets:
                return True
            if successor not in seen and (allowed is None or successor in allowed):
                seen.add(successor)
                queue.append(successor)
    return False


def naive_winning_region(game: BuchiGame):
    """
    Try every positional strategy of Player 0. A strategy wins from v iff no
    cycle avoiding the accepting positions is reachable from v.
    """
    positions = game.positions
    choosers = [p for p in positions if game.owner(p) == PLAYER_0]
    rejecting = {p for p in positions if p not in game.accepting}
    region = set()
    for picks in itertools.product(*(game.successors[p] for p in choosers)):
        strategy = dict(zip(choosers, picks))
        edges = {p: (strategy[p],) if p in strategy else game.successors[p] for p in positions}
        trapped = {p for p in rejecting if reaches(edges, p, {p}, allowed=rejecting)}
        for p in positions:
            if p not in trapped and not reaches(edges, p, trapped):
                region.add(p)
    return region


@st.composite
def buchi_games(draw, max_size=12):
    size = draw(st.integers(min_value=1, max_value=max_size))
    position = st.integers(min_value=0, max_value=size - 1)
    return BuchiGame(
        owners={p: draw(st.sampled_from((PLAYER_0, PLAYER_1))) for p in range(size)},
        successors={p: tuple(sorted(draw(st.sets(position, min_size=1, max_size=2)))) for p in range(size)},
        accepting=draw(st.frozensets(position)),
    )


class BuildTwTest(SimpleTestCase):

    def setUp(self):
        self.pennies = fixture_game('pennies')
        self.coop = fixture_game('coop')

    def test_deviator_of(self):
        """Test which component two letters differ in."""
        self.assertIsNone(deviator_of((0, 1), (0, 1)))
        self.assertEqual(deviator_of((0, 1), (0, 0)), 1)
        self.assertEqual(deviator_of((0, 1), (1, 0)), -1)

    def test_pennies_deviation_into_goal_is_stuck(self):
        """Test a deviation into a loser's goal is undefined."""
        tw = build_tw(self.pennies, {0})
        ax = letter(self.pennies, 'a', 'x')
        self.assertIsNone(tw.step(tw.initial, ax, letter(self.pennies, 'a', 'y')))
        self.assertEqual(tw.step(tw.initial, ax, letter(self.pennies, 'b', 'x')), ACCEPT_ALL)
        self.assertEqual(tw.step(tw.initial, ax, letter(self.pennies, 'b', 'y')), ACCEPT_ALL)

    def test_pennies_deviation_away_from_goal(self):
        """Test a deviation away from the goal enters a deviant state."""
        tw = build_tw(self.pennies, EMPTY)
        ax = letter(self.pennies, 'a', 'x')
        target = tw.step(tw.initial, ax, letter(self.pennies, 'b', 'x'))
        self.assertEqual(target, TwState.deviant(0, self.pennies.goals[0].state_index('rej')))
        self.assertTrue(tw.is_accepting(target))

    def test_everyone_wins_has_no_deviant_states(self):
        """Test W covering every agent builds no deviant states."""
        tw = build_tw(self.coop, BOTH)
        self.assertTrue(all(state.kind != 'deviant' for state in tw.states))
        for state in tw.states:
            for label, direction in itertools.product(self.coop.letters, repeat=2):
                if label != direction:
                    self.assertEqual(tw.step(state, label, direction), ACCEPT_ALL)

    def test_size_budget(self):
        """Test build_tw stops at the size budget."""
        with self.assertRaises(SizeBudgetExceeded) as ctx:
            build_tw(self.coop, EMPTY, size_budget=10)
        self.assertEqual(ctx.exception.budget, 10)

    def test_unknown_agent(self):
        """Test unknown agent ids are rejected."""
        with self.assertRaises(UnknownAgent):
            build_tw(self.coop, {2})

    def test_tables_are_complete(self):
        """Test every state has an entry per label and direction."""
        tw = build_tw(self.coop, EMPTY)
        self.assertEqual(tw.transition_count, tw.size * len(self.coop.letters) ** 2)


class BuchiGameTest(SimpleTestCase):

    def test_all_accepting(self):
        """Test Player 0 wins everywhere when every position accepts."""
        game = BuchiGame(
            owners={0: PLAYER_0, 1: PLAYER_1},
            successors={0: (1,), 1: (0, 1)},
            accepting=frozenset({0, 1}),
        )
        self.assertEqual(solve_buchi_game(game), frozenset({0, 1}))

    def test_no_accepting(self):
        """Test Player 0 wins nowhere without accepting positions."""
        game = BuchiGame(
            owners={0: PLAYER_0, 1: PLAYER_1},
            successors={0: (0, 1), 1: (0,)},
            accepting=frozenset(),
        )
        self.assertEqual(solve_buchi_game(game), frozenset())

    def test_player_1_escapes_to_rejecting_loop(self):
        """Test Player 1 escaping into a rejecting loop."""
        game = BuchiGame(
            owners={0: PLAYER_0, 1: PLAYER_1, 2: PLAYER_0},
            successors={0: (1,), 1: (0, 2), 2: (2,)},
            accepting=frozenset({0}),
        )
        self.assertEqual(solve_buchi_game(game), frozenset())

    def test_single_position(self):
        """Test one-position games."""
        for owner in (PLAYER_0, PLAYER_1):
            for accepting in (frozenset(), frozenset({0})):
                game = BuchiGame(owners={0: owner}, successors={0: (0,)}, accepting=accepting)
                self.assertEqual(solve_buchi_game(game), accepting)

    @given(game=buchi_games())
    @settings(PROPERTY_SETTINGS, max_examples=300)
    def test_agrees_with_strategy_enumeration(self, game):
        """Test the solver against positional strategy enumeration."""
        self.assertEqual(solve_buchi_game(game), naive_winning_region(game))


class TwNonemptinessTest(SimpleTestCase):

    def test_accept_all_state(self):
        """Test the accept-all state is nonempty."""
        tw = build_tw(fixture_game('pennies'), EMPTY)
        self.assertTrue(tw_nonempty_from(tw, ACCEPT_ALL))

    def test_deviant_state_forced_into_goal(self):
        """Test a deviant forced into its goal is empty."""
        goal = GoalDfa(
            states=('q0', 'q1'),
            initial=0,
            accepting=frozenset({1}),
            delta=({(0,): 1, (1,): 1}, {(0,): 1, (1,): 1}),
        )
        game = GameSpec(actions=(('a', 'b'),), goals=(goal,))
        tw = build_tw(game, EMPTY)
        self.assertFalse(tw_nonempty_from(tw, TwState.deviant(0, 0)))
        self.assertFalse(oracle_decide_w_ne(game, EMPTY))
        self.assertTrue(oracle_decide_w_ne(game, {0}))

    def test_fixtures(self):
        """Test oracle verdicts on the fixtures."""
        pennies = fixture_game('pennies')
        for winning_set in all_winning_sets(pennies):
            self.assertFalse(oracle_decide_w_ne(pennies, winning_set), winning_set)

        coop = fixture_game('coop')
        verdicts = {winning_set: oracle_decide_w_ne(coop, winning_set) for winning_set in all_winning_sets(coop)}
        self.assertEqual({w for w, exists in verdicts.items() if exists}, {EMPTY, BOTH})

    def test_cross_check(self):
        """Test the cross-check agrees on COOP."""
        comparisons = OracleService.cross_check(fixture_game('coop'))
        self.assertEqual(len(comparisons), 4)
        self.assertTrue(all(comparison.agrees for comparison in comparisons))


class OraclePropertyTest(SimpleTestCase):

    @given(game=games(max_states=4, max_actions=2))
    @settings(PROPERTY_SETTINGS, max_examples=200)
    def test_matches_lasso_search(self, game):
        """The tree-automaton verdict equals the lasso-search verdict for every W."""
        solutions = SafetyService.solutions_for(game, game.agents, use_cache=False)
        for winning_set in all_winning_sets(game):
            expected = decide_w_ne(game, winning_set, solutions=solutions).exists
            self.assertEqual(oracle_decide_w_ne(game, winning_set), expected, (game.actions, winning_set))

    @given(game=games(max_states=4, max_actions=2, min_actions=2))
    @settings(PROPERTY_SETTINGS, max_examples=100)
    def test_deviant_states_match_safety_regions(self, game):
        """A deviant state is nonempty exactly when its goal state is safe for Player 0."""
        tw = build_tw(game, EMPTY)
        for j in game.agents:
            solution = SafetyService.solve_for_agent(game, j)
            goal = game.goals[j]
            for q in range(goal.size):
                if goal.is_accepting(q):
                    continue
                self.assertEqual(
                    tw_nonempty_from(tw, TwState.deviant(j, q)),
                    solution.is_winning_state(q),
                    (j, q),
                )

    @given(game=games(max_states=4))
    @settings(PROPERTY_SETTINGS, max_examples=100)
    def test_everyone_wins_reduces_to_aw(self, game):
        """With nobody left to deviate, the oracle is plain A_W emptiness."""
        everyone = frozenset(game.agents)
        lasso = buchi_nonempty(
            aw_initial(game, everyone),
            partial(aw_step, game, everyone),
            lambda state: state.accepting,
            game.letters,
        )
        self.assertEqual(oracle_decide_w_ne(game, everyone), lasso is not None)

    @given(game=games(max_states=4))
    @settings(PROPERTY_SETTINGS, max_examples=50)
    def test_stuck_entries_enter_a_losers_goal(self, game):
        """Undefined entries only come from moves that hand a loser its goal."""
        for winning_set in all_winning_sets(game):
            tw = build_tw(game, winning_set)
            for state in tw.states:
                if state.kind == 'deviant':
                    self.assertFalse(game.goals[state.agent].is_accepting(state.goal_state))
                for (label, direction), target in tw.transitions[state].items():
                    if state == ACCEPT_ALL:
                        self.assertEqual(target, ACCEPT_ALL)
                    if target is not None:
                        continue
                    if state.kind == PRIMARY:
                        components = state.aw.components
                    else:
                        components = {state.agent: state.goal_state}
                    self.assertTrue(any(
                        game.goals[j].is_accepting(game.goals[j].step(components[j], direction))
                        for j in game.agents
                        if j not in winning_set and (state.kind == PRIMARY or j == state.agent)
                    ))
