"""
Tests for Games app.
"""

import itertools

import factory
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st
from rest_framework.exceptions import ValidationError

from .factories import GameSpecFactory, LassoFactory, fixture_game
from .models import Lasso, ProjectedLetter
from .serializers import GameFileSerializer
from .services import dfa_run, lasso_satisfies, project_out, validate_game, winning_set_of
from .strategies import PROPERTY_SETTINGS, games_with_lassos, goals


def one_agent_document(**goal_overrides):
    goal = {
        'agent': 0,
        'states': ['s', 't'],
        'initial': 's',
        'accepting': ['t'],
        'transitions': [
            {'from': 's', 'letter': ['a'], 'to': 't'},
            {'from': 't', 'letter': ['a'], 'to': 't'},
        ],
    }
    goal.update(goal_overrides)
    return {'agents': [{'id': 0, 'actions': ['a']}], 'goals': [goal]}


def two_agent_document(transitions):
    return {
        'agents': [{'id': 0, 'actions': ['a', 'b']}, {'id': 1, 'actions': ['x', 'y']}],
        'goals': [
            {'agent': agent, 'states': ['s0', 'acc'], 'initial': 's0', 'accepting': ['acc'],
             'transitions': transitions}
            for agent in (0, 1)
        ],
    }


class ValidateGameTest(SimpleTestCase):
    """validate_game on hand-written documents."""

    def assertRejected(self, document, code):
        with self.assertRaises(ValidationError) as ctx:
            validate_game(document)
        codes = ctx.exception.get_codes()['non_field_errors']
        self.assertIn(code, codes)
        return [str(detail) for detail in ctx.exception.detail['non_field_errors']]

    def test_minimal_game(self):
        """Test validating a one-agent game."""
        game = validate_game(one_agent_document())
        self.assertEqual(game.k, 1)
        self.assertEqual(game.letters, ((0,),))
        self.assertEqual(game.goals[0].step(0, (0,)), 1)

    def test_accepting_initial_state(self):
        """Test an accepting initial state is rejected."""
        self.assertRejected(one_agent_document(accepting=['s']), 'accepting_initial_state')

    def test_missing_transition_names_state_and_letter(self):
        """Test a missing transition names its state and letter."""
        rows = [
            {'from': 's0', 'letter': ['a', '_'], 'to': 'acc'},
            {'from': 's0', 'letter': ['b', 'x'], 'to': 's0'},
            {'from': 'acc', 'letter': ['_', '_'], 'to': 'acc'},
        ]
        messages = self.assertRejected(two_agent_document(rows), 'non_total_transition')
        self.assertTrue(any("'s0'" in m and "['b', 'y']" in m for m in messages))

    def test_wildcard_expands_to_every_action(self):
        """Test '_' expands to every action of its agent."""
        rows = [
            {'from': 's0', 'letter': ['a', '_'], 'to': 'acc'},
            {'from': 's0', 'letter': ['b', '_'], 'to': 's0'},
            {'from': 'acc', 'letter': ['_', '_'], 'to': 'acc'},
        ]
        game = validate_game(two_agent_document(rows))
        goal = game.goals[0]
        self.assertEqual(goal.step(0, (0, 0)), 1)
        self.assertEqual(goal.step(0, (0, 1)), 1)
        self.assertEqual(goal.step(0, (1, 1)), 0)

    def test_overlapping_wildcards_with_equal_targets_are_fine(self):
        """Test overlapping rows that agree are accepted."""
        rows = [
            {'from': 's0', 'letter': ['_', '_'], 'to': 's0'},
            {'from': 's0', 'letter': ['b', '_'], 'to': 's0'},
            {'from': 'acc', 'letter': ['_', '_'], 'to': 'acc'},
        ]
        validate_game(two_agent_document(rows))

    def test_wildcard_conflict_names_both_rows(self):
        """Test overlapping rows that disagree name both rows."""
        rows = [
            {'from': 's0', 'letter': ['a', '_'], 'to': 'acc'},
            {'from': 's0', 'letter': ['_', 'x'], 'to': 's0'},
            {'from': 's0', 'letter': ['b', 'y'], 'to': 's0'},
            {'from': 'acc', 'letter': ['_', '_'], 'to': 'acc'},
        ]
        messages = self.assertRejected(two_agent_document(rows), 'wildcard_conflict')
        self.assertTrue(any('transitions[0]' in m and 'transitions[1]' in m for m in messages))

    def test_empty_alphabet(self):
        """Test an agent with no actions is rejected."""
        document = one_agent_document()
        document['agents'][0]['actions'] = []
        self.assertRejected(document, 'empty_alphabet')

    def test_unknown_action(self):
        """Test a transition using an unknown action is rejected."""
        document = one_agent_document(transitions=[
            {'from': 's', 'letter': ['z'], 'to': 't'},
            {'from': 't', 'letter': ['a'], 'to': 't'},
        ])
        self.assertRejected(document, 'unknown_action_in_transition')

    def test_unknown_state(self):
        """Test an unknown initial state is rejected."""
        self.assertRejected(one_agent_document(initial='nowhere'), 'unknown_state')

    def test_duplicate_action(self):
        """Test duplicate action names are rejected."""
        document = one_agent_document()
        document['agents'][0]['actions'] = ['a', 'a']
        self.assertRejected(document, 'duplicate_action')

    def test_agent_ids_must_be_consecutive(self):
        """Test agent ids must run from 0."""
        document = one_agent_document()
        document['agents'][0]['id'] = 3
        self.assertRejected(document, 'agent_ids')

    def test_missing_goal(self):
        """Test every agent needs a goal."""
        document = one_agent_document()
        document['agents'].append({'id': 1, 'actions': ['x']})
        self.assertRejected(document, 'missing_goal')

    def test_all_violations_reported_together(self):
        """Test all violations come back in one error."""
        document = one_agent_document(accepting=['s', 'ghost'])
        with self.assertRaises(ValidationError) as ctx:
            validate_game(document)
        codes = ctx.exception.get_codes()['non_field_errors']
        self.assertIn('accepting_initial_state', codes)
        self.assertIn('unknown_state', codes)


class FixtureTest(SimpleTestCase):
    """The canonical fixtures load and behave as documented."""

    def setUp(self):
        self.coop = fixture_game('coop')
        self.pennies = fixture_game('pennies')

    def test_coop_shape(self):
        """Test the COOP fixture loads."""
        self.assertEqual(self.coop.k, 2)
        self.assertEqual(self.coop.actions, (('a', 'b'), ('x', 'y')))
        self.assertEqual([goal.size for goal in self.coop.goals], [3, 3])

    def test_dfa_run_empty_word(self):
        """Test the run of the empty word."""
        goal = self.coop.goals[0]
        self.assertEqual(dfa_run(goal, []), [goal.initial])

    def test_dfa_run_coop(self):
        """Test a run through COOP's first goal."""
        goal = self.coop.goals[0]
        word = [self.coop.parse_letter(['b', 'y']), self.coop.parse_letter(['a', 'x'])]
        run = dfa_run(goal, word)
        self.assertEqual([goal.state_name(q) for q in run], ['s0', 's0', 'acc'])

    def test_dfa_run_pennies(self):
        """Test a run into the PENNIES reject sink."""
        goal = self.pennies.goals[0]
        run = dfa_run(goal, [self.pennies.parse_letter(['a', 'y'])])
        self.assertEqual([goal.state_name(q) for q in run], ['s0', 'rej'])

    def test_lasso_satisfies_immediately(self):
        """Test a goal met by the first letter."""
        lasso = Lasso(prefix=(), cycle=((0, 0),))
        self.assertTrue(lasso_satisfies(self.coop.goals[0], lasso))

    def test_lasso_never_satisfied(self):
        """Test a cycle that never meets the goal."""
        lasso = Lasso(prefix=(), cycle=((1, 1),))
        self.assertFalse(lasso_satisfies(self.coop.goals[0], lasso))

    def test_lasso_stuck_in_reject_sink(self):
        """Test a prefix into a reject sink."""
        lasso = Lasso(prefix=((0, 1),), cycle=((0, 0),))
        self.assertFalse(lasso_satisfies(self.pennies.goals[0], lasso))

    def test_winning_set_of(self):
        """Test the set of agents a lasso satisfies."""
        lasso = Lasso(prefix=((0, 1),), cycle=((0, 0),))
        self.assertEqual(winning_set_of(self.pennies, lasso), frozenset({1}))
        self.assertEqual(winning_set_of(self.coop, lasso), frozenset({0, 1}))

    def test_canonical_document_round_trip(self):
        """Test fixtures survive serialization without wildcards."""
        for game in (self.coop, self.pennies):
            document = GameFileSerializer(game).data
            self.assertEqual(validate_game(document), game)
            self.assertNotIn('_', str(document['goals']))


class ProjectOutTest(SimpleTestCase):

    def test_two_agents(self):
        """Test projecting out agent 1."""
        self.assertEqual(project_out((0, 1), 1), ProjectedLetter(1, (0,)))

    def test_single_agent(self):
        """Test projecting out the only agent."""
        self.assertEqual(project_out((0,), 0), ProjectedLetter(0, ()))

    def test_agreement_off_j(self):
        """Test letters differing only at j project together."""
        self.assertEqual(project_out((0, 0, 2), 1), project_out((0, 1, 2), 1))

    def test_projection_with_component_identifies_letter(self):
        """Test projection plus component recovers the letter."""
        letters = list(itertools.product(range(2), range(3), range(2)))
        for j in range(3):
            for alpha, beta in itertools.product(letters, repeat=2):
                same = project_out(alpha, j) == project_out(beta, j) and alpha[j] == beta[j]
                self.assertEqual(same, alpha == beta)

    def test_groups_follow_projection(self):
        """Test letters grouped by projection."""
        game = fixture_game('pennies')
        groups = game.letters_by_projection(0)
        self.assertEqual(list(groups), [ProjectedLetter(0, (0,)), ProjectedLetter(0, (1,))])
        self.assertEqual(groups[ProjectedLetter(0, (1,))], ((0, 1), (1, 1)))


class LassoSatisfiesPropertyTest(SimpleTestCase):
    """lasso_satisfies agrees with a plain bounded simulation."""

    @given(pair=games_with_lassos(agent_count=2, max_actions=2, max_states=6), data=st.data())
    @settings(PROPERTY_SETTINGS, max_examples=300)
    def test_against_bounded_simulation(self, pair, data):
        """Unrolling the cycle once per goal state decides satisfaction."""
        game, lasso = pair
        goal = data.draw(goals(game.actions, max_states=6))

        horizon = len(lasso.prefix) + len(lasso.cycle) * goal.size + 1
        run = dfa_run(goal, itertools.islice(lasso.letters(), horizon))
        expected = any(goal.is_accepting(q) for q in run[1:])

        self.assertEqual(lasso_satisfies(goal, lasso), expected)

    def test_dfa_run_length(self):
        """Test a run has one state more than its word."""
        factory.random.reseed_random('dfa-run')
        game = GameSpecFactory(agent_count=2)
        word = LassoFactory(letters=game.letters).prefix
        run = dfa_run(game.goals[0], word)
        self.assertEqual(len(run), len(word) + 1)
        self.assertEqual(run[0], game.goals[0].initial)
