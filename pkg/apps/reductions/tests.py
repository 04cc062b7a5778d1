"""
Tests for Reductions app.
"""

from django.test import SimpleTestCase
from hypothesis import given, settings
from rest_framework.exceptions import ValidationError

from apps.equilibria.services import decide_w_ne
from apps.games.exceptions import AlphabetMismatch, SizeBudgetExceeded
from apps.games.serializers import GameFileSerializer
from apps.games.services import validate_game
from apps.games.strategies import PROPERTY_SETTINGS
from apps.oracle.services import oracle_decide_w_ne
from apps.safety.services import SafetyService
from apps.synthesis.services import synthesize_profile, verify_profile

from .models import FlatDfa
from .serializers import FlatDfaSerializer
from .services import (
    ReductionService,
    build_dfaie_game,
    dfa_intersection_witness,
    hat_transform,
    intersection_word_of,
    validate_flat_dfa,
)
from .strategies import flat_dfa_tuples


def exactly_ab():
    return validate_flat_dfa({
        'alphabet': ['a', 'b'],
        'states': ['p0', 'p1', 'p2', 'dead'],
        'initial': 'p0',
        'accepting': ['p2'],
        'transitions': [
            {'from': 'p0', 'letter': ['a'], 'to': 'p1'},
            {'from': 'p0', 'letter': ['b'], 'to': 'dead'},
            {'from': 'p1', 'letter': ['b'], 'to': 'p2'},
            {'from': 'p1', 'letter': ['a'], 'to': 'dead'},
            {'from': 'p2', 'letter': ['_'], 'to': 'dead'},
            {'from': 'dead', 'letter': ['_'], 'to': 'dead'},
        ],
    })


def flat(accepting, rows, states=None, alphabet=('a', 'b')):
    states = states or tuple(f"p{q}" for q in range(len(rows)))
    return FlatDfa(
        alphabet=tuple(alphabet),
        states=tuple(states),
        initial=0,
        accepting=frozenset(accepting),
        delta=tuple(dict(zip(alphabet, row)) for row in rows),
    )


def ends_in_a():
    return flat({1}, [(1, 0), (1, 0)])


def even_length():
    return flat({0}, [(1, 1), (0, 0)])


def a_plus():
    return flat({1}, [(1, 2), (1, 2), (2, 2)])


def b_plus():
    return flat({1}, [(2, 1), (2, 1), (2, 2)])


class FlatDfaSerializerTest(SimpleTestCase):

    def test_wildcards_expand(self):
        """Test wildcard rows in a flat DFA."""
        dfa = exactly_ab()
        self.assertEqual(dfa.size, 4)
        self.assertTrue(dfa.accepts(['a', 'b']))
        self.assertFalse(dfa.accepts(['a', 'b', 'a']))

    def test_accepting_initial_state_allowed(self):
        """Test a flat DFA may accept the empty word."""
        document = FlatDfaSerializer(even_length()).data
        self.assertEqual(validate_flat_dfa(document), even_length())

    def test_errors_carry_codes(self):
        """Test flat DFA errors carry codes."""
        document = FlatDfaSerializer(ends_in_a()).data
        document['transitions'].pop()
        with self.assertRaises(ValidationError) as ctx:
            validate_flat_dfa(document)
        self.assertIn('non_total_transition', ctx.exception.get_codes()['non_field_errors'])

        document['alphabet'] = ['a', '_']
        with self.assertRaises(ValidationError) as ctx:
            validate_flat_dfa(document)
        self.assertIn('reserved_action', ctx.exception.get_codes()['non_field_errors'])


class HatTransformTest(SimpleTestCase):

    def test_accepts_word_then_kill(self):
        """Test the hat DFA accepts a word followed by the kill symbol."""
        hat = hat_transform(exactly_ab())
        self.assertEqual(hat.kill_symbol, 'K')
        self.assertEqual(hat.size, 6)
        self.assertTrue(hat.accepts(['a', 'b', 'K']))
        self.assertTrue(hat.accepts(['a', 'b', 'K', 'a', 'K']))
        self.assertFalse(hat.accepts(['a', 'b']))
        self.assertFalse(hat.accepts(['a', 'K']))
        self.assertFalse(hat.accepts(['K', 'a', 'b', 'K']))

    def test_sinks_loop(self):
        """Test accept and reject are sinks."""
        hat = hat_transform(exactly_ab())
        for symbol in hat.alphabet:
            self.assertEqual(hat.step(hat.accept_state, symbol), hat.accept_state)
            self.assertEqual(hat.step(hat.reject_state, symbol), hat.reject_state)
        self.assertEqual(hat.accepting, frozenset({hat.accept_state}))

    def test_empty_language_never_accepts(self):
        """Test the hat of an empty language never reaches accept."""
        hat = hat_transform(flat((), [(0, 1), (1, 0)]))
        reachable = {hat.initial}
        frontier = [hat.initial]
        while frontier:
            q = frontier.pop()
            for symbol in hat.alphabet:
                target = hat.step(q, symbol)
                if target not in reachable:
                    reachable.add(target)
                    frontier.append(target)
        self.assertNotIn(hat.accept_state, reachable)

    def test_fresh_names_avoid_collisions(self):
        """Test fresh names are primed on collision."""
        dfa = flat({0}, [(0, 0)], states=('accept',), alphabet=('K', 'a'))
        hat = hat_transform(dfa)
        self.assertEqual(hat.kill_symbol, "K'")
        self.assertEqual(hat.states, ('accept', "accept'", 'reject'))


class BuildDfaieGameTest(SimpleTestCase):

    def test_three_dfas_share_one_writer(self):
        """Test only agent 0 has a choice."""
        game = build_dfaie_game([exactly_ab(), ends_in_a(), even_length()])
        self.assertEqual(game.actions, (('a', 'b', 'K'), ('*',), ('*',)))
        self.assertEqual(len(game.letters), 3)
        self.assertEqual(game.goals[0].size, 6)

    def test_single_dfa(self):
        """Test the reduction of a single DFA."""
        game = build_dfaie_game([exactly_ab()])
        self.assertEqual(game.k, 1)
        self.assertTrue(decide_w_ne(game, {0}).exists)

    def test_game_file_round_trip(self):
        """Test reduced games serialize as GameFiles."""
        game = build_dfaie_game([ends_in_a(), even_length()])
        self.assertEqual(validate_game(GameFileSerializer(game).data), game)

    def test_alphabet_mismatch(self):
        """Test differing alphabets are rejected."""
        with self.assertRaises(AlphabetMismatch):
            build_dfaie_game([ends_in_a(), flat({0}, [(0,)], alphabet=('a',))])

    def test_reduce_documents(self):
        """Test reducing documents."""
        documents = [FlatDfaSerializer(dfa).data for dfa in (a_plus(), b_plus())]
        game = ReductionService.reduce_documents(documents)
        self.assertFalse(decide_w_ne(game, game.agents).exists)


class IntersectionWitnessTest(SimpleTestCase):

    def test_shortest_common_word(self):
        """Test the shortest common word."""
        self.assertEqual(dfa_intersection_witness([ends_in_a(), even_length()]), ('a', 'a'))

    def test_disjoint_languages(self):
        """Test disjoint languages have no common word."""
        self.assertIsNone(dfa_intersection_witness([a_plus(), b_plus()]))

    def test_identical_dfas(self):
        """Test identical DFAs share their shortest word."""
        self.assertEqual(dfa_intersection_witness([exactly_ab(), exactly_ab()]), ('a', 'b'))

    def test_empty_word(self):
        """Test the empty word as a common word."""
        self.assertEqual(dfa_intersection_witness([even_length(), even_length()]), ())

    def test_budget(self):
        """Test the product search stops at the budget."""
        with self.assertRaises(SizeBudgetExceeded):
            dfa_intersection_witness([a_plus(), b_plus()], product_budget=2)


class ReductionPropertyTest(SimpleTestCase):
    """Common words exist exactly when the reduced game has an everybody-wins equilibrium."""

    @given(dfas=flat_dfa_tuples())
    @settings(PROPERTY_SETTINGS, max_examples=100)
    def test_random_dfa_tuples(self, dfas):
        """Both deciders match direct intersection, and the witness replays and synthesizes."""
        word = dfa_intersection_witness(dfas)
        game = build_dfaie_game(dfas)
        everyone = frozenset(game.agents)
        solutions = SafetyService.solutions_for(game, game.agents, use_cache=False)
        verdict = decide_w_ne(game, everyone, solutions=solutions)

        self.assertEqual(verdict.exists, word is not None)
        self.assertEqual(oracle_decide_w_ne(game, everyone), word is not None)
        if word is None:
            return

        kill = len(game.actions[0]) - 1
        self.assertEqual([letter[0] for letter in verdict.witness.prefix].count(kill), 1)
        replayed = intersection_word_of(game, verdict.witness)
        self.assertIsNotNone(replayed)
        self.assertTrue(all(dfa.accepts(replayed) for dfa in dfas))
        self.assertGreaterEqual(len(replayed), len(word))

        profile = synthesize_profile(game, everyone, verdict.witness, solutions)
        self.assertTrue(verify_profile(game, everyone, profile).passed)
