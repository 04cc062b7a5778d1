"""
Tests for Synthesis app.
"""

from django.test import SimpleTestCase
from hypothesis import given, settings
from rest_framework.exceptions import ValidationError

from apps.equilibria.services import enumerate_ne_sets
from apps.games.exceptions import LassoNotAccepting, MissingSolution
from apps.games.factories import fixture_game
from apps.games.models import Lasso
from apps.games.strategies import PROPERTY_SETTINGS, games
from apps.safety.services import SafetyService

from .models import ProfileTransducer
from .serializers import ProfileSerializer
from .services import minimize_profile, primary_trace, synthesize_profile, verify_profile

EMPTY = frozenset()
BOTH = frozenset({0, 1})


def constant_profile(game, output):
    return ProfileTransducer(
        outputs=(output,),
        transitions=({letter: 0 for letter in game.letters},),
        labels=('constant',),
    )


class CoopSynthesisTest(SimpleTestCase):

    def setUp(self):
        self.game = fixture_game('coop')
        self.solutions = SafetyService.solutions_for(self.game, self.game.agents)
        self.ax = self.game.parse_letter(['a', 'x'])
        self.by = self.game.parse_letter(['b', 'y'])

    def test_everyone_wins_needs_one_mode(self):
        """Test W covering everyone minimizes to one mode."""
        lasso = Lasso(prefix=(self.ax, self.ax), cycle=(self.ax,))
        profile = synthesize_profile(self.game, BOTH, lasso, self.solutions)
        self.assertEqual(profile.size, 1)
        self.assertEqual(profile.output(0), self.ax)
        self.assertTrue(verify_profile(self.game, BOTH, profile).passed)

    def test_nobody_wins_punishes_each_deviator(self):
        """Test each deviator is punished."""
        lasso = Lasso(prefix=(), cycle=(self.by,))
        profile = synthesize_profile(self.game, EMPTY, lasso, self.solutions)
        self.assertEqual(profile.output(profile.initial), self.by)

        after_0 = profile.step(profile.initial, self.game.parse_letter(['a', 'y']))
        self.assertEqual(self.game.format_letter(profile.output(after_0))[1], 'y')
        after_1 = profile.step(profile.initial, self.game.parse_letter(['b', 'x']))
        self.assertEqual(self.game.format_letter(profile.output(after_1))[0], 'b')

        report = verify_profile(self.game, EMPTY, profile)
        self.assertTrue(report.primary_passed)
        self.assertTrue(report.passed)
        self.assertEqual(primary_trace(profile), lasso)

    def test_unminimized_profile_also_verifies(self):
        """Test the unminimized profile verifies too."""
        lasso = Lasso(prefix=(), cycle=(self.by,))
        profile = synthesize_profile(self.game, EMPTY, lasso, self.solutions, minimize=False)
        self.assertTrue(verify_profile(self.game, EMPTY, profile).passed)
        self.assertGreaterEqual(profile.size, minimize_profile(profile).size)

    def test_rejects_lasso_outside_apw(self):
        """Test a lasso outside A'_W is refused."""
        with self.assertRaises(LassoNotAccepting):
            synthesize_profile(self.game, EMPTY, Lasso(prefix=(), cycle=(self.ax,)), self.solutions)

    def test_missing_deviator_solution(self):
        """A loser who can deviate but has no safety solution is refused."""
        lasso = Lasso(prefix=(), cycle=(self.by,))
        with self.assertRaises(MissingSolution):
            synthesize_profile(self.game, EMPTY, lasso, {0: self.solutions[0]})

    def test_weak_punishment_fails_deviation_check(self):
        """Test a weak punishment is caught with a counterexample."""
        bx = self.game.parse_letter(['b', 'x'])
        profile = ProfileTransducer(
            outputs=(self.by, bx),
            transitions=(
                {letter: 0 if letter == self.by else 1 for letter in self.game.letters},
                {letter: 1 for letter in self.game.letters},
            ),
            labels=('trace', 'switched'),
        )
        report = verify_profile(self.game, EMPTY, profile)
        self.assertTrue(report.primary_passed)
        self.assertFalse(report.passed)
        failing = [check for check in report.deviations if not check.passed]
        self.assertEqual(failing[0].agent, 0)
        self.assertEqual(failing[0].counterexample, (self.game.parse_letter(['a', 'y']), self.ax))

    def test_primary_trace_satisfying_a_loser_fails(self):
        """Test a primary trace satisfying a loser fails."""
        report = verify_profile(self.game, EMPTY, constant_profile(self.game, self.ax))
        self.assertFalse(report.primary_passed)
        self.assertEqual(report.primary_winners, BOTH)


class ProfileSerializerTest(SimpleTestCase):

    def setUp(self):
        self.game = fixture_game('coop')
        solutions = SafetyService.solutions_for(self.game, self.game.agents)
        lasso = Lasso(prefix=(), cycle=(self.game.parse_letter(['b', 'y']),))
        self.profile = synthesize_profile(self.game, EMPTY, lasso, solutions)

    def test_document_round_trip(self):
        """Test profile files round trip."""
        document = ProfileSerializer(self.profile, context={'game': self.game}).data
        serializer = ProfileSerializer(data=document, context={'game': self.game})
        serializer.is_valid(raise_exception=True)
        self.assertEqual(serializer.save(), self.profile)

    def test_missing_observation(self):
        """Test a missing successor is reported."""
        document = ProfileSerializer(self.profile, context={'game': self.game}).data
        document['modes'][0]['next'].pop()
        serializer = ProfileSerializer(data=document, context={'game': self.game})
        with self.assertRaises(ValidationError) as ctx:
            serializer.is_valid(raise_exception=True)
        self.assertIn('non_total_transition', ctx.exception.get_codes()['non_field_errors'])

    def test_unknown_target_and_action(self):
        """Test unknown modes and actions are reported."""
        document = ProfileSerializer(self.profile, context={'game': self.game}).data
        document['modes'][0]['next'][0]['to'] = 99
        document['modes'][0]['output'] = ['c', 'x']
        serializer = ProfileSerializer(data=document, context={'game': self.game})
        self.assertFalse(serializer.is_valid())
        codes = serializer.errors['non_field_errors']
        self.assertEqual({detail.code for detail in codes}, {'unknown_mode', 'invalid_letter'})


class SynthesisRoundTripTest(SimpleTestCase):
    """Every positive verdict yields a profile that passes verification."""

    @given(game=games(max_states=4))
    @settings(PROPERTY_SETTINGS, max_examples=200)
    def test_random_games(self, game):
        """Synthesized profiles pass the exact deviation checks."""
        solutions = SafetyService.solutions_for(game, game.agents, use_cache=False)
        for winning_set, verdict in enumerate_ne_sets(game, solutions=solutions).items():
            if not verdict.exists:
                continue
            profile = synthesize_profile(game, winning_set, verdict.witness, solutions)
            report = verify_profile(game, winning_set, profile)
            self.assertTrue(report.primary_passed, winning_set)
            self.assertTrue(all(check.passed for check in report.deviations), winning_set)
