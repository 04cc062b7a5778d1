"""
Tests for Interface app.
"""

import argparse
import json
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.test import SimpleTestCase
from rest_framework.exceptions import ValidationError

from apps.games.factories import FIXTURE_DIR
from apps.games.services import validate_game
from apps.reductions.serializers import FlatDfaSerializer
from apps.reductions.tests import ends_in_a, even_length

from .cli import cli_main
from .services import error_lines, parse_game, parse_winning_set

COOP = str(FIXTURE_DIR / 'coop.json')
PENNIES = str(FIXTURE_DIR / 'pennies.json')


def run(*argv):
    stdout, stderr = StringIO(), StringIO()
    code = cli_main([str(arg) for arg in argv], stdout=stdout, stderr=stderr)
    lines = [json.loads(line) for line in stdout.getvalue().splitlines() if line.startswith('{')]
    return code, lines, stdout.getvalue(), stderr.getvalue()


class WorkspaceMixin:

    def setUp(self):
        super().setUp()
        self.workspace = tempfile.TemporaryDirectory()
        self.addCleanup(self.workspace.cleanup)

    def write(self, name, content):
        path = Path(self.workspace.name) / name
        path.write_text(content if isinstance(content, str) else json.dumps(content))
        return str(path)


class ParseGameTest(WorkspaceMixin, SimpleTestCase):

    def test_coop_fixture(self):
        """Test loading a GameFile from disk."""
        game = parse_game(COOP)
        self.assertEqual(game.k, 2)
        self.assertEqual(game.actions, (('a', 'b'), ('x', 'y')))
        self.assertEqual([goal.size for goal in game.goals], [3, 3])

    def test_wildcard_row_covers_both_letters(self):
        """Test a wildcard row read from disk."""
        game = parse_game(COOP)
        goal = game.goals[0]
        s0 = goal.state_index('s0')
        self.assertEqual(goal.step(s0, game.parse_letter(['b', 'x'])), s0)
        self.assertEqual(goal.step(s0, game.parse_letter(['b', 'y'])), s0)

    def test_wildcard_conflict_names_both_rows(self):
        """Test conflict messages carry the file path and both rows."""
        document = json.loads(Path(COOP).read_text())
        document['goals'][0]['transitions'].append({'from': 's0', 'letter': ['b', 'x'], 'to': 'acc'})
        path = self.write('conflict.json', document)
        with self.assertRaises(ValidationError) as ctx:
            parse_game(path)
        messages = list(error_lines(ctx.exception.detail))
        conflict = [line for line in messages if line.endswith('[wildcard_conflict]')]
        self.assertEqual(len(conflict), 1)
        self.assertIn(path, conflict[0])
        self.assertIn('transitions[2]', conflict[0])
        self.assertIn('transitions[5]', conflict[0])

    def test_nested_errors_keep_list_positions(self):
        """Test nested errors name the list item they belong to."""
        document = json.loads(Path(COOP).read_text())
        document['goals'][1]['states'] = []
        path = self.write('empty-states.json', document)
        with self.assertRaises(ValidationError) as ctx:
            parse_game(path)
        messages = list(error_lines(ctx.exception.detail))
        self.assertIn(f"{path}.goals[1].states: This list may not be empty. [empty]", messages)

    def test_syntax_error(self):
        """Test malformed JSON is a parse error for the file."""
        path = self.write('broken.json', '{"agents": [')
        with self.assertRaises(ValidationError) as ctx:
            parse_game(path)
        self.assertEqual(ctx.exception.get_codes(), {path: ['parse_error']})

    def test_missing_file(self):
        """Test a missing file is a parse error for the file."""
        path = str(Path(self.workspace.name) / 'missing.json')
        with self.assertRaises(ValidationError) as ctx:
            parse_game(path)
        self.assertEqual(ctx.exception.get_codes(), {path: ['parse_error']})

    def test_winning_set_syntax(self):
        """Test the --winning-set syntax."""
        self.assertEqual(parse_winning_set('none'), frozenset())
        self.assertEqual(parse_winning_set('0,2'), frozenset({0, 2}))
        with self.assertRaises(argparse.ArgumentTypeError):
            parse_winning_set('zero')


class CheckCommandTest(SimpleTestCase):

    def test_coop_everyone_wins(self):
        """Test check prints a positive verdict with its witness."""
        code, lines, _, _ = run('check', '--game', COOP, '--winning-set', '0,1')
        self.assertEqual(code, 0)
        self.assertEqual(lines[0]['winning_set'], [0, 1])
        self.assertTrue(lines[0]['exists'])
        self.assertEqual(lines[0]['witness'], {'prefix': [['a', 'x'], ['a', 'x']], 'cycle': [['a', 'x']]})
        self.assertIn('explored_states', lines[0]['stats'])

    def test_pennies_has_no_equilibrium(self):
        """Test check exits 1 without an equilibrium."""
        code, lines, _, _ = run('check', '--game', PENNIES, '--winning-set', '0')
        self.assertEqual(code, 1)
        self.assertFalse(lines[0]['exists'])
        self.assertIsNone(lines[0]['witness'])

    def test_unknown_agent(self):
        """Test check exits 2 on an unknown agent."""
        code, lines, _, stderr = run('check', '--game', COOP, '--winning-set', '5')
        self.assertEqual(code, 2)
        self.assertEqual(lines, [])
        self.assertIn('unknown agent 5', stderr)

    def test_missing_argument(self):
        """Test a missing --winning-set exits 2."""
        code, _, _, _ = run('check', '--game', COOP)
        self.assertEqual(code, 2)

    def test_state_budget(self):
        """Test an exhausted state budget exits 3."""
        code, _, _, stderr = run('check', '--game', COOP, '--winning-set', '0,1', '--state-budget', '1')
        self.assertEqual(code, 3)
        self.assertIn('budget', stderr)

    def test_state_budget_only_where_a_search_runs(self):
        """Test --state-budget is refused where nothing searches."""
        code, _, _, stderr = run('solve-safety', '--game', PENNIES, '--agent', '1', '--state-budget', '10')
        self.assertEqual(code, 2)
        self.assertIn('--state-budget', stderr)

    def test_pretty(self):
        """Test the human-readable summary."""
        code, lines, stdout, _ = run('check', '--game', COOP, '--winning-set', 'none', '--pretty')
        self.assertEqual(code, 0)
        self.assertEqual(lines, [])
        self.assertIn('equilibrium exists', stdout)

    def test_call_command(self):
        """Test the command through call_command."""
        out = StringIO()
        call_command('ibg', 'check', '--game', COOP, '--winning-set', 'none', stdout=out)
        self.assertTrue(json.loads(out.getvalue())['exists'])


class EnumerateCommandTest(SimpleTestCase):

    def test_coop(self):
        """Test enumerate prints one line per winning set."""
        code, lines, _, _ = run('enumerate', '--game', COOP)
        self.assertEqual(code, 0)
        self.assertEqual(
            {tuple(line['winning_set']): line['exists'] for line in lines},
            {(): True, (0,): False, (1,): False, (0, 1): True},
        )

    def test_parallel_matches_sequential(self):
        """Test --parallel prints the same verdicts."""
        _, sequential, _, _ = run('enumerate', '--game', COOP)
        _, parallel, _, _ = run('enumerate', '--game', COOP, '--parallel', '2')
        strip = [{key: line[key] for key in ('winning_set', 'exists', 'witness')} for line in sequential]
        self.assertEqual([{key: line[key] for key in ('winning_set', 'exists', 'witness')} for line in parallel], strip)


class ProfileCommandTest(WorkspaceMixin, SimpleTestCase):

    def test_witness_then_verify(self):
        """Test a profile from witness passes verify."""
        code, lines, _, _ = run('witness', '--game', COOP, '--winning-set', 'none')
        self.assertEqual(code, 0)
        self.assertTrue(lines[0]['verdict']['exists'])
        profile = self.write('profile.json', lines[0]['profile'])

        code, lines, _, _ = run('verify', '--game', COOP, '--winning-set', 'none', '--profile', profile)
        self.assertEqual(code, 0)
        self.assertTrue(lines[0]['passed'])
        self.assertEqual(lines[0]['primary_winners'], [])

    def test_witness_without_equilibrium(self):
        """Test witness prints a null profile when none exists."""
        code, lines, _, _ = run('witness', '--game', PENNIES, '--winning-set', '1')
        self.assertEqual(code, 0)
        self.assertIsNone(lines[0]['profile'])

    def test_verify_rejects_profile_for_other_set(self):
        """Test verify exits 1 for a profile of another W."""
        _, lines, _, _ = run('witness', '--game', COOP, '--winning-set', '0,1')
        profile = self.write('profile.json', lines[0]['profile'])
        code, lines, _, _ = run('verify', '--game', COOP, '--winning-set', 'none', '--profile', profile)
        self.assertEqual(code, 1)
        self.assertFalse(lines[0]['primary_passed'])
        self.assertEqual(lines[0]['primary_winners'], [0, 1])

    def test_malformed_profile(self):
        """Test a malformed profile exits 2 and names the file."""
        profile = self.write('profile.json', {'initial': 0, 'modes': []})
        code, _, _, stderr = run('verify', '--game', COOP, '--winning-set', 'none', '--profile', profile)
        self.assertEqual(code, 2)
        self.assertIn(profile, stderr)


class SolveSafetyCommandTest(SimpleTestCase):

    def test_pennies_mismatcher_cannot_be_stopped(self):
        """Test solve-safety reports a spoiling path."""
        code, lines, _, _ = run('solve-safety', '--game', PENNIES, '--agent', '1')
        self.assertEqual(code, 0)
        self.assertFalse(lines[0]['initial_winning'])
        self.assertEqual(lines[0]['winning_states'], ["rej'"])
        self.assertEqual(lines[0]['spoiling_path'][-1], {'state': "acc'"})

    def test_dump_arena(self):
        """Test --dump-arena prints one line per node."""
        code, _, stdout, _ = run('solve-safety', '--game', PENNIES, '--agent', '1', '--dump-arena')
        self.assertEqual(code, 0)
        arena_lines = [line for line in stdout.splitlines() if '\t' in line]
        self.assertEqual(len(arena_lines), 3 + 3 * 2)

    def test_unknown_agent(self):
        """Test solve-safety exits 2 on an unknown agent."""
        code, _, _, stderr = run('solve-safety', '--game', PENNIES, '--agent', '4')
        self.assertEqual(code, 2)
        self.assertIn('unknown agent 4', stderr)


class ReduceCommandTest(WorkspaceMixin, SimpleTestCase):

    def test_reduce_emits_game_file(self):
        """Test reduce prints a valid GameFile."""
        paths = [
            self.write(f"dfa{index}.json", FlatDfaSerializer(dfa).data)
            for index, dfa in enumerate((ends_in_a(), even_length()))
        ]
        code, lines, _, _ = run('reduce', '--dfas', *paths)
        self.assertEqual(code, 0)
        game = validate_game(lines[0])
        self.assertEqual(game.actions, (('a', 'b', 'K'), ('*',)))

    def test_alphabet_mismatch(self):
        """Test reduce exits 2 on differing alphabets."""
        single = {
            'alphabet': ['a', 'b', 'c'],
            'states': ['p0'],
            'initial': 'p0',
            'accepting': [],
            'transitions': [{'from': 'p0', 'letter': ['_'], 'to': 'p0'}],
        }
        paths = [self.write('left.json', FlatDfaSerializer(ends_in_a()).data), self.write('right.json', single)]
        code, _, _, stderr = run('reduce', '--dfas', *paths)
        self.assertEqual(code, 2)
        self.assertIn('DFA 1', stderr)


class OracleCheckCommandTest(SimpleTestCase):

    def test_pennies(self):
        """Test oracle-check agrees on every W of PENNIES."""
        code, lines, _, _ = run('oracle-check', '--game', PENNIES)
        self.assertEqual(code, 0)
        self.assertEqual(len(lines), 4)
        self.assertTrue(all(line['agrees'] and not line['oracle'] for line in lines))

    def test_single_winning_set(self):
        """Test oracle-check for one W."""
        code, lines, _, _ = run('oracle-check', '--game', COOP, '--winning-set', '0,1')
        self.assertEqual(code, 0)
        self.assertEqual(lines, [{'winning_set': [0, 1], 'oracle': True, 'search': True, 'agrees': True}])

    def test_size_budget(self):
        """Test an exhausted oracle size budget exits 3."""
        code, _, _, _ = run('oracle-check', '--game', COOP, '--size-budget', '5')
        self.assertEqual(code, 3)
