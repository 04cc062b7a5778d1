"""
Management command for the iterated Boolean game solver.

Usage:
    # Is there an equilibrium in which exactly agents 0 and 1 win?
    python manage.py ibg check --game coop.json --winning-set 0,1

    # One verdict per subset of agents, optionally over Celery workers
    python manage.py ibg enumerate --game coop.json --parallel 4

    # Verdict plus a finite-state profile, and checking a profile
    python manage.py ibg witness --game coop.json --winning-set none
    python manage.py ibg verify --game coop.json --winning-set none --profile profile.json

    # Deviator safety game, DFA intersection reduction, oracle cross-check
    python manage.py ibg solve-safety --game pennies.json --agent 1 --dump-arena
    python manage.py ibg reduce --dfas a.json b.json
    python manage.py ibg oracle-check --game pennies.json

Results are JSON lines on standard output (--pretty for a human summary).
Exit codes: 0 ok, 1 negative answer (no equilibrium, failed verification,
oracle disagreement), 2 input error, 3 budget exceeded.
"""

import logging
import sys

from django.core.management.base import BaseCommand, CommandError
from rest_framework.exceptions import ValidationError

from apps.equilibria.serializers import VerdictSerializer
from apps.equilibria.services import decide_w_ne, enumerate_ne_sets
from apps.equilibria.tasks import EnumerationService
from apps.games.exceptions import BudgetExceeded
from apps.games.serializers import GameFileSerializer
from apps.interface.services import (
    error_lines,
    format_lasso,
    parse_flat_dfa,
    parse_game,
    parse_profile,
    parse_winning_set,
    render_line,
    safety_summary,
)
from apps.oracle.services import OracleService
from apps.reductions.services import build_dfaie_game
from apps.safety.services import SafetyService, dump_arena
from apps.synthesis.serializers import ProfileReportSerializer, ProfileSerializer
from apps.synthesis.services import ProfileService, verify_profile

logger = logging.getLogger(__name__)

OK = 0
NEGATIVE = 1
INPUT_ERROR = 2
BUDGET_EXCEEDED = 3


class Command(BaseCommand):
    help = 'Decide, witness and verify Nash equilibria of iterated Boolean games'

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.exit_code = OK

    def add_arguments(self, parser):
        subcommands = parser.add_subparsers(dest='subcommand', required=True)

        def subcommand(name, help_text, game=True, winning_set=False, searches=True):
            sub = subcommands.add_parser(
                name,
                help=help_text,
                called_from_command_line=parser.called_from_command_line,
            )
            sub.add_argument('--pretty', action='store_true', help='Human-readable summary instead of JSON')
            if searches:
                sub.add_argument('--state-budget', type=int, default=None, help='Cap on explored automaton states')
            if game:
                sub.add_argument('--game', required=True, help='GameFile (JSON)')
            if winning_set:
                sub.add_argument(
                    '--winning-set',
                    type=parse_winning_set,
                    required=True,
                    help="Comma-separated agent ids, or 'none' for the empty set",
                )
            return sub

        subcommand('check', 'Decide whether an equilibrium with winning set W exists', winning_set=True)
        enumerate_parser = subcommand('enumerate', 'Decide every winning set')
        enumerate_parser.add_argument('--parallel', type=int, default=0, help='Number of Celery chunks')
        subcommand('witness', 'Decide W and synthesize a strategy profile', winning_set=True)
        verify_parser = subcommand('verify', 'Check a strategy profile against W', winning_set=True, searches=False)
        verify_parser.add_argument('--profile', required=True, help='Profile file written by witness')
        safety_parser = subcommand('solve-safety', "Solve one deviator's safety game", searches=False)
        safety_parser.add_argument('--agent', type=int, required=True)
        safety_parser.add_argument('--dump-arena', action='store_true', help='Also print the arena, one node per line')
        reduce_parser = subcommand('reduce', 'Reduce DFA intersection to a game', game=False, searches=False)
        reduce_parser.add_argument('--dfas', nargs='+', required=True, help='Flat DFA files over one alphabet')
        oracle_parser = subcommand('oracle-check', 'Cross-check verdicts with the tree-automaton oracle')
        oracle_parser.add_argument('--winning-set', type=parse_winning_set, default=None)
        oracle_parser.add_argument('--size-budget', type=int, default=None, help='Cap on T_W transition entries')

    def run_from_argv(self, argv):
        super().run_from_argv(argv)
        if self.exit_code:
            sys.exit(self.exit_code)

    def handle(self, *args, **options):
        self.exit_code = OK
        self.pretty = options['pretty']
        name = options['subcommand']
        logger.info(f"ibg {name}")
        handler = getattr(self, f"handle_{name.replace('-', '_')}")
        try:
            handler(options)
        except ValidationError as exc:
            raise CommandError('\n'.join(error_lines(exc.detail)), returncode=INPUT_ERROR)
        except BudgetExceeded as exc:
            raise CommandError(str(exc), returncode=BUDGET_EXCEEDED)
        except ValueError as exc:
            raise CommandError(str(exc), returncode=INPUT_ERROR)

    def emit(self, data):
        self.stdout.write(render_line(data))

    # =========================================================================
    # SUBCOMMANDS
    # =========================================================================

    def handle_check(self, options):
        game = parse_game(options['game'])
        verdict = decide_w_ne(game, options['winning_set'], state_budget=options['state_budget'])
        self.report_verdict(game, verdict)
        if not verdict.exists:
            self.exit_code = NEGATIVE

    def handle_enumerate(self, options):
        game = parse_game(options['game'])
        if options['parallel'] > 0:
            lines = EnumerationService.enumerate_parallel(game, options['parallel'], options['state_budget'])
            for line in lines:
                if self.pretty:
                    status = 'exists' if line['exists'] else 'none'
                    self.stdout.write(f"W={line['winning_set']}: {status}")
                else:
                    self.emit(line)
            return
        for verdict in enumerate_ne_sets(game, state_budget=options['state_budget']).values():
            self.report_verdict(game, verdict)

    def handle_witness(self, options):
        game = parse_game(options['game'])
        solutions = SafetyService.solutions_for(game, game.agents)
        verdict = decide_w_ne(
            game, options['winning_set'], solutions=solutions, state_budget=options['state_budget'],
        )
        profile = ProfileService.synthesize_for_verdict(game, verdict, solutions)
        if self.pretty:
            self.report_verdict(game, verdict)
            if profile is not None:
                self.stdout.write(f"profile with {profile.size} modes")
            return
        self.emit({
            'verdict': VerdictSerializer(verdict, context={'game': game}).data,
            'profile': None if profile is None else ProfileSerializer(profile, context={'game': game}).data,
        })

    def handle_verify(self, options):
        game = parse_game(options['game'])
        profile = parse_profile(options['profile'], game)
        report = verify_profile(game, options['winning_set'], profile)
        if self.pretty:
            style = self.style.SUCCESS if report.passed else self.style.ERROR
            self.stdout.write(style(f"W={sorted(report.winning_set)}: {'passed' if report.passed else 'failed'}"))
            self.stdout.write(f"  primary trace {format_lasso(game, report.primary_trace)}")
            self.stdout.write(f"  satisfies goals of {sorted(report.primary_winners)}")
            for check in report.deviations:
                if not check.passed:
                    word = ' '.join(f"({','.join(game.format_letter(letter))})" for letter in check.counterexample)
                    self.stdout.write(self.style.ERROR(f"  agent {check.agent} profits from {word}"))
        else:
            self.emit(ProfileReportSerializer(report, context={'game': game}).data)
        if not report.passed:
            self.exit_code = NEGATIVE

    def handle_solve_safety(self, options):
        game = parse_game(options['game'])
        j = options['agent']
        if not 0 <= j < game.k:
            raise ValueError(f"unknown agent {j}")
        solution = SafetyService.solve_for_agent(game, j)
        if options['dump_arena']:
            for line in dump_arena(game, solution.arena):
                self.stdout.write(line)
        summary = safety_summary(game, solution)
        if self.pretty:
            style = self.style.SUCCESS if summary['initial_winning'] else self.style.WARNING
            self.stdout.write(style(f"agent {j} can be kept from its goal: {summary['initial_winning']}"))
            self.stdout.write(f"  winning states: {', '.join(summary['winning_states']) or '-'}")
        else:
            self.emit(summary)

    def handle_reduce(self, options):
        game = build_dfaie_game([parse_flat_dfa(path) for path in options['dfas']])
        self.emit(GameFileSerializer(game).data)

    def handle_oracle_check(self, options):
        game = parse_game(options['game'])
        winning_sets = None if options['winning_set'] is None else [options['winning_set']]
        comparisons = OracleService.cross_check(
            game,
            winning_sets,
            state_budget=options['state_budget'],
            size_budget=options['size_budget'],
        )
        for comparison in comparisons:
            if self.pretty:
                style = self.style.SUCCESS if comparison.agrees else self.style.ERROR
                self.stdout.write(style(
                    f"W={sorted(comparison.winning_set)}: oracle={comparison.oracle} search={comparison.search}"
                ))
            else:
                self.emit({
                    'winning_set': sorted(comparison.winning_set),
                    'oracle': comparison.oracle,
                    'search': comparison.search,
                    'agrees': comparison.agrees,
                })
        if not all(comparison.agrees for comparison in comparisons):
            self.exit_code = NEGATIVE

    # =========================================================================
    # OUTPUT
    # =========================================================================

    def report_verdict(self, game, verdict):
        if not self.pretty:
            self.emit(VerdictSerializer(verdict, context={'game': game}).data)
            return
        label = f"W={sorted(verdict.winning_set)}"
        if verdict.exists:
            self.stdout.write(self.style.SUCCESS(f"{label}: equilibrium exists"))
            self.stdout.write(f"  witness {format_lasso(game, verdict.witness)}")
        else:
            self.stdout.write(self.style.WARNING(f"{label}: no equilibrium"))
        self.stdout.write(f"  {verdict.explored} states explored in {verdict.elapsed:.3f}s")
