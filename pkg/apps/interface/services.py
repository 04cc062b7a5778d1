"""
Service layer for the command-line surface.

- parse_game / parse_flat_dfa / parse_profile: read a JSON file and validate
  it, reporting every error under the file's path
- parse_winning_set: the --winning-set syntax ('0,2' or 'none')
- render_line: one compact JSON line for standard output
- error_lines: flatten a ValidationError into readable messages
"""

import argparse
import logging
from pathlib import Path
from typing import FrozenSet, Iterator, Mapping, Union

from rest_framework.exceptions import ErrorDetail, ParseError, ValidationError
from rest_framework.parsers import JSONParser
from rest_framework.renderers import JSONRenderer

from apps.games.models import GameSpec, Lasso
from apps.games.services import validate_game
from apps.reductions.models import FlatDfa
from apps.reductions.services import validate_flat_dfa
from apps.safety.models import SafetySolution
from apps.safety.services import spoiling_path
from apps.synthesis.models import ProfileTransducer
from apps.synthesis.serializers import ProfileSerializer

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def read_json(path: PathLike):
    """
    Raises:
        ValidationError: {path: [parse_error]} for unreadable or malformed files
    """
    try:
        with open(path, 'rb') as handle:
            return JSONParser().parse(handle)
    except OSError as exc:
        message = f"cannot read file: {exc.strerror or exc}"
    except ParseError as exc:
        message = str(exc.detail)
    raise ValidationError({str(path): [ErrorDetail(message, code='parse_error')]})


def _with_location(path: PathLike, exc: ValidationError) -> ValidationError:
    return ValidationError({str(path): exc.detail})


def parse_game(path: PathLike) -> GameSpec:
    """
    Raises:
        ValidationError: every problem of the file, keyed by its path
    """
    document = read_json(path)
    try:
        game = validate_game(document)
    except ValidationError as exc:
        raise _with_location(path, exc)
    logger.debug(f"Loaded {path}: {game.k} agents")
    return game


def parse_flat_dfa(path: PathLike) -> FlatDfa:
    document = read_json(path)
    try:
        return validate_flat_dfa(document)
    except ValidationError as exc:
        raise _with_location(path, exc)


def parse_profile(path: PathLike, game: GameSpec) -> ProfileTransducer:
    serializer = ProfileSerializer(data=read_json(path), context={'game': game})
    if not serializer.is_valid():
        raise ValidationError({str(path): serializer.errors})
    return serializer.save()


def parse_winning_set(text: str) -> FrozenSet[int]:
    """'0,2' -> {0, 2}; 'none' -> the empty set."""
    text = text.strip()
    if text.lower() == 'none':
        return frozenset()
    try:
        return frozenset(int(part) for part in text.split(','))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated agent ids or 'none', got '{text}'"
        )


def render_line(data) -> str:
    return JSONRenderer().render(data).decode('utf-8')


def error_lines(detail, location: str = '') -> Iterator[str]:
    """
    One 'location: message [code]' line per leaf of a ValidationError detail.

    Items of nested lists keep their index: 'game.json.goals[1].states'.
    """
    if isinstance(detail, Mapping):
        for key, value in detail.items():
            if key == 'non_field_errors':
                yield from error_lines(value, location)
            else:
                yield from error_lines(value, f"{location}.{key}" if location else str(key))
    elif isinstance(detail, list):
        for position, item in enumerate(detail):
            if isinstance(item, (Mapping, list)):
                yield from error_lines(item, f"{location}[{position}]")
            else:
                yield from error_lines(item, location)
    else:
        code = getattr(detail, 'code', None)
        suffix = f" [{code}]" if code else ''
        yield f"{location}: {detail}{suffix}" if location else f"{detail}{suffix}"


def format_lasso(game: GameSpec, lasso: Lasso) -> str:
    def word(letters):
        return ' '.join(f"({','.join(game.format_letter(letter))})" for letter in letters)

    prefix = word(lasso.prefix)
    cycle = f"[{word(lasso.cycle)}]^omega"
    return f"{prefix} {cycle}" if prefix else cycle


def safety_summary(game: GameSpec, solution: SafetySolution) -> dict:
    """Win_0(G_j) by state name, Player 0's moves and, if lost, a spoiling play."""
    goal = solution.arena.goal
    j = solution.deviator
    summary = {
        'agent': j,
        'winning_states': [goal.state_name(q) for q in range(goal.size) if solution.is_winning_state(q)],
        'initial_winning': solution.is_winning_state(goal.initial),
        'strategy': {
            goal.state_name(q): list(game.format_projection(move))
            for q, move in sorted(solution.strategy0.items())
        },
        'spoiling_path': None,
    }
    if not summary['initial_winning']:
        summary['spoiling_path'] = [
            {'state': goal.state_name(node)} if isinstance(node, int)
            else {'state': goal.state_name(node.state), 'move': list(game.format_projection(node.move))}
            for node in spoiling_path(solution, goal.initial)
        ]
    return summary
