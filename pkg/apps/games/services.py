"""
Service layer for the core game model.

- validate_game: raw GameFile document -> GameSpec (or ValidationError)
- project_out: drop one agent's component of a joint letter
- dfa_run / lasso_satisfies / winning_set_of: goal satisfaction on finite
  words and on ultimately periodic traces
"""

import hashlib
import logging
from typing import FrozenSet, Iterable, List, Mapping

from rest_framework.renderers import JSONRenderer

from .models import GameSpec, GoalDfa, Lasso, Letter, ProjectedLetter
from .serializers import GameFileSerializer

logger = logging.getLogger(__name__)


def validate_game(raw: Mapping) -> GameSpec:
    """
    Validate a parsed GameFile document.

    Raises:
        rest_framework.exceptions.ValidationError: carrying every violation
            found in the document, each with its error code
    """
    serializer = GameFileSerializer(data=raw)
    serializer.is_valid(raise_exception=True)
    game = serializer.save()
    logger.debug(f"Validated game with {game.k} agents and {len(game.letters)} joint letters")
    return game


def project_out(letter: Letter, j: int) -> ProjectedLetter:
    return ProjectedLetter(j, tuple(letter[:j]) + tuple(letter[j + 1:]))


def dfa_run(dfa: GoalDfa, word: Iterable[Letter]) -> List[int]:
    """States q_0, q_1, ..., q_n visited while reading `word`."""
    run = [dfa.initial]
    for letter in word:
        run.append(dfa.step(run[-1], letter))
    return run


def lasso_satisfies(dfa: GoalDfa, lasso: Lasso) -> bool:
    """
    True iff some finite prefix of prefix . cycle^omega is accepted.

    The state at consecutive cycle boundaries repeats within |Q| periods,
    after which the run only revisits states it has already seen.
    """
    state = dfa.initial
    for letter in lasso.prefix:
        state = dfa.step(state, letter)
        if dfa.is_accepting(state):
            return True

    boundaries = set()
    while state not in boundaries:
        boundaries.add(state)
        for letter in lasso.cycle:
            state = dfa.step(state, letter)
            if dfa.is_accepting(state):
                return True
    return False


def winning_set_of(game: GameSpec, lasso: Lasso) -> FrozenSet[int]:
    """Agents whose goal is satisfied by the trace `lasso`."""
    return frozenset(i for i in game.agents if lasso_satisfies(game.goals[i], lasso))


def game_digest(game: GameSpec) -> str:
    """Content hash of the canonical GameFile, used as a cache key."""
    document = GameFileSerializer(game).data
    return hashlib.sha256(JSONRenderer().render(document)).hexdigest()
