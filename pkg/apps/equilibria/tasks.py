"""
Celery Tasks for Equilibria App.

`enumerate --parallel N` splits the 2^k winning sets into N chunks and
decides each chunk in a task. Safety solutions are shared through the
Django cache, keyed by the game's content digest. The dispatcher solves every
G_j before the group starts, so chunks only read them.

Usage:
    from apps.equilibria.tasks import EnumerationService
    lines = EnumerationService.enumerate_parallel(game, workers=4)

Without a broker (the default) tasks run eagerly in-process; with REDIS_URL
set, start workers with `celery -A config worker -l info`.
"""

import logging
from typing import Dict, List, Optional, Sequence

from celery import group, shared_task

from apps.games.exceptions import StateBudgetExceeded
from apps.games.models import GameSpec
from apps.games.serializers import GameFileSerializer
from apps.games.services import game_digest, validate_game
from apps.safety.services import SafetyService

from .serializers import VerdictSerializer
from .services import all_winning_sets, decide_w_ne

logger = logging.getLogger(__name__)


@shared_task(bind=True)
def decide_winning_sets(self, document: Dict, winning_sets: List[List[int]], state_budget: Optional[int] = None):
    """
    Decide a chunk of winning sets for a GameFile document.

    Returns one VerdictFile dict per winning set, or a single
    {'budget_exceeded': message} entry when the search outgrew the budget.
    """
    game = validate_game(document)
    digest = game_digest(game)
    outside = {j for winning_set in winning_sets for j in game.agents if j not in winning_set}
    solutions = {
        j: SafetyService.cached_solution(game, j, digest)
        for j in sorted(outside)
        if game.has_choice(j)
    }

    verdicts = []
    for winning_set in winning_sets:
        try:
            verdict = decide_w_ne(game, winning_set, solutions=solutions, state_budget=state_budget)
        except StateBudgetExceeded as exc:
            logger.warning(f"Chunk task {self.request.id}: {exc}")
            return [{'budget_exceeded': str(exc), 'budget': exc.budget}]
        verdicts.append(VerdictSerializer(verdict, context={'game': game}).data)
    return verdicts


def split_chunks(items: Sequence, count: int) -> List[list]:
    """Round-robin split into at most `count` nonempty chunks."""
    count = max(1, min(count, len(items)))
    return [list(items[start::count]) for start in range(count)]


class EnumerationService:

    @staticmethod
    def enumerate_parallel(game: GameSpec, workers: int, state_budget: Optional[int] = None) -> List[Dict]:
        """
        VerdictFile dicts for every winning set, decided by a Celery group.

        Raises:
            StateBudgetExceeded: some chunk outgrew the budget
        """
        SafetyService.solutions_for(game, game.agents)
        document = GameFileSerializer(game).data
        queries = [sorted(winning_set) for winning_set in all_winning_sets(game)]
        chunks = split_chunks(queries, workers)
        logger.info(f"Dispatching {len(queries)} winning sets in {len(chunks)} chunks")

        job = group(decide_winning_sets.s(dict(document), chunk, state_budget) for chunk in chunks)
        results = job.apply_async().get()

        by_set = {}
        for chunk_result in results:
            for line in chunk_result:
                if 'budget_exceeded' in line:
                    raise StateBudgetExceeded(line['budget_exceeded'], line['budget'])
                by_set[tuple(line['winning_set'])] = line
        return [by_set[tuple(query)] for query in queries]
