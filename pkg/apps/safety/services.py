"""
Service layer for safety games.

- build_safety_arena / solve_safety: construct and solve G_j
- winning_moves: the guard used by A'_W
- spoiling_path: Player 1's play from a losing state into a dead end
- minimax_safety_oracle: exhaustive alternating search, used to check the
  solver on small arenas
- SafetyService: per-agent solutions shared through the Django cache
"""

import logging
from collections import deque
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from django.core.cache import cache

from apps.games.exceptions import DeviatorHasSingletonAlphabet, MissingSolution, UnknownState
from apps.games.models import GameSpec, Letter
from apps.games.services import game_digest, project_out

from .models import Node, P1Node, SafetyArena, SafetySolution

logger = logging.getLogger(__name__)


def arena_size_bounds(game: GameSpec, j: int) -> Tuple[int, int]:
    """Upper bounds (nodes, edges) of G_j: |Q|(|S|+1) and |Q||S| + |Q|^2|S|."""
    states, letters = game.goals[j].size, len(game.letters)
    return states * (letters + 1), states * letters + states * states * letters


def build_safety_arena(game: GameSpec, j: int) -> SafetyArena:
    """
    Build G_j for deviator j.

    Player-1 nodes are keyed by (q, project_out(alpha, j)): all letters with
    the same projection lead to the same set of successors.

    Raises:
        DeviatorHasSingletonAlphabet: agent j has a single action
    """
    if not game.has_choice(j):
        raise DeviatorHasSingletonAlphabet(f"Agent {j} has a single action and cannot deviate")

    goal = game.goals[j]
    groups = game.letters_by_projection(j)
    successors: Dict[Node, Tuple[Node, ...]] = {}
    p1_nodes: List[P1Node] = []

    for q in range(goal.size):
        moves = tuple(P1Node(q, move) for move in groups)
        successors[q] = () if goal.is_accepting(q) else moves
        for node in moves:
            # dict keeps first-seen order, so targets stay in canonical order
            targets = dict.fromkeys(goal.step(q, letter) for letter in groups[node.move])
            successors[node] = tuple(targets)
            p1_nodes.append(node)

    arena = SafetyArena(
        deviator=j,
        goal=goal,
        p0_nodes=tuple(range(goal.size)),
        p1_nodes=tuple(p1_nodes),
        successors=successors,
    )
    logger.info(f"Safety arena for agent {j}: {arena.node_count} nodes, {arena.edge_count} edges")
    return arena


def solve_safety(arena: SafetyArena) -> SafetySolution:
    """
    Solve G_j by the Player-1 attractor of the dead ends.

    Backward search with out-degree counters, linear in nodes plus edges.
    A Player-1 node joins the attractor through its first attracted
    successor; a Player-0 node once all of its successors are attracted.
    """
    predecessors = arena.predecessors()
    remaining = {node: len(targets) for node, targets in arena.successors.items()}
    ranks: Dict[Node, int] = {}
    strategy1: Dict[P1Node, int] = {}

    queue = deque()
    for node in arena.p0_nodes:
        if arena.is_dead_end(node):
            ranks[node] = 0
            queue.append(node)

    while queue:
        node = queue.popleft()
        for source in predecessors[node]:
            if source in ranks:
                continue
            if isinstance(source, P1Node):
                ranks[source] = ranks[node] + 1
                strategy1[source] = node
                queue.append(source)
            else:
                remaining[source] -= 1
                if remaining[source] == 0:
                    ranks[source] = ranks[node] + 1
                    queue.append(source)

    win0 = frozenset(node for node in arena.nodes if node not in ranks)
    strategy0 = {}
    for q in arena.p0_nodes:
        if q in win0:
            strategy0[q] = next(node.move for node in arena.successors[q] if node in win0)

    logger.debug(
        f"Agent {arena.deviator}: {len(win0)} of {arena.node_count} nodes winning for Player 0"
    )
    return SafetySolution(arena=arena, win0=win0, strategy0=strategy0, ranks=ranks, strategy1=strategy1)


def winning_moves(solution: SafetySolution, q: int, letter: Letter) -> bool:
    """
    True iff Player 0 stays winning by proposing `letter` in state q.

    Raises:
        UnknownState: q is not a state of the deviator's goal
    """
    goal = solution.arena.goal
    if not 0 <= q < goal.size:
        raise UnknownState(f"State {q} is not a state of agent {solution.deviator}'s goal")
    if goal.is_accepting(q):
        return False
    return P1Node(q, project_out(letter, solution.deviator)) in solution.win0


def spoiling_path(solution: SafetySolution, q: int) -> List[Node]:
    """
    Play from a losing state q into a dead end.

    Player 1 follows strategy1; Player 0 tries its moves in canonical order
    but every one of them is attracted, so ranks strictly decrease.
    """
    if q in solution.win0:
        raise ValueError(f"State {q} is winning for Player 0")
    arena = solution.arena
    path: List[Node] = [q]
    node: Node = q
    while not arena.is_dead_end(node):
        if isinstance(node, P1Node):
            node = solution.strategy1[node]
        else:
            node = arena.successors[node][0]
        path.append(node)
    return path


def minimax_safety_oracle(arena: SafetyArena, node: Node) -> bool:
    """
    Does Player 0 win from `node`? Exhaustive alternating search.

    If Player 1 can force a dead end it can do so within |V| moves, so the
    search is cut off at that depth.
    """

    @lru_cache(maxsize=None)
    def survives(current: Node, depth: int) -> bool:
        targets = arena.successors[current]
        if not targets:
            return False
        if depth == 0:
            return True
        outcomes = (survives(target, depth - 1) for target in targets)
        if isinstance(current, P1Node):
            return all(outcomes)
        return any(outcomes)

    return survives(node, arena.node_count)


def dump_arena(game: GameSpec, arena: SafetyArena) -> Iterable[str]:
    """Line-oriented dump: node, owner and successors separated by tabs."""
    goal = arena.goal

    def name(node: Node) -> str:
        if isinstance(node, P1Node):
            return f"{goal.state_name(node.state)}[{' '.join(game.format_projection(node.move))}]"
        return goal.state_name(node)

    for node in arena.nodes:
        targets = ','.join(name(target) for target in arena.successors[node])
        yield f"{name(node)}\t{arena.owner(node)}\t{targets}"


class SafetyService:
    """
    Safety solutions per (game, agent).

    Solutions are cached under the game's content digest so that every
    W-query of an enumeration, and every Celery worker sharing the cache,
    solves each G_j once.
    """

    CACHE_PREFIX = 'safety'

    @staticmethod
    def solve_for_agent(game: GameSpec, j: int) -> SafetySolution:
        return solve_safety(build_safety_arena(game, j))

    @staticmethod
    def cache_key(digest: str, j: int) -> str:
        return f"{SafetyService.CACHE_PREFIX}:{digest}:{j}"

    @staticmethod
    def cached_solution(game: GameSpec, j: int, digest: Optional[str] = None) -> SafetySolution:
        key = SafetyService.cache_key(digest or game_digest(game), j)
        return cache.get_or_set(key, lambda: SafetyService.solve_for_agent(game, j))

    @staticmethod
    def solutions_for(
        game: GameSpec,
        agents: Iterable[int],
        use_cache: bool = True,
    ) -> Dict[int, SafetySolution]:
        """Solutions for every agent in `agents` that can deviate."""
        deviators = [j for j in agents if game.has_choice(j)]
        if not use_cache:
            return {j: SafetyService.solve_for_agent(game, j) for j in deviators}
        digest = game_digest(game)
        return {j: SafetyService.cached_solution(game, j, digest) for j in deviators}

    @staticmethod
    def require(solutions: Mapping[int, SafetySolution], game: GameSpec, outside: Iterable[int]) -> None:
        """
        Raises:
            MissingSolution: a deviator outside W has no solution
        """
        for j in outside:
            if game.has_choice(j) and j not in solutions:
                raise MissingSolution(f"No safety solution for deviator {j}")
