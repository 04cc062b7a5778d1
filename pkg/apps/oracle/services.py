"""
Service layer for the tree-automaton oracle.

An independent decision procedure for W-NE existence, used to cross-check
the lasso search on small games:

- build_tw: explicit table of the Büchi tree automaton T_W whose accepted
  trees are exactly the W-NE strategy profiles. Labels are the letters the
  profile prescribes, directions the letters actually played.
- build_buchi_game / solve_buchi_game: the label chooser against the
  direction chooser, solved with the classical nested attractor loop
- oracle_decide_w_ne: T_W nonempty from its initial state
- OracleService: oracle and lasso search side by side for every W

Explicit tables are quadratic in the joint alphabet, so this path is only
meant for small instances.
"""

import logging
from collections import deque
from functools import partial
from typing import Dict, FrozenSet, Hashable, Iterable, List, Optional, Set, Tuple

from django.conf import settings

from apps.equilibria.services import (
    all_winning_sets,
    aw_initial,
    aw_step,
    check_winning_set,
    enumerate_ne_sets,
)
from apps.games.exceptions import SizeBudgetExceeded
from apps.games.models import GameSpec, Letter
from apps.safety.models import PLAYER_0, PLAYER_1

from .models import (
    ACCEPT_ALL,
    DEVIANT,
    LOSE,
    PRIMARY,
    BuchiGame,
    Choice,
    OracleComparison,
    TwAutomaton,
    TwState,
)

logger = logging.getLogger(__name__)

# deviator code of a (label, direction) pair that differs in several components
SEVERAL = -1


# =============================================================================
# T_W
# =============================================================================

def deviator_of(label: Letter, direction: Letter) -> Optional[int]:
    """
    None when the letters are equal, the single differing agent when only
    one component differs, SEVERAL otherwise.

    label[-j] = direction[-j] with label != direction holds for exactly one j.
    """
    differing = [i for i, (a, b) in enumerate(zip(label, direction)) if a != b]
    if not differing:
        return None
    if len(differing) == 1:
        return differing[0]
    return SEVERAL


def tw_step(
    game: GameSpec,
    winning_set: FrozenSet[int],
    state: TwState,
    label: Letter,
    direction: Letter,
) -> Optional[TwState]:
    """One entry of the T_W transition function, None where the run gets stuck."""
    if state.kind == PRIMARY:
        deviator = deviator_of(label, direction)
        if deviator is None:
            successor = aw_step(game, winning_set, state.aw, label)
            return None if successor is None else TwState.primary(successor)
        if deviator == SEVERAL or deviator in winning_set:
            return ACCEPT_ALL
        return _deviate(game, deviator, state.aw.components[deviator], direction)

    if state.kind == DEVIANT:
        deviator = deviator_of(label, direction)
        if deviator is None or deviator == state.agent:
            return _deviate(game, state.agent, state.goal_state, direction)
        return ACCEPT_ALL

    return ACCEPT_ALL


def _deviate(game: GameSpec, j: int, q: int, direction: Letter) -> Optional[TwState]:
    goal = game.goals[j]
    target = goal.step(q, direction)
    if goal.is_accepting(target):
        return None
    return TwState.deviant(j, target)


def build_tw(game: GameSpec, winning_set: Iterable[int], size_budget: Optional[int] = None) -> TwAutomaton:
    """
    Explicit T_W for the queried W.

    Primary states are the A_W states reachable from the initial state;
    deviant states are Q^j \\ F^j for every j outside W (states of F^j are
    never entered). q_A closes the table.

    Raises:
        UnknownAgent: W names an agent the game does not have
        SizeBudgetExceeded: states x |Sigma|^2 outgrew the budget
    """
    winning_set = check_winning_set(game, winning_set)
    budget = size_budget if size_budget is not None else settings.IBG_ORACLE_SIZE_BUDGET
    letters = game.letters
    pairs = [(label, direction) for label in letters for direction in letters]
    step = partial(tw_step, game, winning_set)

    states: List[TwState] = [ACCEPT_ALL]
    for j in game.agents:
        if j in winning_set:
            continue
        goal = game.goals[j]
        states.extend(TwState.deviant(j, q) for q in range(goal.size) if not goal.is_accepting(q))

    initial = TwState.primary(aw_initial(game, winning_set))
    index = set(states)
    index.add(initial)
    states.insert(0, initial)
    transitions: Dict[TwState, Dict[Tuple[Letter, Letter], Optional[TwState]]] = {}

    def check_budget():
        if len(states) * len(pairs) > budget:
            logger.warning(f"T_W for W={sorted(winning_set)} stopped at {len(states)} states")
            raise SizeBudgetExceeded(
                f"T_W needs more than {budget} transition entries",
                budget,
            )

    check_budget()
    queue = deque([initial])
    while queue:
        state = queue.popleft()
        table = {}
        for label, direction in pairs:
            target = step(state, label, direction)
            table[(label, direction)] = target
            if target is not None and target.kind == PRIMARY and target not in index:
                index.add(target)
                states.append(target)
                check_budget()
                queue.append(target)
        transitions[state] = table

    for state in states:
        if state not in transitions:
            transitions[state] = {pair: step(state, *pair) for pair in pairs}

    accepting = frozenset(
        state for state in states
        if state.kind != PRIMARY or state.aw.accepting
    )
    automaton = TwAutomaton(
        winning_set=winning_set,
        letters=letters,
        states=tuple(states),
        initial=initial,
        accepting=accepting,
        transitions=transitions,
    )
    logger.debug(
        f"T_W for W={sorted(winning_set)}: {automaton.size} states, "
        f"{automaton.transition_count} transitions"
    )
    return automaton


# =============================================================================
# BÜCHI GAMES
# =============================================================================

def build_buchi_game(tw: TwAutomaton, start: TwState) -> BuchiGame:
    """
    Part of the emptiness game of `tw` reachable from `start`.

    Player 0 owns the automaton states and picks a label, which leads to a
    Choice owned by Player 1, who picks a direction. Undefined transitions
    lead to the self-looping LOSE sink.
    """
    owners = {start: PLAYER_0}
    successors: Dict[Hashable, Tuple[Hashable, ...]] = {}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        if state == LOSE:
            successors[LOSE] = (LOSE,)
            continue
        choices = tuple(Choice(state, label) for label in tw.letters)
        successors[state] = choices
        for choice in choices:
            owners[choice] = PLAYER_1
            targets = dict.fromkeys(
                LOSE if target is None else target
                for target in (tw.step(state, choice.label, direction) for direction in tw.letters)
            )
            successors[choice] = tuple(targets)
            for target in targets:
                if target not in owners:
                    owners[target] = PLAYER_0
                    queue.append(target)

    accepting = frozenset(
        position for position in owners
        if isinstance(position, TwState) and tw.is_accepting(position)
    )
    return BuchiGame(owners=owners, successors=successors, accepting=accepting)


def attractor(game: BuchiGame, player: int, target: Set[Hashable], arena: Set[Hashable]) -> Set[Hashable]:
    """
    Positions of `arena` from which `player` forces a visit to `target`,
    with play confined to `arena` (a trap for the opponent).
    """
    predecessors = game.predecessors()
    remaining = {
        position: sum(1 for successor in game.successors[position] if successor in arena)
        for position in arena
    }
    attracted = set(target & arena)
    queue = deque(attracted)
    while queue:
        position = queue.popleft()
        for source in predecessors[position]:
            if source not in arena or source in attracted:
                continue
            if game.owner(source) == player:
                attracted.add(source)
                queue.append(source)
            else:
                remaining[source] -= 1
                if remaining[source] == 0:
                    attracted.add(source)
                    queue.append(source)
    return attracted


def solve_buchi_game(game: BuchiGame) -> FrozenSet[Hashable]:
    """
    Winning region of Player 0.

    Repeatedly removes the Player-1 attractor of the positions from which
    Player 0 cannot reach an accepting position of the current subgame.
    """
    arena = set(game.positions)
    rounds = 0
    while True:
        rounds += 1
        recurrent = attractor(game, PLAYER_0, set(game.accepting), arena)
        hopeless = arena - recurrent
        if not hopeless:
            break
        lost = attractor(game, PLAYER_1, hopeless, arena)
        logger.debug(f"Büchi round {rounds}: {len(lost)} positions lost for Player 0")
        arena -= lost
    return frozenset(arena)


def tw_nonempty_from(tw: TwAutomaton, start: TwState) -> bool:
    """Does T_W accept some tree when its run starts in `start`?"""
    game = build_buchi_game(tw, start)
    return start in solve_buchi_game(game)


def oracle_decide_w_ne(game: GameSpec, winning_set: Iterable[int], size_budget: Optional[int] = None) -> bool:
    """
    Raises:
        UnknownAgent: W names an agent the game does not have
        SizeBudgetExceeded: T_W is too large to build explicitly
    """
    tw = build_tw(game, winning_set, size_budget=size_budget)
    return tw_nonempty_from(tw, tw.initial)


class OracleService:

    @staticmethod
    def cross_check(
        game: GameSpec,
        winning_sets: Optional[Iterable[FrozenSet[int]]] = None,
        *,
        state_budget: Optional[int] = None,
        size_budget: Optional[int] = None,
    ) -> List[OracleComparison]:
        """Oracle and lasso-search verdicts for every W (all subsets by default)."""
        queries = all_winning_sets(game) if winning_sets is None else list(winning_sets)
        verdicts = enumerate_ne_sets(game, winning_sets=queries, state_budget=state_budget)
        comparisons = []
        for winning_set in queries:
            comparison = OracleComparison(
                winning_set=winning_set,
                oracle=oracle_decide_w_ne(game, winning_set, size_budget=size_budget),
                search=verdicts[winning_set].exists,
            )
            if not comparison.agrees:
                logger.warning(
                    f"Oracle disagrees for W={sorted(winning_set)}: "
                    f"oracle={comparison.oracle}, search={comparison.search}"
                )
            comparisons.append(comparison)
        return comparisons
