"""
Service layer for W-equilibrium decisions.

A_W runs all goal automata in lockstep and remembers which agents of W are
still waiting for their goal; it gets stuck when an agent outside W would
reach its goal. A'_W additionally keeps every deviator j outside W inside
Win_0(G_j). A W-NE exists iff A'_W accepts some infinite word, which
BuchiSearch decides with an explicit lasso search.

Acceptance (pending = {}) persists along defined transitions, so a lasso
only needs to reach an accepting state and then cycle back to it.
"""

import itertools
import logging
import time
from collections import deque
from functools import partial
from typing import Callable, Dict, FrozenSet, Hashable, Iterable, List, Mapping, Optional, Sequence

from django.conf import settings

from apps.games.exceptions import StateBudgetExceeded, UnknownAgent
from apps.games.models import GameSpec, Lasso, Letter
from apps.safety.models import SafetySolution
from apps.safety.services import SafetyService, winning_moves

from .models import AwState, Verdict

logger = logging.getLogger(__name__)

StepFunction = Callable[[Hashable, Letter], Optional[Hashable]]


# =============================================================================
# A_W AND A'_W
# =============================================================================

def check_winning_set(game: GameSpec, winning_set: Iterable[int]) -> FrozenSet[int]:
    """
    Raises:
        UnknownAgent: W names an agent the game does not have
    """
    winning_set = frozenset(winning_set)
    for agent in sorted(winning_set):
        if not 0 <= agent < game.k:
            raise UnknownAgent(f"unknown agent {agent}")
    return winning_set


def aw_initial(game: GameSpec, winning_set: FrozenSet[int]) -> AwState:
    return AwState(tuple(goal.initial for goal in game.goals), frozenset(winning_set))


def aw_step(game: GameSpec, winning_set: FrozenSet[int], state: AwState, letter: Letter) -> Optional[AwState]:
    """Successor of `state` on `letter`, or None when A_W is stuck."""
    goals = game.goals
    components = tuple(goals[i].step(q, letter) for i, q in enumerate(state.components))
    for j in game.agents:
        if j not in winning_set and goals[j].is_accepting(components[j]):
            return None
    pending = frozenset(i for i in state.pending if not goals[i].is_accepting(components[i]))
    return AwState(components, pending)


def apw_initial(
    game: GameSpec,
    winning_set: FrozenSet[int],
    solutions: Mapping[int, SafetySolution],
) -> Optional[AwState]:
    """Initial state of A'_W, or None when some deviator starts outside its winning region."""
    for j, solution in solutions.items():
        if j not in winning_set and not solution.is_winning_state(game.goals[j].initial):
            return None
    return aw_initial(game, winning_set)


def apw_step(
    game: GameSpec,
    winning_set: FrozenSet[int],
    solutions: Mapping[int, SafetySolution],
    state: AwState,
    letter: Letter,
) -> Optional[AwState]:
    """
    A_W step guarded by every deviator's safety game.

    Only agents outside W with at least two actions are guarded; the others
    cannot deviate.
    """
    guarded = [solution for j, solution in solutions.items() if j not in winning_set]
    for solution in guarded:
        if not winning_moves(solution, state.components[solution.deviator], letter):
            return None
    successor = aw_step(game, winning_set, state, letter)
    if successor is None:
        return None
    for solution in guarded:
        if not solution.is_winning_state(successor.components[solution.deviator]):
            return None
    return successor


def accepts_lasso(
    initial: Optional[Hashable],
    step: StepFunction,
    accepting: Callable[[Hashable], bool],
    lasso: Lasso,
) -> bool:
    """
    Does a deterministic automaton with persistent acceptance accept the lasso?

    Simulates until a (cycle position, state) pair repeats; the word is
    accepted iff the run never gets stuck and the repeated state accepts.
    """
    if initial is None:
        return False
    state = initial
    position = 0
    seen = set()
    while True:
        if position >= len(lasso.prefix):
            key = (position, state)
            if key in seen:
                return accepting(state)
            seen.add(key)
        state = step(state, lasso.letter_at(position))
        if state is None:
            return False
        position = lasso.next_position(position)


# =============================================================================
# LASSO SEARCH
# =============================================================================

class BuchiSearch:
    """
    Explicit emptiness check for a deterministic Büchi automaton whose
    acceptance persists along defined transitions.

    Breadth-first search from the initial state in canonical letter order.
    Each accepting state met is tried as a cycle anchor with a second
    breadth-first search back to itself; the first success yields the
    shortest prefix and then the shortest cycle through that anchor.
    """

    def __init__(
        self,
        step: StepFunction,
        accepting: Callable[[Hashable], bool],
        letters: Sequence[Letter],
        state_budget: Optional[int] = None,
    ):
        self.step = step
        self.accepting = accepting
        self.letters = letters
        self.state_budget = state_budget if state_budget is not None else settings.IBG_STATE_BUDGET
        self._seen = set()

    @property
    def explored(self) -> int:
        """Distinct states visited by either phase."""
        return len(self._seen)

    def _visit(self, state: Hashable) -> None:
        if state in self._seen:
            return
        if len(self._seen) >= self.state_budget:
            logger.warning(f"Lasso search stopped after {len(self._seen)} states")
            raise StateBudgetExceeded(
                f"State budget of {self.state_budget} explored states exceeded",
                self.state_budget,
            )
        self._seen.add(state)

    def _successors(self, state: Hashable):
        for letter in self.letters:
            successor = self.step(state, letter)
            if successor is not None:
                yield letter, successor

    @staticmethod
    def _path(parent: Dict, target: Hashable) -> List[Letter]:
        letters = []
        while parent[target] is not None:
            target, letter = parent[target]
            letters.append(letter)
        letters.reverse()
        return letters

    def _cycle_through(self, anchor: Hashable) -> Optional[List[Letter]]:
        parent = {anchor: None}
        queue = deque([anchor])
        while queue:
            state = queue.popleft()
            for letter, successor in self._successors(state):
                if successor == anchor:
                    return self._path(parent, state) + [letter]
                if successor not in parent:
                    self._visit(successor)
                    parent[successor] = (state, letter)
                    queue.append(successor)
        return None

    def run(self, initial: Optional[Hashable]) -> Optional[Lasso]:
        if initial is None:
            return None
        self._visit(initial)
        parent = {initial: None}
        queue = deque([initial])
        while queue:
            state = queue.popleft()
            if self.accepting(state):
                logger.debug(f"Accepting state reached after {len(parent)} states, looking for a cycle")
                cycle = self._cycle_through(state)
                if cycle is not None:
                    return Lasso(prefix=tuple(self._path(parent, state)), cycle=tuple(cycle))
                logger.debug("No cycle through this accepting state")
            for letter, successor in self._successors(state):
                if successor not in parent:
                    self._visit(successor)
                    parent[successor] = (state, letter)
                    queue.append(successor)
        return None


def buchi_nonempty(
    initial: Optional[Hashable],
    step: StepFunction,
    accepting: Callable[[Hashable], bool],
    letters: Sequence[Letter],
    state_budget: Optional[int] = None,
) -> Optional[Lasso]:
    """Accepting lasso of the automaton, or None when its language is empty."""
    return BuchiSearch(step, accepting, letters, state_budget).run(initial)


# =============================================================================
# DECISIONS
# =============================================================================

def all_winning_sets(game: GameSpec) -> List[FrozenSet[int]]:
    """Every subset of the agents, by size and then lexicographically."""
    return [
        frozenset(subset)
        for size in range(game.k + 1)
        for subset in itertools.combinations(game.agents, size)
    ]


def decide_w_ne(
    game: GameSpec,
    winning_set: Iterable[int],
    *,
    solutions: Optional[Mapping[int, SafetySolution]] = None,
    state_budget: Optional[int] = None,
) -> Verdict:
    """
    Decide whether some Nash equilibrium satisfies exactly the goals in W.

    Args:
        game: Validated game
        winning_set: The queried W
        solutions: Safety solutions for (at least) every deviator outside W;
            solved on demand when omitted
        state_budget: Cap on explored A'_W states (settings.IBG_STATE_BUDGET)

    Raises:
        UnknownAgent: W names an agent the game does not have
        MissingSolution: `solutions` lacks a deviator outside W
        StateBudgetExceeded: the search outgrew the budget
    """
    started = time.perf_counter()
    winning_set = check_winning_set(game, winning_set)
    outside = [j for j in game.agents if j not in winning_set]
    if solutions is None:
        solutions = SafetyService.solutions_for(game, outside)
    SafetyService.require(solutions, game, outside)
    solutions = {j: solutions[j] for j in outside if game.has_choice(j)}

    search = BuchiSearch(
        step=partial(apw_step, game, winning_set, solutions),
        accepting=lambda state: state.accepting,
        letters=game.letters,
        state_budget=state_budget,
    )
    witness = search.run(apw_initial(game, winning_set, solutions))
    verdict = Verdict(
        winning_set=winning_set,
        exists=witness is not None,
        witness=witness,
        explored=search.explored,
        elapsed=time.perf_counter() - started,
    )
    logger.info(
        f"W={sorted(winning_set)}: exists={verdict.exists}, "
        f"{verdict.explored} states explored in {verdict.elapsed:.3f}s"
    )
    return verdict


def enumerate_ne_sets(
    game: GameSpec,
    *,
    winning_sets: Optional[Iterable[FrozenSet[int]]] = None,
    solutions: Optional[Mapping[int, SafetySolution]] = None,
    state_budget: Optional[int] = None,
) -> Dict[FrozenSet[int], Verdict]:
    """
    One verdict per winning set (all subsets by default).

    Every G_j is solved once up front and shared by all queries.
    """
    if solutions is None:
        solutions = SafetyService.solutions_for(game, game.agents)
    queries = all_winning_sets(game) if winning_sets is None else list(winning_sets)
    return {
        winning_set: decide_w_ne(game, winning_set, solutions=solutions, state_budget=state_budget)
        for winning_set in queries
    }
