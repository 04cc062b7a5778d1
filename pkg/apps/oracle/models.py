"""
Oracle App Models

- TwState: state of the tree automaton T_W. Primary states wrap an A_W
  state, deviant states track one deviator's goal automaton, and the
  accept-all state q_A loops forever.
- TwAutomaton: explicit transition table over (state, label, direction).
- BuchiGame: two-player game on a finite graph with a Büchi objective for
  Player 0.
- OracleComparison: oracle answer next to the lasso search's answer.
"""

from dataclasses import dataclass
from typing import Dict, FrozenSet, Hashable, Mapping, NamedTuple, Optional, Tuple

from apps.equilibria.models import AwState
from apps.games.models import Letter

PRIMARY = 'primary'
DEVIANT = 'deviant'
ACCEPT_ALL_KIND = 'accept-all'
LOSE_KIND = 'lose'


class TwState(NamedTuple):
    kind: str
    aw: Optional[AwState] = None
    agent: Optional[int] = None
    goal_state: Optional[int] = None

    @classmethod
    def primary(cls, aw: AwState) -> 'TwState':
        return cls(PRIMARY, aw=aw)

    @classmethod
    def deviant(cls, agent: int, goal_state: int) -> 'TwState':
        return cls(DEVIANT, agent=agent, goal_state=goal_state)


ACCEPT_ALL = TwState(ACCEPT_ALL_KIND)

# Büchi game sink standing for an undefined transition
LOSE = TwState(LOSE_KIND)


@dataclass(frozen=True)
class TwAutomaton:
    """
    Deterministic Büchi tree automaton over labels and directions from the
    joint alphabet. `transitions[state][(label, direction)]` is None where
    the run gets stuck.
    """

    winning_set: FrozenSet[int]
    letters: Tuple[Letter, ...]
    states: Tuple[TwState, ...]
    initial: TwState
    accepting: FrozenSet[TwState]
    transitions: Mapping[TwState, Mapping[Tuple[Letter, Letter], Optional[TwState]]]

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def transition_count(self) -> int:
        return sum(len(table) for table in self.transitions.values())

    def step(self, state: TwState, label: Letter, direction: Letter) -> Optional[TwState]:
        return self.transitions[state][(label, direction)]

    def is_accepting(self, state: TwState) -> bool:
        return state in self.accepting


@dataclass(frozen=True)
class BuchiGame:
    """
    Player 0 wins a play iff it visits `accepting` infinitely often.

    Every position has at least one successor.
    """

    owners: Mapping[Hashable, int]
    successors: Mapping[Hashable, Tuple[Hashable, ...]]
    accepting: FrozenSet[Hashable]

    @property
    def positions(self) -> Tuple[Hashable, ...]:
        return tuple(self.successors)

    def owner(self, position: Hashable) -> int:
        return self.owners[position]

    def predecessors(self) -> Dict[Hashable, list]:
        incoming: Dict[Hashable, list] = {position: [] for position in self.successors}
        for position, targets in self.successors.items():
            for target in targets:
                incoming[target].append(position)
        return incoming


class Choice(NamedTuple):
    """Player-1 position: Player 0 has labelled `state` with `label`."""
    state: TwState
    label: Letter


@dataclass(frozen=True)
class OracleComparison:
    winning_set: FrozenSet[int]
    oracle: bool
    search: bool

    @property
    def agrees(self) -> bool:
        return self.oracle == self.search
