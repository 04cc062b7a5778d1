"""
Safety App Models

The safety game G_j asks whether the coalition of all agents but j (Player 0,
choosing the other agents' components) can keep agent j's goal automaton
out of its accepting states forever, while agent j (Player 1) picks its own
component after seeing theirs.

Nodes:
- Player-0 nodes are the states q of A^j (plain ints). Accepting states have
  no successors: a play that reaches one is stuck and Player 0 has lost.
- Player-1 nodes are P1Node(q, move) where move is a ProjectedLetter: the
  joint letter minus agent j's component.
"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Mapping, NamedTuple, Tuple, Union

from apps.games.models import GoalDfa, ProjectedLetter


class P1Node(NamedTuple):
    state: int
    move: ProjectedLetter


Node = Union[int, P1Node]

PLAYER_0 = 0
PLAYER_1 = 1


@dataclass(frozen=True)
class SafetyArena:
    deviator: int
    goal: GoalDfa
    p0_nodes: Tuple[int, ...]
    p1_nodes: Tuple[P1Node, ...]
    successors: Mapping[Node, Tuple[Node, ...]]

    @staticmethod
    def owner(node: Node) -> int:
        return PLAYER_1 if isinstance(node, P1Node) else PLAYER_0

    @property
    def nodes(self) -> Tuple[Node, ...]:
        return self.p0_nodes + self.p1_nodes

    @property
    def node_count(self) -> int:
        return len(self.p0_nodes) + len(self.p1_nodes)

    @property
    def edge_count(self) -> int:
        return sum(len(targets) for targets in self.successors.values())

    def is_dead_end(self, node: Node) -> bool:
        return not self.successors[node]

    def predecessors(self) -> Dict[Node, list]:
        incoming: Dict[Node, list] = {node: [] for node in self.nodes}
        for node, targets in self.successors.items():
            for target in targets:
                incoming[target].append(node)
        return incoming


@dataclass(frozen=True)
class SafetySolution:
    """
    Solved safety game.

    win0: nodes from which Player 0 avoids the dead ends forever
    strategy0: winning Player-0 state -> least move staying in win0
    ranks: nodes outside win0 -> attractor rank (dead ends have rank 0)
    strategy1: losing Player-1 nodes -> successor of strictly smaller rank
    """

    arena: SafetyArena
    win0: FrozenSet[Node]
    strategy0: Mapping[int, ProjectedLetter]
    ranks: Mapping[Node, int] = field(default_factory=dict)
    strategy1: Mapping[P1Node, int] = field(default_factory=dict)

    @property
    def deviator(self) -> int:
        return self.arena.deviator

    def is_winning_state(self, state: int) -> bool:
        return state in self.win0
