"""
Games App Models

Immutable domain types of an iterated Boolean game (iBG). Nothing here is
persisted: these are plain value objects shared read-only by every solver.

Key Types:
- GameSpec: agents, their action alphabets and their goal DFAs
- GoalDfa: complete deterministic automaton over joint letters
- ProjectedLetter: a joint letter with one agent's component removed
- Lasso: ultimately periodic word prefix . cycle^omega

Letters are index tuples: component i is the position of agent i's action in
its action list. Tuple order is therefore the canonical letter order used for
every tie-break (witness lassos, safety strategies, sink outputs).
"""

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, Iterator, List, Mapping, NamedTuple, Sequence, Tuple

Letter = Tuple[int, ...]


class ProjectedLetter(NamedTuple):
    """A joint letter with agent `agent`'s component projected out."""
    agent: int
    components: Tuple[int, ...]


@dataclass(frozen=True)
class GoalDfa:
    """
    Goal automaton of one agent over the joint alphabet.

    States are indices into `states`; `delta[q]` maps every joint letter to
    the successor of q, so the transition function is total by construction.
    """

    states: Tuple[str, ...]
    initial: int
    accepting: FrozenSet[int]
    delta: Tuple[Mapping[Letter, int], ...]

    @property
    def size(self) -> int:
        return len(self.states)

    def step(self, state: int, letter: Letter) -> int:
        return self.delta[state][letter]

    def is_accepting(self, state: int) -> bool:
        return state in self.accepting

    def state_name(self, state: int) -> str:
        return self.states[state]

    def state_index(self, name: str) -> int:
        return self.states.index(name)


@dataclass(frozen=True)
class GameSpec:
    """
    An iterated Boolean game.

    Agents are 0..k-1; agent i picks from `actions[i]` and wants its goal
    `goals[i]` satisfied by some finite prefix of the joint trace.
    """

    actions: Tuple[Tuple[str, ...], ...]
    goals: Tuple[GoalDfa, ...]

    # ========== SHAPE ==========
    @property
    def k(self) -> int:
        return len(self.actions)

    @property
    def agents(self) -> Tuple[int, ...]:
        return tuple(range(self.k))

    @cached_property
    def letters(self) -> Tuple[Letter, ...]:
        """All joint letters in canonical order."""
        return tuple(itertools.product(*(range(len(names)) for names in self.actions)))

    def has_choice(self, agent: int) -> bool:
        """Agents with a single action cannot deviate."""
        return len(self.actions[agent]) >= 2

    @cached_property
    def _projection_groups(self) -> Tuple[Dict[ProjectedLetter, Tuple[Letter, ...]], ...]:
        groups = []
        for j in self.agents:
            by_projection: Dict[ProjectedLetter, List[Letter]] = {}
            for letter in self.letters:
                key = ProjectedLetter(j, letter[:j] + letter[j + 1:])
                by_projection.setdefault(key, []).append(letter)
            groups.append({key: tuple(members) for key, members in by_projection.items()})
        return tuple(groups)

    def letters_by_projection(self, agent: int) -> Dict[ProjectedLetter, Tuple[Letter, ...]]:
        """
        Group the joint alphabet by `project_out(., agent)`.

        Keys come out in canonical order and each group lists its letters in
        canonical order.
        """
        return self._projection_groups[agent]

    # ========== NAMES ==========
    def format_letter(self, letter: Sequence[int]) -> Tuple[str, ...]:
        return tuple(self.actions[i][a] for i, a in enumerate(letter))

    def format_projection(self, projected: ProjectedLetter) -> Tuple[str, ...]:
        owners = [i for i in self.agents if i != projected.agent]
        return tuple(self.actions[i][a] for i, a in zip(owners, projected.components))

    def parse_letter(self, names: Sequence[str]) -> Letter:
        if len(names) != self.k:
            raise ValueError(f"Letter {list(names)} must have one action per agent ({self.k})")
        try:
            return tuple(self.actions[i].index(name) for i, name in enumerate(names))
        except ValueError:
            raise ValueError(f"Letter {list(names)} uses an unknown action")

    def least_letter(self) -> Letter:
        return self.letters[0]


@dataclass(frozen=True)
class Lasso:
    """Ultimately periodic word prefix . cycle^omega over joint letters."""

    prefix: Tuple[Letter, ...]
    cycle: Tuple[Letter, ...]

    def __post_init__(self):
        if not self.cycle:
            raise ValueError("A lasso needs a nonempty cycle")

    def __len__(self) -> int:
        return len(self.prefix) + len(self.cycle)

    def letter_at(self, position: int) -> Letter:
        if position < len(self.prefix):
            return self.prefix[position]
        return self.cycle[(position - len(self.prefix)) % len(self.cycle)]

    def next_position(self, position: int) -> int:
        """Successor of a position in the finite prefix+cycle representation."""
        position += 1
        if position == len(self):
            return len(self.prefix)
        return position

    def letters(self) -> Iterator[Letter]:
        """The infinite word, lazily."""
        yield from self.prefix
        while True:
            yield from self.cycle
