"""
Reductions App Models

- FlatDfa: classical DFA over a flat alphabet of symbol names
- HatDfa: a FlatDfa extended with a kill symbol and two fresh sinks, so
  that every copy of the kill symbol settles acceptance at once
"""

from dataclasses import dataclass
from typing import FrozenSet, List, Mapping, Sequence, Tuple


@dataclass(frozen=True)
class FlatDfa:
    alphabet: Tuple[str, ...]
    states: Tuple[str, ...]
    initial: int
    accepting: FrozenSet[int]
    delta: Tuple[Mapping[str, int], ...]

    @property
    def size(self) -> int:
        return len(self.states)

    def step(self, state: int, symbol: str) -> int:
        return self.delta[state][symbol]

    def is_accepting(self, state: int) -> bool:
        return state in self.accepting

    def run(self, word: Sequence[str]) -> List[int]:
        states = [self.initial]
        for symbol in word:
            states.append(self.step(states[-1], symbol))
        return states

    def accepts(self, word: Sequence[str]) -> bool:
        return self.is_accepting(self.run(word)[-1])


@dataclass(frozen=True)
class HatDfa(FlatDfa):
    kill_symbol: str
    accept_state: int
    reject_state: int
