"""
Synthesis App Models

- ProfileTransducer: finite-state strategy profile. Every mode outputs one
  joint letter (the actions all agents play next) and moves on the joint
  letter actually observed.
- ProfileReport: outcome of checking a transducer against the W-NE
  conditions, with counterexamples.
"""

from dataclasses import dataclass, field
from typing import FrozenSet, List, Mapping, Optional, Tuple

from apps.games.models import Lasso, Letter


@dataclass(frozen=True)
class ProfileTransducer:
    outputs: Tuple[Letter, ...]
    transitions: Tuple[Mapping[Letter, int], ...]
    labels: Tuple[str, ...]
    initial: int = 0

    @property
    def size(self) -> int:
        return len(self.outputs)

    def output(self, mode: int) -> Letter:
        return self.outputs[mode]

    def step(self, mode: int, observed: Letter) -> int:
        return self.transitions[mode][observed]


@dataclass(frozen=True)
class DeviationCheck:
    agent: int
    passed: bool
    # observed letters of a deviation that satisfies the agent's goal
    counterexample: Optional[Tuple[Letter, ...]] = None
    explored: int = 0


@dataclass(frozen=True)
class ProfileReport:
    winning_set: FrozenSet[int]
    primary_trace: Lasso
    primary_winners: FrozenSet[int]
    deviations: List[DeviationCheck] = field(default_factory=list)

    @property
    def primary_passed(self) -> bool:
        return self.primary_winners == self.winning_set

    @property
    def passed(self) -> bool:
        return self.primary_passed and all(check.passed for check in self.deviations)
