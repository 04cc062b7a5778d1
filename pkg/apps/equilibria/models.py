"""
Equilibria App Models

- AwState: product state of A_W / A'_W, one goal state per agent plus the
  set of agents in W whose goal has not been reached yet
- Verdict: answer to one W-query
"""

from dataclasses import dataclass
from typing import FrozenSet, NamedTuple, Optional, Tuple

from apps.games.models import Lasso


class AwState(NamedTuple):
    components: Tuple[int, ...]
    pending: FrozenSet[int]

    @property
    def accepting(self) -> bool:
        return not self.pending


@dataclass(frozen=True)
class Verdict:
    winning_set: FrozenSet[int]
    exists: bool
    witness: Optional[Lasso] = None
    explored: int = 0
    elapsed: float = 0.0

    def __post_init__(self):
        if self.exists != (self.witness is not None):
            raise ValueError("A verdict carries a witness exactly when an equilibrium exists")
