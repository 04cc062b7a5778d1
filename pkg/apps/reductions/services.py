"""
Service layer for the DFA intersection reduction.

Given DFAs A^0..A^{k-1} over a shared alphabet, build_dfaie_game produces a
game in which everybody-wins equilibria exist iff the DFAs accept a common
word. Agent 0 writes the word and closes it with a fresh kill symbol K; the
other agents only have the dummy action '*'. Each goal is the DFA with K
sending accepting states to a fresh accept sink and the rest to a reject
sink.

dfa_intersection_witness answers the same question directly by a
breadth-first search over the product automaton, which makes these games
ground-truth instances for the solvers.
"""

import logging
from collections import deque
from typing import Collection, Dict, List, Mapping, Optional, Sequence, Tuple

from django.conf import settings

from apps.games.exceptions import AlphabetMismatch, SizeBudgetExceeded
from apps.games.models import GameSpec, GoalDfa, Lasso

from .models import FlatDfa, HatDfa
from .serializers import FlatDfaSerializer

logger = logging.getLogger(__name__)

KILL_SYMBOL = 'K'
DUMMY_ACTION = '*'
ACCEPT_STATE = 'accept'
REJECT_STATE = 'reject'


def fresh_name(base: str, taken: Collection[str]) -> str:
    """`base`, primed until it no longer collides with `taken`."""
    name = base
    while name in taken:
        name += "'"
    return name


def validate_flat_dfa(raw: Mapping) -> FlatDfa:
    """
    Raises:
        rest_framework.exceptions.ValidationError: carrying every violation
            found in the document, each with its error code
    """
    serializer = FlatDfaSerializer(data=raw)
    serializer.is_valid(raise_exception=True)
    return serializer.save()


def shared_alphabet(dfas: Sequence[FlatDfa]) -> Tuple[str, ...]:
    """
    The common alphabet, in the first DFA's order.

    Raises:
        AlphabetMismatch: the DFAs do not read the same symbols
    """
    if not dfas:
        raise ValueError("At least one DFA is required")
    alphabet = dfas[0].alphabet
    for index, dfa in enumerate(dfas[1:], start=1):
        if set(dfa.alphabet) != set(alphabet):
            raise AlphabetMismatch(
                f"DFA {index} reads {sorted(dfa.alphabet)}, DFA 0 reads {sorted(alphabet)}"
            )
    return alphabet


def hat_transform(dfa: FlatDfa, kill_symbol: Optional[str] = None) -> HatDfa:
    """
    Add the kill symbol and the accept/reject sinks.

    On the kill symbol accepting states move to accept and all other
    states to reject; both sinks loop on every symbol. Only accept is
    accepting, and the original transitions are kept.
    """
    kill_symbol = kill_symbol or fresh_name(KILL_SYMBOL, dfa.alphabet)
    accept_name = fresh_name(ACCEPT_STATE, dfa.states)
    reject_name = fresh_name(REJECT_STATE, dfa.states + (accept_name,))
    accept, reject = dfa.size, dfa.size + 1
    alphabet = dfa.alphabet + (kill_symbol,)

    delta = [
        {**row, kill_symbol: accept if dfa.is_accepting(q) else reject}
        for q, row in enumerate(dfa.delta)
    ]
    delta.append({symbol: accept for symbol in alphabet})
    delta.append({symbol: reject for symbol in alphabet})

    return HatDfa(
        alphabet=alphabet,
        states=dfa.states + (accept_name, reject_name),
        initial=dfa.initial,
        accepting=frozenset({accept}),
        delta=tuple(delta),
        kill_symbol=kill_symbol,
        accept_state=accept,
        reject_state=reject,
    )


def build_dfaie_game(dfas: Sequence[FlatDfa]) -> GameSpec:
    """
    Game whose everybody-wins equilibria witness a common word of `dfas`.

    Agent 0 plays the shared alphabet plus K (last); agents 1..k-1 play
    '*'. The joint alphabet is therefore a copy of the hat alphabet.

    Raises:
        AlphabetMismatch: the DFAs do not read the same symbols
    """
    alphabet = shared_alphabet(dfas)
    kill_symbol = fresh_name(KILL_SYMBOL, alphabet)
    dummy = fresh_name(DUMMY_ACTION, alphabet + (kill_symbol,))
    actions = (alphabet + (kill_symbol,),) + tuple((dummy,) for _ in dfas[1:])

    letters = [(a,) + (0,) * (len(dfas) - 1) for a in range(len(actions[0]))]
    goals = []
    for dfa in dfas:
        hat = hat_transform(dfa, kill_symbol)
        goals.append(GoalDfa(
            states=hat.states,
            initial=hat.initial,
            accepting=hat.accepting,
            delta=tuple(
                {letter: hat.step(q, actions[0][letter[0]]) for letter in letters}
                for q in range(hat.size)
            ),
        ))

    game = GameSpec(actions=actions, goals=tuple(goals))
    logger.info(
        f"Reduced {len(dfas)} DFAs over {len(alphabet)} symbols to a game with "
        f"{sum(goal.size for goal in goals)} goal states"
    )
    return game


def dfa_intersection_witness(
    dfas: Sequence[FlatDfa],
    product_budget: Optional[int] = None,
) -> Optional[Tuple[str, ...]]:
    """
    Shortest common word of `dfas` (least in alphabet order among the
    shortest), or None when the intersection is empty.

    Raises:
        AlphabetMismatch: the DFAs do not read the same symbols
        SizeBudgetExceeded: the product search outgrew the budget
    """
    alphabet = shared_alphabet(dfas)
    budget = product_budget if product_budget is not None else settings.IBG_PRODUCT_BUDGET
    start = tuple(dfa.initial for dfa in dfas)
    parent: Dict[Tuple[int, ...], Optional[Tuple[Tuple[int, ...], str]]] = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if all(dfa.is_accepting(q) for dfa, q in zip(dfas, node)):
            word: List[str] = []
            while parent[node] is not None:
                node, symbol = parent[node]
                word.append(symbol)
            word.reverse()
            return tuple(word)
        for symbol in alphabet:
            successor = tuple(dfa.step(q, symbol) for dfa, q in zip(dfas, node))
            if successor in parent:
                continue
            if len(parent) >= budget:
                logger.warning(f"Product search stopped after {len(parent)} states")
                raise SizeBudgetExceeded(f"Product budget of {budget} states exceeded", budget)
            parent[successor] = (node, symbol)
            queue.append(successor)
    return None


def intersection_word_of(game: GameSpec, lasso: Lasso) -> Optional[Tuple[str, ...]]:
    """
    Agent 0's symbols before the first kill symbol of a reduction game trace,
    or None when the trace never plays it.
    """
    kill = len(game.actions[0]) - 1
    word = []
    for letter in lasso.prefix + lasso.cycle:
        if letter[0] == kill:
            return tuple(word)
        word.append(game.actions[0][letter[0]])
    return None


class ReductionService:

    @staticmethod
    def reduce_documents(documents: Sequence[Mapping]) -> GameSpec:
        """
        Validate flat DFA documents and reduce them to a game.

        Raises:
            rest_framework.exceptions.ValidationError: a document is malformed
            AlphabetMismatch: the DFAs do not read the same symbols
        """
        return build_dfaie_game([validate_flat_dfa(document) for document in documents])
