"""
factory_boy factories for random games, goal automata and lassos.

All randomness is drawn from `factory.random.randgen`, so a test that calls
`factory.random.reseed_random(seed)` first gets the same instances every run.

Usage:
    factory.random.reseed_random('equilibria')
    game = GameSpecFactory(agent_count=3, max_actions=2, max_states=4)
    lasso = LassoFactory(letters=game.letters)
"""

import itertools
import json
from pathlib import Path

import factory
from factory import random as factory_random

from .models import GameSpec, GoalDfa, Lasso


def _rng():
    return factory_random.randgen


def random_goal(actions, max_states: int, min_states: int = 1) -> GoalDfa:
    """A total goal DFA over the joint alphabet of `actions` with a non-accepting initial state."""
    rng = _rng()
    size = rng.randint(min_states, max_states)
    letters = list(itertools.product(*(range(len(names)) for names in actions)))
    accepting = frozenset(q for q in range(1, size) if rng.random() < 0.4)
    delta = tuple(
        {letter: rng.randrange(size) for letter in letters}
        for _ in range(size)
    )
    return GoalDfa(
        states=tuple(f"q{q}" for q in range(size)),
        initial=0,
        accepting=accepting,
        delta=delta,
    )


def random_actions(agent_count: int, max_actions: int, min_actions: int = 1):
    rng = _rng()
    return tuple(
        tuple(f"{chr(ord('a') + agent)}{n}" for n in range(rng.randint(min_actions, max_actions)))
        for agent in range(agent_count)
    )


class GameSpecFactory(factory.Factory):
    """Random iterated Boolean game; sizes are upper bounds except `agent_count`."""

    class Meta:
        model = GameSpec

    class Params:
        agent_count = factory.LazyFunction(lambda: _rng().randint(1, 3))
        max_actions = 2
        min_actions = 1
        max_states = 4
        min_states = 1

    actions = factory.LazyAttribute(
        lambda o: random_actions(o.agent_count, o.max_actions, o.min_actions)
    )
    goals = factory.LazyAttribute(
        lambda o: tuple(
            random_goal(o.actions, o.max_states, o.min_states) for _ in range(o.agent_count)
        )
    )


class LassoFactory(factory.Factory):
    """Random ultimately periodic word over `letters`."""

    class Meta:
        model = Lasso

    class Params:
        letters = ((0,),)
        max_prefix = 4
        max_cycle = 4

    prefix = factory.LazyAttribute(
        lambda o: tuple(_rng().choice(o.letters) for _ in range(_rng().randint(0, o.max_prefix)))
    )
    cycle = factory.LazyAttribute(
        lambda o: tuple(_rng().choice(o.letters) for _ in range(_rng().randint(1, o.max_cycle)))
    )


FIXTURE_DIR = Path(__file__).resolve().parent / 'fixtures'


def fixture_game(name: str) -> GameSpec:
    """Load one of the canonical fixtures ('pennies', 'coop')."""
    from .services import validate_game

    with open(FIXTURE_DIR / f"{name}.json") as handle:
        return validate_game(json.load(handle))
