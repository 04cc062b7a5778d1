"""
Hypothesis strategies for the property suites.

Games are built by the factory_boy factories after reseeding their random
source from a drawn seed, so every example is reproducible from that seed
and the suites run the same examples on every machine (`derandomize=True`).

Usage:
    @given(game=games(max_states=4))
    @settings(PROPERTY_SETTINGS, max_examples=200)
    def test_something(self, game): ...
"""

from factory import random as factory_random
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from .factories import GameSpecFactory, random_goal
from .models import Lasso

PROPERTY_SETTINGS = settings(
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


@st.composite
def seeded(draw, build, *args, **kwargs):
    """Whatever `build(*args, **kwargs)` returns under a freshly drawn seed."""
    factory_random.reseed_random(draw(seeds))
    return build(*args, **kwargs)


def games(**params):
    """Random games; `params` are GameSpecFactory parameters."""
    return seeded(GameSpecFactory, **params)


def goals(actions, max_states: int = 4):
    return seeded(random_goal, actions, max_states)


def lassos(letters, max_prefix: int = 4, max_cycle: int = 4):
    letter = st.sampled_from(tuple(letters))
    return st.builds(
        Lasso,
        prefix=st.lists(letter, max_size=max_prefix).map(tuple),
        cycle=st.lists(letter, min_size=1, max_size=max_cycle).map(tuple),
    )


def winning_sets(game):
    return st.frozensets(st.sampled_from(game.agents))


@st.composite
def games_with_lassos(draw, **params):
    game = draw(games(**params))
    return game, draw(lassos(game.letters))
