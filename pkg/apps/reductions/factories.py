"""
factory_boy factory for random flat DFAs.

Shares the seeding convention of apps.games.factories:
    factory.random.reseed_random('reductions')
    dfas = FlatDfaFactory.build_batch(3, symbols=('a', 'b'))
"""

import factory
from factory import random as factory_random

from .models import FlatDfa


def _rng():
    return factory_random.randgen


class FlatDfaFactory(factory.Factory):
    """Random total DFA; the initial state may accept the empty word."""

    class Meta:
        model = FlatDfa

    class Params:
        symbols = ('a', 'b')
        max_states = 4
        size = factory.LazyAttribute(lambda o: _rng().randint(1, o.max_states))

    alphabet = factory.SelfAttribute('symbols')
    states = factory.LazyAttribute(lambda o: tuple(f"p{q}" for q in range(o.size)))
    initial = 0
    accepting = factory.LazyAttribute(
        lambda o: frozenset(q for q in range(o.size) if _rng().random() < 0.4)
    )
    delta = factory.LazyAttribute(
        lambda o: tuple({symbol: _rng().randrange(o.size) for symbol in o.symbols} for _ in range(o.size))
    )
