"""
Hypothesis strategies for flat DFAs, seeded like apps.games.strategies.
"""

from hypothesis import strategies as st

from apps.games.strategies import seeded

from .factories import FlatDfaFactory


@st.composite
def flat_dfa_tuples(draw, max_count: int = 3, max_states: int = 4):
    """One to `max_count` random DFAs over a shared one- or two-letter alphabet."""
    symbols = draw(st.sampled_from((('a',), ('a', 'b'))))
    count = draw(st.integers(min_value=1, max_value=max_count))
    return draw(seeded(FlatDfaFactory.build_batch, count, symbols=symbols, max_states=max_states))
