from fractions import Fraction

from hypothesis import strategies as st

from contractkit.core import build_instance
from contractkit.families import gen_random_spanning


@st.composite
def instances(draw, n_min=1, n_max=4, m_min=2, m_max=4, free_action=True):
    """Small instances with integer-weight distributions and half-integer costs."""
    m = draw(st.integers(m_min, m_max))
    n = draw(st.integers(n_min, n_max))
    outcomes = draw(st.lists(st.integers(0, 20), min_size=m, max_size=m, unique=True))
    actions = []
    for i in range(n):
        weights = draw(st.lists(st.integers(0, 6), min_size=m, max_size=m).filter(lambda w: sum(w) > 0))
        total = sum(weights)
        probs = [Fraction(w, total) for w in weights]
        cost = Fraction(0) if (free_action and i == 0) else Fraction(draw(st.integers(0, 16)), 2)
        actions.append((probs, cost))
    return build_instance(outcomes, actions, require_support=False)


@st.composite
def spanning(draw, n_max=5, m_max=5):
    n = draw(st.integers(2, n_max))
    m = draw(st.integers(2, m_max))
    return gen_random_spanning(n, m, draw(st.integers(0, 10 ** 6)))


rationals = st.builds(Fraction, st.integers(0, 40), st.integers(1, 8))
