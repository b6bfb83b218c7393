"""Shared fixtures and hypothesis strategies."""

import hypothesis.strategies as st
import pytest

from fuzzycell import FuzzyInt, VehicleClass, crisp, make_fuzzy


@st.composite
def fuzzy_ints(draw, min_value=-20, max_value=20, max_size=8):
    """A normal discrete fuzzy integer with bounded support."""
    values = draw(
        st.lists(
            st.integers(min_value, max_value),
            min_size=1,
            max_size=max_size,
            unique=True,
        )
    )
    grades = [
        draw(st.floats(min_value=0.001, max_value=1.0, allow_nan=False))
        for _ in values
    ]
    grades[draw(st.integers(0, len(values) - 1))] = 1.0
    return make_fuzzy(list(zip(values, grades)))


@pytest.fixture
def paper_single_class() -> VehicleClass:
    """Class used by the bundled single-vehicle scenarios."""
    return VehicleClass(
        "car",
        crisp(0),
        make_fuzzy([(4, 0.2), (5, 1.0), (6, 0.2)]),
        make_fuzzy([(0, 0.2), (1, 1.0), (2, 0.2)]),
    )


@pytest.fixture
def queue_class() -> VehicleClass:
    """Class used by the bundled queue scenario."""
    return VehicleClass(
        "car",
        crisp(0),
        make_fuzzy([(2, 0.2), (3, 1.0), (4, 0.2)]),
        make_fuzzy([(0, 0.2), (1, 1.0), (2, 0.2)]),
    )


def fuzzy_from(pairs) -> FuzzyInt:
    return make_fuzzy(pairs)
