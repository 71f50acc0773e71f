import math

import pytest
from hypothesis import given, strategies as st

from multiport_herald.fock import (FockState, InvalidArgumentError, ModeIndex, ModeLayout,
                                   StateVector, inner_product, product_input, vacuum, zero_state)


def test_mode_index_round_trip():
    layout = ModeLayout(4, 2)
    assert layout.mode_count == 8
    assert layout.index(2, 1) == 5
    assert layout.mode(5) == ModeIndex(2, 1)
    with pytest.raises(InvalidArgumentError):
        layout.index(4, 0)
    with pytest.raises(InvalidArgumentError):
        ModeIndex(0, 2).flatten(2)


def test_fock_state_rejects_negative():
    with pytest.raises(InvalidArgumentError):
        FockState([1, -1])
    assert FockState([2, 0, 1]).total_photons == 3
    assert FockState([2, 0, 1]).ket() == "|2,0,1⟩"


def test_vacuum_and_zero():
    v = vacuum(3)
    assert v[(0, 0, 0)] == 1
    assert v.norm() == 1.0
    assert zero_state(2).is_zero()
    with pytest.raises(InvalidArgumentError):
        vacuum(0)


def test_prune_and_mode_checks():
    s = StateVector(2, {(1, 0): 1.0, (0, 1): 1e-13})
    assert len(s) == 1
    with pytest.raises(InvalidArgumentError):
        StateVector(2, {(1, 0, 0): 1.0})
    with pytest.raises(InvalidArgumentError):
        StateVector(1, {(1,): float("nan")})


def test_items_are_lexicographic():
    s = StateVector(3, {(1, 0, 0): 1, (0, 0, 1): 2, (0, 1, 0): 3})
    assert [tuple(k) for k, _ in s.items()] == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]


def test_inner_product_is_antilinear_in_first_slot():
    a = StateVector(2, {(1, 0): 1j})
    b = StateVector(2, {(1, 0): 1.0})
    assert inner_product(a, b) == -1j
    with pytest.raises(InvalidArgumentError):
        inner_product(a, product_input([1, 0, 0]))


def test_tensor_appends_modes():
    t = product_input([1, 0]).tensor(StateVector(1, {(2,): 0.5}))
    assert t.mode_count == 3 and t[(1, 0, 2)] == 0.5


def test_text_format_frozen():
    s = StateVector(2, {(1, 1): -1 / math.sqrt(3), (2, 0): complex(0.5, 1e-17)})
    assert s.to_text() == "|1,1⟩ : -0.57735026919,0\n|2,0⟩ : 0.5,0"


amps = st.complex_numbers(min_magnitude=1e-3, max_magnitude=10, allow_nan=False, allow_infinity=False)
keys = st.tuples(*[st.integers(0, 3)] * 3)


@given(st.dictionaries(keys, amps, min_size=1, max_size=6))
def test_text_round_trip(terms):
    s = StateVector(3, terms)
    back = StateVector.from_text(s.to_text())
    assert back.allclose(s, tol=1e-9 * max(1.0, s.norm()))


@given(st.dictionaries(keys, amps, min_size=1, max_size=6))
def test_normalized_has_unit_norm(terms):
    assert abs(StateVector(3, terms).normalized().norm() - 1) < 1e-12
