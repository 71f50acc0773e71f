import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multiport_herald.evolution import (amplitude_permanent, apply, apply_on_modes, output_space,
                                        ryser_permanent, subtract_photon, transition_amplitude)
from multiport_herald.fock import InvalidArgumentError, StateVector, product_input
from multiport_herald.interferometer import dft_unitary, embed, random_unitary

S2, S3 = math.sqrt(2), math.sqrt(3)


def naive_permanent(a):
    from itertools import permutations
    n = a.shape[0]
    return sum(math.prod(a[i, p[i]] for i in range(n)) for p in permutations(range(n)))


def test_ryser_matches_definition(rng):
    for n in range(1, 6):
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        assert abs(ryser_permanent(a) - naive_permanent(a)) < 1e-10
    assert ryser_permanent(np.zeros((0, 0))) == 1


def test_ryser_small_frozen():
    assert ryser_permanent(np.array([[1, 2], [3, 4]])) == 10
    assert ryser_permanent(np.ones((3, 3))) == 6


def test_hong_ou_mandel_dip():
    out = apply(dft_unitary(2), product_input([1, 1]))
    assert abs(out[(1, 1)]) < 1e-15
    assert abs(out[(2, 0)] - 1 / S2) < 1e-15
    assert abs(out[(0, 2)] + 1 / S2) < 1e-15


def test_tritter_output_frozen():
    out = apply(dft_unitary(3), product_input([1, 1, 1]))
    assert len(out) == 4
    for k in [(3, 0, 0), (0, 3, 0), (0, 0, 3)]:
        assert abs(out[k] - S2 / 3) < 1e-12
    assert abs(out[(1, 1, 1)] + 1 / S3) < 1e-12


def test_quitter_suppressed_terms():
    out = apply(dft_unitary(4), product_input([1, 1, 1, 1]))
    assert len(out) == 10
    assert abs(out[(0, 2, 0, 2)] - 0.25) < 1e-12
    assert (1, 1, 1, 1) not in out


def test_subtraction_frozen():
    sub3, p3 = subtract_photon(apply(dft_unitary(3), product_input([1, 1, 1])), 0)
    assert abs(p3 - 5 / 9) < 1e-12
    assert abs(sub3[(2, 0, 0)] - S2 / S3) < 1e-12
    assert abs(sub3[(0, 1, 1)] + 1 / S3) < 1e-12
    sub4, p4 = subtract_photon(apply(dft_unitary(4), product_input([1, 1, 1, 1])), 0)
    assert abs(p4 - 17 / 32) < 1e-12
    assert abs(sub4[(3, 0, 0, 0)] - S3 / (2 * S2)) < 1e-12
    assert abs(sub4[(1, 1, 0, 1)] + 0.5) < 1e-12
    assert len(sub4) == 5


def test_subtraction_on_empty_mode():
    state, prob = subtract_photon(product_input([0, 2]), 0)
    assert prob == 0.0 and state.is_zero()
    with pytest.raises(InvalidArgumentError):
        subtract_photon(product_input([0, 2]), 2)


def test_apply_dimension_mismatch():
    with pytest.raises(InvalidArgumentError):
        apply(dft_unitary(3), product_input([1, 1]))


def test_apply_on_modes_matches_embed(rng):
    u = random_unitary(2, rng)
    psi = StateVector(4, {(1, 0, 2, 1): 0.6, (0, 1, 1, 2): 0.8j})
    assert apply_on_modes(u, [3, 1], psi).allclose(apply(embed(u, [3, 1], 4), psi), 1e-12)


def test_output_space_lexicographic():
    space = output_space(3, 2)
    assert space == sorted(space)
    assert len(space) == math.comb(4, 2)


def test_permanent_photon_mismatch_is_zero():
    assert amplitude_permanent(dft_unitary(2), (1, 0), (1, 1)) == 0


def test_transition_amplitude_large_instance():
    # 12 photons over 6 modes; both routes agree on one amplitude
    u = dft_unitary(6)
    inp, out = (2, 2, 2, 2, 2, 2), (4, 0, 2, 0, 6, 0)
    assert abs(transition_amplitude(u, inp, out) - amplitude_permanent(u, inp, out)) < 1e-9


occupations = st.lists(st.integers(0, 2), min_size=2, max_size=4).filter(lambda o: 0 < sum(o) <= 4)


@settings(max_examples=60, deadline=None)
@given(occupations, st.integers(0, 2 ** 32 - 1))
def test_expansion_matches_permanent_oracle(occ, seed):
    u = random_unitary(len(occ), np.random.default_rng(seed))
    out = apply(u, product_input(occ))
    for sigma in output_space(len(occ), sum(occ)):
        assert abs(out[sigma] - amplitude_permanent(u, occ, sigma)) < 1e-9
        assert abs(out[sigma] - transition_amplitude(u, occ, sigma)) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2 ** 32 - 1))
def test_norm_and_photon_number_preserved(dim, seed):
    rng = np.random.default_rng(seed)
    terms = {tuple(rng.multinomial(3, [1 / dim] * dim)): complex(*rng.standard_normal(2))
             for _ in range(4)}
    psi = StateVector(dim, terms).normalized()
    out = apply(random_unitary(dim, rng), psi)
    assert abs(out.norm() - 1) < 1e-9
    assert out.photon_numbers() == {3}


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_apply_is_linear(seed):
    rng = np.random.default_rng(seed)
    u = random_unitary(3, rng)
    a, b = product_input([2, 0, 1]), product_input([0, 1, 2])
    ca, cb = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
    lhs = apply(u, a.scaled(ca) + b.scaled(cb))
    rhs = apply(u, a).scaled(ca) + apply(u, b).scaled(cb)
    assert lhs.allclose(rhs, 1e-9)
