import math
from fractions import Fraction

import pytest

from multiport_herald.evolution import apply, apply_on_modes, subtract_photon
from multiport_herald.fock import StateVector, product_input
from multiport_herald.heralding import Aggregate, DetectionPattern, project
from multiport_herald.interferometer import dft_unitary
from multiport_herald.schemes import (CapacityError, NotApplicableError, SchemeKind, SchemeSpec,
                                      SchemeValidityError, _ghz_correction, block_sectors,
                                      build_and_run, closed_form_probability, detected_photons,
                                      run_connected, verify_heralded_state)

K = SchemeKind


@pytest.mark.parametrize("spec, expected", [
    (SchemeSpec(K.QUDIT_BELL_3SMS, 4), Fraction(32, 2187)),
    (SchemeSpec(K.QUDIT_BELL_3SMS, 2), Fraction(4, 27)),
    (SchemeSpec(K.QUDIT_BELL_2SMS, 3), Fraction(3, 32)),
    (SchemeSpec(K.QUDIT_GHZ_4SMS, 1, subtraction=True), Fraction(1, 4)),
    (SchemeSpec(K.QUDIT_GHZ_4SMS, 3), Fraction(27, 4096)),
    (SchemeSpec(K.QUDIT_BELL_INVERTED, 3), Fraction(2, 27)),
    (SchemeSpec(K.QUDIT_BELL_COMBINED, 3), Fraction(10, 81)),
    (SchemeSpec(K.QUDIT_BELL_COMBINED, 3, subtraction=True), Fraction(2, 3)),
    (SchemeSpec(K.QUDIT_BELL_3SMS, 2, subtraction=True, one_shot=True), Fraction(100, 729)),
    (SchemeSpec(K.QUBIT_BELL_4SMS), Fraction(1, 8)),
    (SchemeSpec(K.QUBIT_GHZ_CHAIN, n_ghz=4), Fraction(1, 128)),
    (SchemeSpec(K.QUBIT_GHZ_CHAIN, n_ghz=3), Fraction(1, 64)),
])
def test_closed_forms_frozen(spec, expected):
    assert closed_form_probability(spec) == expected


def test_closed_form_rejections():
    with pytest.raises(NotApplicableError):
        closed_form_probability(SchemeSpec(K.QUDIT_BELL_COMBINED, 4))
    with pytest.raises(SchemeValidityError):
        closed_form_probability(SchemeSpec(K.QUDIT_BELL_2SMS, 2, subtraction=True))


@pytest.mark.parametrize("spec, error", [
    (SchemeSpec(K.QUDIT_BELL_3SMS, 0), SchemeValidityError),
    (SchemeSpec(K.QUDIT_BELL_3SMS, 7), CapacityError),
    (SchemeSpec(K.QUDIT_GHZ_4SMS, 5), CapacityError),
    (SchemeSpec(K.QUBIT_GHZ_CHAIN, n_ghz=9), CapacityError),
    (SchemeSpec(K.QUBIT_GHZ_CHAIN, n_ghz=1), SchemeValidityError),
    (SchemeSpec(K.QUDIT_BELL_INVERTED, 4), SchemeValidityError),
    (SchemeSpec(K.QUDIT_BELL_3SMS, 3, one_shot=True), SchemeValidityError),
])
def test_build_rejects_invalid(spec, error):
    with pytest.raises(error):
        build_and_run(spec)


def test_capacity_is_a_validity_error():
    assert issubclass(CapacityError, SchemeValidityError)
    assert not issubclass(NotApplicableError, SchemeValidityError)


def test_block_sectors_tritter():
    sectors, occ = block_sectors(3, False, False)
    assert occ == 1.0
    assert {h: round(s.norm() ** 2, 12) for h, s in sectors.items()} == {0: 0.444444444444,
                                                                          1: 0.333333333333,
                                                                          3: 0.222222222222}
    _, occ = block_sectors(3, True, False)
    assert abs(occ - 5 / 9) < 1e-12


def test_ghz_correction_maps_pair_to_single_photons():
    pair = StateVector(2, {(2, 0): 1 / math.sqrt(2), (0, 2): 1 / math.sqrt(2)})
    out = apply(_ghz_correction(), pair)
    assert abs(abs(out[(1, 1)]) - 1) < 1e-12


@pytest.mark.parametrize("d", [2, 3])
def test_bell_branch_structure(d):
    result = build_and_run(SchemeSpec(K.QUDIT_BELL_3SMS, d))
    report = verify_heralded_state(result)
    assert report.passed
    for o in result.outcomes:
        assert len(o.conditional_state) == d
        assert all(abs(m - 1 / math.sqrt(d)) < 1e-9 for m in o.magnitudes)


def test_ghz_d2_branches():
    result = build_and_run(SchemeSpec(K.QUDIT_GHZ_4SMS, 2))
    supports = {tuple(sorted(o.conditional_state.terms)) for o in result.outcomes}
    assert supports == {((0, 0, 0, 1, 1, 1), (1, 1, 1, 0, 0, 0))}


def _global(blocks: int, ports: int, subtract=False, correct=False):
    """Unfactored evolution: every block and the connector act on one big state."""
    total = blocks * ports
    state = product_input([1] * total)
    for b in range(blocks):
        modes = list(range(b * ports, (b + 1) * ports))
        state = apply_on_modes(dft_unitary(ports), modes, state)
    for b in range(blocks):
        if subtract:
            state, _ = subtract_photon(state, b * ports)
        if correct:
            state = apply_on_modes(_ghz_correction(), [b * ports + 1, b * ports + 3], state)
    herald = [b * ports for b in range(blocks)]
    return apply_on_modes(dft_unitary(blocks), herald, state), herald


@pytest.mark.parametrize("spec, blocks, ports, sub, corr", [
    (SchemeSpec(K.QUDIT_BELL_3SMS, 2), 2, 3, False, False),
    (SchemeSpec(K.QUDIT_BELL_3SMS, 3), 3, 3, False, False),
    (SchemeSpec(K.QUDIT_BELL_3SMS, 3, subtraction=True), 3, 3, True, False),
    (SchemeSpec(K.QUDIT_GHZ_4SMS, 2), 2, 4, False, True),
    (SchemeSpec(K.QUDIT_BELL_2SMS, 2), 4, 2, False, False),
])
def test_factored_run_matches_global_evolution(spec, blocks, ports, sub, corr):
    state, herald = _global(blocks, ports, sub, corr)
    pattern = DetectionPattern(aggregate=Aggregate(herald, detected_photons(spec)))
    expected = project(state, pattern)
    result = run_connected(spec)
    assert len(result.outcomes) == len(expected)
    for got, want in zip(result.outcomes, expected):
        assert got.pattern_instance == want.pattern_instance
        assert abs(got.probability - want.probability) < 1e-12
        assert got.conditional_state.allclose(want.conditional_state, 1e-9)


@pytest.mark.parametrize("kind", [K.QUDIT_BELL_3SMS, K.QUDIT_GHZ_4SMS, K.QUDIT_BELL_2SMS])
@pytest.mark.parametrize("d", [2, 3])
def test_wrong_detection_totals_never_verify(kind, d):
    spec = SchemeSpec(kind, d)
    m0 = detected_photons(spec)
    ports = {K.QUDIT_BELL_3SMS: 3, K.QUDIT_GHZ_4SMS: 4, K.QUDIT_BELL_2SMS: 2}[kind]
    blocks = 2 * d if kind == K.QUDIT_BELL_2SMS else d
    for m in range(ports * blocks + 1):
        if m == m0:
            continue
        result = run_connected(spec, m)
        report = verify_heralded_state(result)
        assert len(report.failures) == len(result.outcomes), m


def test_inverted_bell_breaks_down_at_d4():
    report = verify_heralded_state(run_connected(SchemeSpec(K.QUDIT_BELL_INVERTED, 4)))
    assert not report.passed
    assert report.failures[0]["unexpected_term"] is not None


def test_four_photon_noon_from_bell_setup():
    # project the residual modes on the Bell state instead of detecting the 2SMS
    state, herald = _global(2, 3)
    for sign in (1, -1):
        bell = {(1, 1, 0, 0): 1 / math.sqrt(2), (0, 0, 1, 1): sign / math.sqrt(2)}
        left: dict = {}
        for key, amp in state.terms.items():
            rest = (key[1], key[2], key[4], key[5])
            if rest in bell:
                h = (key[0], key[3])
                left[h] = left.get(h, 0) + bell[rest] * amp
        noon = StateVector(2, left).normalized()
        if set(noon.terms) == {(4, 0), (0, 4)}:
            assert all(abs(abs(a) - 1 / math.sqrt(2)) < 1e-9 for a in noon.terms.values())
            break
    else:
        pytest.fail("no Bell projection leaves a N00N state")


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_chain_probabilities(n):
    result = build_and_run(SchemeSpec(K.QUBIT_GHZ_CHAIN, n_ghz=n))
    assert abs(result.total_probability - result.closed_form) < 1e-9
    assert verify_heralded_state(result).passed


def test_odd_chain_termination_at_either_end():
    first = build_and_run(SchemeSpec(K.QUBIT_GHZ_CHAIN, n_ghz=3, odd_termination="first"))
    last = build_and_run(SchemeSpec(K.QUBIT_GHZ_CHAIN, n_ghz=3))
    assert abs(first.total_probability - last.total_probability) < 1e-12
    assert verify_heralded_state(first).passed


def test_combined_reports_both_parts():
    result = build_and_run(SchemeSpec(K.QUDIT_BELL_COMBINED, 3))
    assert set(result.targets) == {"QuditBell3SMS", "QuditBellInverted"}
    assert abs(result.total_probability - 10 / 81) < 1e-12


def test_sampled_route_for_large_connector():
    result = run_connected(SchemeSpec(K.QUDIT_BELL_2SMS, 5), samples=3, seed=1)
    assert result.method == "sector-marginal"
    assert len(result.outcomes) == 3
    assert abs(result.total_probability - 5 / 512) < 1e-9
    assert verify_heralded_state(result).passed


def test_sampled_and_enumerated_totals_agree():
    spec = SchemeSpec(K.QUDIT_BELL_3SMS, 3)
    from multiport_herald import schemes
    enumerated = run_connected(spec)
    old = schemes.ENUMERATION_LIMIT
    schemes.ENUMERATION_LIMIT = 0
    try:
        marginal = run_connected(spec, samples=5)
    finally:
        schemes.ENUMERATION_LIMIT = old
    assert marginal.method == "sector-marginal"
    assert abs(marginal.total_probability - enumerated.total_probability) < 1e-12
    by_instance = {tuple(o.pattern_instance.values()): o for o in enumerated.outcomes}
    for o in marginal.outcomes:
        ref = by_instance[tuple(o.pattern_instance.values())]
        assert abs(o.probability - ref.probability) < 1e-12
