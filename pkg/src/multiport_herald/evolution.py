"""Evolution of Fock-space states through linear-optical unitaries.

Two independent routes compute the same transition amplitudes:

* :func:`apply` expands ``prod_k (sum_l U[k, l] b_l^dagger)^{n_k}`` term by
  term and merges equal output monomials;
* :func:`amplitude_permanent` evaluates the permanent of the row/column
  repeated submatrix with Ryser's formula in Gray-code order.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Sequence

import numpy as np

from .fock import PRUNE_THRESHOLD, FockState, InvalidArgumentError, StateVector
from .interferometer import Unitary

_INT64_LIMIT = 2 ** 62


@lru_cache(maxsize=None)
def _sqrt_factorial(n: int) -> float:
    return math.sqrt(math.factorial(n))


def _expand_numpy(matrix: np.ndarray, occ: Sequence[int], base: int):
    """Output monomials of one input Fock term as (encoded keys, coefficients).

    Keys encode occupations in radix ``base``; coefficients still lack the
    bosonic sqrt-factorial factors.
    """
    dim = matrix.shape[0]
    powers = base ** np.arange(dim, dtype=np.int64)
    keys = np.zeros(1, dtype=np.int64)
    coeffs = np.ones(1, dtype=complex)
    for k, n_k in enumerate(occ):
        if n_k == 0:
            continue
        row = matrix[k]
        cols = np.flatnonzero(np.abs(row) > 0.0)
        step_keys = powers[cols]
        step_vals = row[cols]
        for _ in range(n_k):
            keys = (keys[:, None] + step_keys[None, :]).ravel()
            coeffs = (coeffs[:, None] * step_vals[None, :]).ravel()
            if len(cols) > 1:
                keys, coeffs = _merge(keys, coeffs)
    return keys, coeffs


def _merge(keys: np.ndarray, coeffs: np.ndarray):
    uniq, inverse = np.unique(keys, return_inverse=True)
    re = np.bincount(inverse, weights=coeffs.real, minlength=len(uniq))
    im = np.bincount(inverse, weights=coeffs.imag, minlength=len(uniq))
    return uniq, re + 1j * im


def _decode(keys: np.ndarray, dim: int, base: int) -> np.ndarray:
    powers = base ** np.arange(dim, dtype=np.int64)
    return (keys[:, None] // powers[None, :]) % base


def _expand_python(matrix: np.ndarray, occ: Sequence[int]) -> dict[tuple, complex]:
    dim = matrix.shape[0]
    poly: dict[tuple, complex] = {(0,) * dim: 1.0 + 0j}
    for k, n_k in enumerate(occ):
        if n_k == 0:
            continue
        row = matrix[k]
        cols = [l for l in range(dim) if row[l] != 0]
        for _ in range(n_k):
            nxt: dict[tuple, complex] = {}
            for key, c in poly.items():
                for l in cols:
                    out = key[:l] + (key[l] + 1,) + key[l + 1:]
                    nxt[out] = nxt.get(out, 0j) + c * row[l]
            poly = nxt
    return poly


def _evolve_terms(matrix: np.ndarray, terms: dict) -> dict[tuple, complex]:
    """Linear evolution of a sparse term map, without pruning."""
    dim = matrix.shape[0]
    if not terms:
        return {}
    n_max = max(sum(k) for k in terms)
    base = n_max + 1
    if base ** dim < _INT64_LIMIT:
        all_keys, all_vals = [], []
        for occ, amp in terms.items():
            keys, coeffs = _expand_numpy(matrix, occ, base)
            in_norm = math.prod(_sqrt_factorial(n) for n in occ)
            all_keys.append(keys)
            all_vals.append(coeffs * (amp / in_norm))
        keys, vals = _merge(np.concatenate(all_keys), np.concatenate(all_vals))
        occs = _decode(keys, dim, base)
        table = np.array([_sqrt_factorial(n) for n in range(base)])
        vals = vals * table[occs].prod(axis=1)
        return dict(zip(map(tuple, occs.tolist()), vals.tolist()))
    out: dict[tuple, complex] = {}
    for occ, amp in terms.items():
        in_norm = math.prod(_sqrt_factorial(n) for n in occ)
        for key, c in _expand_python(matrix, occ).items():
            out_norm = math.prod(_sqrt_factorial(n) for n in key)
            out[key] = out.get(key, 0j) + c * amp * out_norm / in_norm
    return out


def _pruned(terms: dict, threshold: float = PRUNE_THRESHOLD) -> dict:
    return {k: v for k, v in terms.items() if abs(v) >= threshold}


def apply(u: Unitary, state: StateVector) -> StateVector:
    """Evolve ``state`` through ``u``.

    Linear in the state, so the output norm equals the input norm.
    """
    if u.dim != state.mode_count:
        raise InvalidArgumentError(f"unitary dim {u.dim} != mode count {state.mode_count}")
    out = _evolve_terms(u.matrix, dict(state.terms))
    return StateVector._trusted(state.mode_count, _pruned(out))


def apply_on_modes(u: Unitary, modes: Sequence[int], state: StateVector) -> StateVector:
    """Apply ``u`` to the listed modes of ``state`` and leave the rest alone.

    Same result as ``apply(embed(u, modes, M), state)``, but each distinct
    occupation of the target modes is expanded only once.
    """
    modes = [int(m) for m in modes]
    if len(modes) != u.dim or len(set(modes)) != len(modes):
        raise InvalidArgumentError(f"bad target modes {modes} for a {u.dim}-mode unitary")
    if any(m < 0 or m >= state.mode_count for m in modes):
        raise InvalidArgumentError(f"target modes {modes} outside the state")
    cache: dict[tuple, dict] = {}
    out: dict[tuple, complex] = {}
    for key, amp in state.terms.items():
        sub = tuple(key[m] for m in modes)
        if sub not in cache:
            cache[sub] = _pruned(_evolve_terms(u.matrix, {sub: 1.0}), 0.0)
        base = list(key)
        for new_sub, c in cache[sub].items():
            for m, n in zip(modes, new_sub):
                base[m] = n
            nk = tuple(base)
            out[nk] = out.get(nk, 0j) + c * amp
    return StateVector._trusted(state.mode_count, _pruned(out))


def ryser_permanent(a: np.ndarray) -> complex:
    """Permanent of a square matrix, Ryser's formula with Gray-code subset order."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n):
        raise InvalidArgumentError("permanent needs a square matrix")
    if n == 0:
        return 1.0 + 0j
    row_sums = np.zeros(n, dtype=complex)
    total = 0j
    in_subset = [False] * n
    size = 0
    for step in range(1, 2 ** n):
        # the bit that flips between consecutive Gray codes
        j = (step & -step).bit_length() - 1
        if in_subset[j]:
            row_sums -= a[:, j]
            size -= 1
        else:
            row_sums += a[:, j]
            size += 1
        in_subset[j] = not in_subset[j]
        term = np.prod(row_sums)
        total += -term if size % 2 else term
    return total * (-1) ** n


def amplitude_permanent(u: Unitary, input_state: Sequence[int], output_state: Sequence[int]) -> complex:
    """``⟨output| U |input⟩`` from the permanent of the repeated submatrix."""
    inp, outp = FockState(input_state), FockState(output_state)
    if len(inp) != u.dim or len(outp) != u.dim:
        raise InvalidArgumentError("Fock states must match the unitary dimension")
    if inp.total_photons != outp.total_photons:
        return 0j
    rows = [k for k, n in enumerate(inp) for _ in range(n)]
    cols = [l for l, n in enumerate(outp) for _ in range(n)]
    sub = u.matrix[np.ix_(rows, cols)]
    norm = math.prod(_sqrt_factorial(n) for n in inp) * math.prod(_sqrt_factorial(n) for n in outp)
    return complex(ryser_permanent(sub) / norm)


def transition_amplitude(u: Unitary, input_state: Sequence[int], output_state: Sequence[int]) -> complex:
    """Single amplitude ``⟨output| U |input⟩`` for many-photon instances.

    Runs the creation-operator expansion on a dense array indexed by
    occupations bounded by ``output_state``; monomials that overshoot the
    target are discarded at once, so cost scales with ``prod(m_l + 1)``.
    """
    inp, outp = FockState(input_state), FockState(output_state)
    if len(inp) != u.dim or len(outp) != u.dim:
        raise InvalidArgumentError("Fock states must match the unitary dimension")
    if inp.total_photons != outp.total_photons:
        return 0j
    cols = [l for l, m in enumerate(outp) if m]
    shape = tuple(outp[l] + 1 for l in cols)
    coeffs = np.zeros(shape, dtype=complex)
    coeffs[(0,) * len(cols)] = 1.0
    for k, n_k in enumerate(inp):
        row = u.matrix[k, cols]
        for _ in range(n_k):
            nxt = np.zeros_like(coeffs)
            for axis, weight in enumerate(row):
                if weight == 0:
                    continue
                dst = [slice(None)] * len(cols)
                src = [slice(None)] * len(cols)
                dst[axis], src[axis] = slice(1, None), slice(None, -1)
                nxt[tuple(dst)] += weight * coeffs[tuple(src)]
            coeffs = nxt
    norm = math.prod(_sqrt_factorial(m) for m in outp) / math.prod(_sqrt_factorial(m) for m in inp)
    return complex(coeffs[tuple(outp[l] for l in cols)] * norm)


def subtract_photon(state: StateVector, mode: int) -> tuple[StateVector, float]:
    """Annihilate one photon in ``mode``.

    Returns the normalized ``a_mode |state⟩`` together with the probability
    that ``mode`` is occupied, i.e. that a subtraction attempt succeeds.
    """
    if not 0 <= mode < state.mode_count:
        raise InvalidArgumentError(f"mode {mode} outside 0..{state.mode_count - 1}")
    out: dict[tuple, complex] = {}
    occupied = 0.0
    for key, amp in state.terms.items():
        n = key[mode]
        if n == 0:
            continue
        occupied += abs(amp) ** 2
        out[key[:mode] + (n - 1,) + key[mode + 1:]] = amp * math.sqrt(n)
    return StateVector(state.mode_count, out).normalized(), occupied


def output_space(mode_count: int, photons: int):
    """All occupation tuples of ``photons`` photons in ``mode_count`` modes, lexicographic."""
    return list(_compositions(photons, mode_count))


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest
