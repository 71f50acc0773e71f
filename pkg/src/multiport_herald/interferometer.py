"""Unitary mode transformations: DFT multiports, embeddings and compositions.

Matrices follow the creation-operator convention
``a_k^dagger -> sum_l U[k, l] b_l^dagger``, so row ``k`` describes where a
photon entering mode ``k`` goes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fock import InvalidArgumentError, ModeLayout

UNITARITY_TOL = 1e-10


class NonUnitaryError(ValueError):
    pass


class UnsupportedLayoutError(ValueError):
    pass


@dataclass(frozen=True)
class Provenance:
    """How a unitary was built, e.g. ``Provenance("DFT", {"N": 3})``."""

    kind: str
    params: dict = field(default_factory=dict)
    parts: tuple["Provenance", ...] = ()

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "params": self.params}
        if self.parts:
            out["parts"] = [p.to_dict() for p in self.parts]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Provenance":
        parts = tuple(cls.from_dict(p) for p in data.get("parts", ()))
        return cls(data["kind"], dict(data.get("params", {})), parts)


class Unitary:
    """An immutable ``dim x dim`` unitary with a provenance tag.

    Construction verifies unitarity unless ``check=False``, which exists so
    that fault-injection hooks can build deliberately broken matrices.
    """

    __slots__ = ("_matrix", "provenance")

    def __init__(self, matrix, provenance: Provenance | None = None, *, check: bool = True):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise InvalidArgumentError(f"expected a non-empty square matrix, got {m.shape}")
        m.setflags(write=False)
        self._matrix = m
        self.provenance = provenance or Provenance("Custom")
        if check and not self.is_unitary():
            raise NonUnitaryError(
                f"matrix deviates from unitarity by {self.unitarity_error():.3g}")

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    def unitarity_error(self) -> float:
        m = self._matrix
        return float(np.max(np.abs(m @ m.conj().T - np.eye(self.dim))))

    def is_unitary(self, tol: float = UNITARITY_TOL) -> bool:
        return self.unitarity_error() < tol

    def dagger(self) -> "Unitary":
        return Unitary(self._matrix.conj().T, Provenance("Adjoint", parts=(self.provenance,)))

    def __matmul__(self, other):
        raise TypeError("use compose(first, second) to make the application order explicit")

    def to_json(self) -> str:
        entries = [[float(z.real), float(z.imag)] for z in self._matrix.ravel()]
        return json.dumps({"schema_version": 1, "dim": self.dim, "entries": entries,
                           "provenance": self.provenance.to_dict()})

    @classmethod
    def from_json(cls, text: str) -> "Unitary":
        data = json.loads(text)
        dim = data["dim"]
        flat = np.array([complex(re, im) for re, im in data["entries"]])
        return cls(flat.reshape(dim, dim), Provenance.from_dict(data["provenance"]))

    def __repr__(self) -> str:
        return f"Unitary(dim={self.dim}, provenance={self.provenance.kind})"


def identity(dim: int) -> Unitary:
    if dim < 1:
        raise InvalidArgumentError("dim must be >= 1")
    return Unitary(np.eye(dim), Provenance("Identity", {"dim": dim}))


def dft_unitary(n: int) -> Unitary:
    """Symmetric ``n``-port multiport: ``U[k, l] = omega**(k*l) / sqrt(n)``."""
    if n < 1:
        raise InvalidArgumentError("a multiport needs at least one port")
    k = np.arange(n)
    # exponent reduced mod n keeps the entries exact roots of unity
    m = np.exp(2j * np.pi * (np.outer(k, k) % n) / n) / np.sqrt(n)
    return Unitary(m, Provenance("DFT", {"N": n}))


def phase_shift(phases: Sequence[float]) -> Unitary:
    return Unitary(np.diag(np.exp(1j * np.asarray(phases, dtype=float))),
                   Provenance("Phase", {"phases": [float(p) for p in phases]}))


def embed(u: Unitary, target_modes: Sequence[int], total_modes: int) -> Unitary:
    """Act as ``u`` on ``target_modes`` (in order) and as identity elsewhere."""
    targets = [int(t) for t in target_modes]
    if len(targets) != u.dim:
        raise InvalidArgumentError(f"{len(targets)} target modes for a {u.dim}-mode unitary")
    if len(set(targets)) != len(targets):
        raise InvalidArgumentError(f"duplicate target modes {targets}")
    if any(t < 0 or t >= total_modes for t in targets):
        raise InvalidArgumentError(f"target modes {targets} outside 0..{total_modes - 1}")
    m = np.eye(total_modes, dtype=complex)
    idx = np.array(targets)
    m[np.ix_(idx, idx)] = u.matrix
    return Unitary(m, Provenance("Embed", {"targets": targets, "total": total_modes},
                                 (u.provenance,)))


def compose(first: Unitary, second: Unitary) -> Unitary:
    """Unitary for applying ``first`` and then ``second`` to a state.

    With the row convention above, sequential application multiplies the
    matrices in argument order.
    """
    if first.dim != second.dim:
        raise InvalidArgumentError(f"dim mismatch {first.dim} vs {second.dim}")
    return Unitary(first.matrix @ second.matrix,
                   Provenance("Compose", parts=(first.provenance, second.provenance)))


def direct_sum(*blocks: Unitary) -> Unitary:
    dim = sum(b.dim for b in blocks)
    m = np.zeros((dim, dim), dtype=complex)
    at = 0
    for b in blocks:
        m[at:at + b.dim, at:at + b.dim] = b.matrix
        at += b.dim
    return Unitary(m, Provenance("DirectSum", parts=tuple(b.provenance for b in blocks)))


def on_internal_labels(u: Unitary, d_int: int) -> Unitary:
    """Lift a spatial unitary to act identically on every internal label."""
    m = np.kron(u.matrix, np.eye(d_int))
    return Unitary(m, Provenance("InternalLift", {"d_int": d_int}, (u.provenance,)))


def internal_rotation(spatial_mode: int, r, system: ModeLayout) -> Unitary:
    """Rotate the two internal labels of one spatial mode by the 2x2 unitary ``r``."""
    if system.d_int != 2:
        raise UnsupportedLayoutError(f"internal rotation needs d_int=2, got {system.d_int}")
    r = r if isinstance(r, Unitary) else Unitary(r)
    if r.dim != 2:
        raise InvalidArgumentError("internal rotation must be 2x2")
    targets = [system.index(spatial_mode, 0), system.index(spatial_mode, 1)]
    emb = embed(r, targets, system.mode_count)
    return Unitary(emb.matrix, Provenance("InternalRotation", {"spatial": spatial_mode},
                                          (r.provenance,)))


def random_unitary(dim: int, rng: np.random.Generator) -> Unitary:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return Unitary(q, Provenance("Custom", {"random": True}))
