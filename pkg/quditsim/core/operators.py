"""Operator algebra on the qudit-plus-qubits product space.

Circuit 0 is the qudit; circuits 1..N are qubits. Basis index ordering is
row-major over the per-circuit levels, so the qudit digit is the most
significant one and the label of a basis state reads left to right as
``<qudit><qubit 1>...<qubit N>``.

All operators are stored as scipy CSR matrices and never mutated after
construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np
import scipy.sparse as sp

from quditsim.core.exceptions import InvalidInputError

NORM_TOLERANCE = 1e-9
TRACE_TOLERANCE = 1e-9
HERMITICITY_TOLERANCE = 1e-9
EIGENVALUE_FLOOR = -1e-7


@dataclass(frozen=True)
class ProductBasis:
    """Computational basis of a tensor product of truncated oscillators.

    Parameters
    ----------
    dims : tuple of int
        Number of retained levels per circuit, qudit first.
    """

    dims: tuple[int, ...]

    def __post_init__(self):
        if len(self.dims) < 1:
            raise InvalidInputError("ProductBasis needs at least one circuit")
        if any(int(d) < 2 for d in self.dims):
            raise InvalidInputError(f"Every circuit needs at least 2 levels, got {self.dims}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    @property
    def n_circuits(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def index(self, levels: tuple[int, ...] | list[int]) -> int:
        """Flat index of the product state with the given per-circuit levels."""
        if len(levels) != self.n_circuits:
            raise InvalidInputError(
                f"Expected {self.n_circuits} levels, got {len(levels)}"
            )
        for c, (n, d) in enumerate(zip(levels, self.dims)):
            if not 0 <= n < d:
                raise InvalidInputError(f"Level {n} out of range [0, {d}) on circuit {c}")
        return int(np.ravel_multi_index(tuple(levels), self.dims))

    def levels(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.total_dim:
            raise InvalidInputError(f"Index {index} out of range [0, {self.total_dim})")
        return tuple(int(n) for n in np.unravel_index(index, self.dims))

    def label(self, index: int) -> str:
        return "".join(str(n) for n in self.levels(index))

    def index_of(self, label: str) -> int:
        """Flat index of a label such as ``"01111"`` (one digit per circuit)."""
        if len(label) != self.n_circuits or not label.isdigit():
            raise InvalidInputError(
                f"Label {label!r} must have one digit per circuit ({self.n_circuits})"
            )
        return self.index([int(ch) for ch in label])

    @cached_property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.label(i) for i in range(self.total_dim))

    @cached_property
    def excitation_numbers(self) -> np.ndarray:
        """Total excitation number of every basis state."""
        grids = np.indices(self.dims).reshape(self.n_circuits, -1)
        return grids.sum(axis=0)

    def sector(self, n_excitations: int) -> np.ndarray:
        """Indices of all basis states carrying exactly ``n_excitations`` quanta."""
        return np.flatnonzero(self.excitation_numbers == n_excitations)


@dataclass(frozen=True, eq=False)
class Operator:
    """Sparse operator bound to a product basis."""

    basis: ProductBasis
    matrix: sp.csr_matrix = field(repr=False)

    def __post_init__(self):
        dim = self.basis.total_dim
        if self.matrix.shape != (dim, dim):
            raise InvalidInputError(
                f"Operator shape {self.matrix.shape} does not match basis dimension {dim}"
            )
        object.__setattr__(self, "matrix", sp.csr_matrix(self.matrix, dtype=complex))

    def _check_basis(self, other: Operator) -> None:
        if other.basis != self.basis:
            raise InvalidInputError(
                f"Basis mismatch: {self.basis.dims} vs {other.basis.dims}"
            )

    def __add__(self, other: Operator) -> Operator:
        self._check_basis(other)
        return Operator(self.basis, self.matrix + other.matrix)

    def __sub__(self, other: Operator) -> Operator:
        self._check_basis(other)
        return Operator(self.basis, self.matrix - other.matrix)

    def __matmul__(self, other: Operator) -> Operator:
        self._check_basis(other)
        return Operator(self.basis, self.matrix @ other.matrix)

    def __mul__(self, scalar: complex) -> Operator:
        return Operator(self.basis, self.matrix * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> Operator:
        return Operator(self.basis, -self.matrix)

    def dagger(self) -> Operator:
        return Operator(self.basis, self.matrix.conj().T.tocsr())

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def element(self, bra: str, ket: str) -> complex:
        """Matrix element <bra|O|ket> addressed by basis labels."""
        return complex(self.matrix[self.basis.index_of(bra), self.basis.index_of(ket)])

    def hermiticity_error(self) -> float:
        diff = self.matrix - self.matrix.conj().T
        return float(abs(diff).max()) if diff.nnz else 0.0

    def is_hermitian(self, tol: float = HERMITICITY_TOLERANCE) -> bool:
        return self.hermiticity_error() <= tol


def commutator(a: Operator, b: Operator) -> Operator:
    return a @ b - b @ a


def identity(basis: ProductBasis) -> Operator:
    return Operator(basis, sp.identity(basis.total_dim, dtype=complex, format="csr"))


def ladder_ops(levels: int, weighted: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Single-circuit raising and lowering matrices.

    With ``weighted=False`` the raising operator is the bare step
    ``|n><n-1|``; with ``weighted=True`` it carries the bosonic
    ``sqrt(n)`` factor. Returns ``(raising, lowering)``.
    """
    if levels < 2:
        raise InvalidInputError(f"Need at least 2 levels, got {levels}")
    amplitudes = np.sqrt(np.arange(1, levels)) if weighted else np.ones(levels - 1)
    lowering = np.diag(amplitudes, k=1).astype(complex)
    return lowering.conj().T.copy(), lowering


def embed_local(basis: ProductBasis, circuit: int, local: np.ndarray | sp.spmatrix) -> Operator:
    """Lift a single-circuit matrix to the full product space."""
    if not 0 <= circuit < basis.n_circuits:
        raise InvalidInputError(f"Circuit index {circuit} out of range [0, {basis.n_circuits})")
    d = basis.dims[circuit]
    if local.shape != (d, d):
        raise InvalidInputError(
            f"Local operator shape {local.shape} does not match circuit {circuit} dimension {d}"
        )
    before = int(np.prod(basis.dims[:circuit]))
    after = int(np.prod(basis.dims[circuit + 1:]))
    full = sp.kron(
        sp.kron(sp.identity(before, format="csr"), sp.csr_matrix(local)),
        sp.identity(after, format="csr"),
        format="csr",
    )
    return Operator(basis, full)


def number_operator(basis: ProductBasis, circuit: int) -> Operator:
    d = basis.dims[circuit]
    return embed_local(basis, circuit, np.diag(np.arange(d, dtype=float)))


def total_excitation(basis: ProductBasis) -> Operator:
    """N = sum of all circuit number operators (diagonal)."""
    return Operator(basis, sp.diags(basis.excitation_numbers.astype(float), format="csr"))


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Pure state vector or density matrix on a product basis."""

    basis: ProductBasis
    kind: Literal["ket", "density"]
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        dim = self.basis.total_dim
        expected = (dim,) if self.kind == "ket" else (dim, dim)
        if self.kind not in ("ket", "density"):
            raise InvalidInputError(f"Unknown state kind {self.kind!r}")
        if self.data.shape != expected:
            raise InvalidInputError(
                f"{self.kind} data shape {self.data.shape} does not match {expected}"
            )
        data = np.array(self.data, dtype=complex)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def basis_ket(cls, basis: ProductBasis, label: str) -> QuantumState:
        vec = np.zeros(basis.total_dim, dtype=complex)
        vec[basis.index_of(label)] = 1.0
        return cls(basis, "ket", vec)

    @classmethod
    def from_vector(cls, basis: ProductBasis, vector: np.ndarray) -> QuantumState:
        return cls(basis, "ket", np.asarray(vector, dtype=complex))

    @property
    def is_pure(self) -> bool:
        return self.kind == "ket"

    def to_density(self) -> QuantumState:
        if self.kind == "density":
            return self
        return QuantumState(self.basis, "density", np.outer(self.data, self.data.conj()))

    def norm(self) -> float:
        if self.kind == "ket":
            return float(np.linalg.norm(self.data))
        return float(np.real(np.trace(self.data)))

    def populations(self, readout: np.ndarray | None = None) -> np.ndarray:
        """Occupation of every readout basis vector (columns of ``readout``)."""
        if self.kind == "ket":
            amps = self.data if readout is None else readout.conj().T @ self.data
            return np.abs(amps) ** 2
        rho = self.data if readout is None else readout.conj().T @ self.data @ readout
        return np.real(np.diag(rho)).copy()

    def validate(self, eigenvalue_floor: float = EIGENVALUE_FLOOR) -> None:
        """Raise if the state violates normalisation, Hermiticity or positivity.

        ``eigenvalue_floor`` may be lowered for states carried over from an
        earlier integration segment.
        """
        if self.kind == "ket":
            drift = abs(self.norm() - 1.0)
            if drift > NORM_TOLERANCE:
                raise InvalidInputError(f"State norm deviates from 1 by {drift:.3e}")
            return
        herm = float(np.max(np.abs(self.data - self.data.conj().T)))
        if herm > HERMITICITY_TOLERANCE:
            raise InvalidInputError(f"Density matrix not Hermitian (max error {herm:.3e})")
        drift = abs(self.norm() - 1.0)
        if drift > TRACE_TOLERANCE:
            raise InvalidInputError(f"Density matrix trace deviates from 1 by {drift:.3e}")
        lowest = float(np.linalg.eigvalsh(self.data).min())
        if lowest < eigenvalue_floor:
            raise InvalidInputError(f"Density matrix has negative eigenvalue {lowest:.3e}")


def expectation(state: QuantumState, op: Operator) -> complex:
    if state.basis != op.basis:
        raise InvalidInputError(f"Basis mismatch: {state.basis.dims} vs {op.basis.dims}")
    if state.kind == "ket":
        return complex(np.vdot(state.data, op.matrix @ state.data))
    return complex(op.matrix.multiply(state.data.T).sum())
