"""Hamiltonian and dissipator assembly for a qudit coupled to N qubits.

Core workflow:
1. DetuningVector: per-circuit frequency offsets applied by a pulse segment
2. build_hamiltonian(): anharmonic ladders plus sqrt(n)-weighted exchange
3. collapse_operators(): relaxation and pure-dephasing jump operators
4. shift_energy_reference(): population-invariant energy zero for integration

Input frequencies are GHz; assembled operators are angular (rad/ns).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from quditsim.config import settings
from quditsim.core.exceptions import InvalidInputError
from quditsim.core.operators import (
    Operator,
    ProductBasis,
    embed_local,
    ladder_ops,
    total_excitation,
)
from quditsim.schemas.device import DeviceSpec

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class DetuningVector:
    """Frequency offsets (GHz) added to each circuit's base frequency."""

    offsets: tuple[float, ...]

    @classmethod
    def zeros(cls, n_circuits: int) -> "DetuningVector":
        return cls(tuple(0.0 for _ in range(n_circuits)))

    @classmethod
    def for_transition(
        cls, m: int, qudit_shift: float, qubit_shifts: list[float] | tuple[float, ...]
    ) -> "DetuningVector":
        """Offsets where the qudit shift is given for its whole 0 -> m-1 transition.

        A shift of the 0 -> m-1 energy by ``qudit_shift`` with fixed
        anharmonicity moves the base frequency by ``qudit_shift / (m - 1)``.
        """
        if m < 2:
            raise InvalidInputError(f"Interaction order must be at least 2, got {m}")
        return cls((qudit_shift / (m - 1), *(float(s) for s in qubit_shifts)))

    def __post_init__(self):
        object.__setattr__(self, "offsets", tuple(float(x) for x in self.offsets))

    def __len__(self) -> int:
        return len(self.offsets)


def device_basis(device: DeviceSpec) -> ProductBasis:
    return ProductBasis(device.dims)


def _resolve_detuning(device: DeviceSpec, detuning: DetuningVector | None) -> tuple[float, ...]:
    n = len(device.circuits)
    if detuning is None:
        return (0.0,) * n
    if len(detuning) != n:
        raise InvalidInputError(
            f"Detuning vector has {len(detuning)} entries, device has {n} circuits"
        )
    return detuning.offsets


def transition_frequency(
    device: DeviceSpec, circuit: int, k: int, detuning: DetuningVector | None = None
) -> float:
    """Frequency (GHz) of the k-1 -> k transition of ``circuit`` under ``detuning``."""
    spec = device.circuits[circuit]
    if not 1 <= k < spec.levels:
        raise InvalidInputError(f"Circuit {circuit} has no transition {k - 1}->{k}")
    return spec.transition(k) + _resolve_detuning(device, detuning)[circuit]


def level_energies(base_freq: float, anharmonicity: float, levels: int) -> np.ndarray:
    """Energies (GHz) of levels 0..levels-1; E_n = sum of transitions up to n."""
    transitions = base_freq + anharmonicity * np.arange(levels - 1)
    return np.concatenate(([0.0], np.cumsum(transitions)))


def build_hamiltonian(device: DeviceSpec, detuning: DetuningVector | None = None) -> Operator:
    """Assemble H in rad/ns.

    H/2pi = sum_c sum_n E_c(n)|n><n|_c + sum_j g_j (a_0^dag a_j + a_0 a_j^dag)
            [+ sum g_ab (a_a^dag a_b + h.c.)]

    with bosonic sqrt(n) factors on every ladder.
    """
    basis = device_basis(device)
    offsets = _resolve_detuning(device, detuning)

    diagonal = np.zeros(basis.total_dim)
    level_grid = np.indices(basis.dims).reshape(basis.n_circuits, -1)
    for c, spec in enumerate(device.circuits):
        energies = level_energies(spec.base_freq + offsets[c], spec.anharmonicity, spec.levels)
        diagonal += energies[level_grid[c]]

    h = Operator(basis, sp.diags(diagonal.astype(complex), format="csr"))

    raise0, lower0 = ladder_ops(device.qudit.levels, weighted=True)
    up0 = embed_local(basis, 0, raise0)
    down0 = embed_local(basis, 0, lower0)
    for j, g in enumerate(device.couplings, start=1):
        raise_j, lower_j = ladder_ops(device.circuits[j].levels, weighted=True)
        exchange = up0 @ embed_local(basis, j, lower_j) + down0 @ embed_local(basis, j, raise_j)
        h = h + g * exchange

    for qc in device.qubit_couplings:
        raise_a, lower_a = ladder_ops(device.circuits[qc.a].levels, weighted=True)
        raise_b, lower_b = ladder_ops(device.circuits[qc.b].levels, weighted=True)
        hop = embed_local(basis, qc.a, raise_a) @ embed_local(basis, qc.b, lower_b)
        h = h + qc.g * (hop + hop.dagger())

    return TWO_PI * h


def collapse_operators(device: DeviceSpec, tphi_factor: float | None = None) -> list[Operator]:
    """Jump operators sqrt(1/T1) a_c and sqrt(2/T_phi) n_c with T_phi = factor * T2*.

    Channels whose time is null are omitted.
    """
    factor = settings.tphi_factor if tphi_factor is None else tphi_factor
    basis = device_basis(device)
    ops: list[Operator] = []
    for c, spec in enumerate(device.circuits):
        if spec.t1 is not None:
            _, lower = ladder_ops(spec.levels, weighted=True)
            ops.append(math.sqrt(1.0 / spec.t1) * embed_local(basis, c, lower))
        if spec.t2_star is not None:
            t_phi = factor * spec.t2_star
            number = np.diag(np.arange(spec.levels, dtype=float))
            ops.append(math.sqrt(2.0 / t_phi) * embed_local(basis, c, number))
    logger.debug("Built %d collapse operators for %d circuits", len(ops), len(device.circuits))
    return ops


def frame_reference(device: DeviceSpec) -> float:
    """Energy-zero reference (GHz per quantum): mean qubit base frequency."""
    return float(np.mean([q.base_freq for q in device.qubits]))


def shift_energy_reference(h: Operator, reference_ghz: float) -> Operator:
    """H - 2pi*ref*N. N commutes with H, so every sector only gains a global phase."""
    return h - (TWO_PI * reference_ghz) * total_excitation(h.basis)


def check_interaction_order(device: DeviceSpec, m: int) -> None:
    if not 2 <= m <= 5:
        raise InvalidInputError(f"Interaction order m must be in [2, 5], got {m}")
    if device.n_qubits != m - 1:
        raise InvalidInputError(
            f"m={m} needs {m - 1} qubits, device has {device.n_qubits}"
        )
    if device.qudit.levels < m:
        raise InvalidInputError(
            f"m={m} needs qudit level {m - 1}; qudit keeps only {device.qudit.levels} levels"
        )


def bright_pair(device: DeviceSpec, m: int) -> tuple[str, str]:
    """Labels of |0,1...1> and |m-1,0...0>."""
    check_interaction_order(device, m)
    return "0" + "1" * (m - 1), str(m - 1) + "0" * (m - 1)
