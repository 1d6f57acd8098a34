"""Resonance bookkeeping for the qudit photon cascade.

Pure numpy helpers shared by the frequency planner and the perturbative
coupling estimate. Every function accepts qubit frequencies with a leading
batch axis so the planner can score many candidates at once.

Notation: ``nu[k]`` is the qudit transition k -> k+1 (0-based, so ``nu[0]``
is the 0-1 line and ``nu[m-2]`` the (m-2)-(m-1) line), ``omega[..., j]`` the
frequency of qubit j.
"""

import itertools
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def _process_index(n_qubits: int, n_lines: int, max_order: int) -> tuple[np.ndarray, np.ndarray]:
    """Selection matrices for every k-photon exchange with 1 <= k <= max_order.

    Row r of the first matrix marks the k distinct qubits and row r of the
    second the k distinct qudit lines of process r.
    """
    qubit_rows: list[np.ndarray] = []
    line_rows: list[np.ndarray] = []
    for k in range(1, max_order + 1):
        for qs in itertools.combinations(range(n_qubits), k):
            for ls in itertools.combinations(range(n_lines), k):
                q = np.zeros(n_qubits)
                q[list(qs)] = 1.0
                line = np.zeros(n_lines)
                line[list(ls)] = 1.0
                qubit_rows.append(q)
                line_rows.append(line)
    if not qubit_rows:
        return np.zeros((0, n_qubits)), np.zeros((0, n_lines))
    return np.array(qubit_rows), np.array(line_rows)


def spurious_detunings(nu: np.ndarray, omega: np.ndarray, m: int) -> np.ndarray:
    """|sum of k qubit frequencies - sum of k qudit lines| for every k < m-1.

    Returns an array of shape ``omega.shape[:-1] + (n_processes,)``; empty
    along the last axis for m = 2.
    """
    nu = np.asarray(nu, dtype=float)[: m - 1]
    omega = np.asarray(omega, dtype=float)
    qubit_sel, line_sel = _process_index(omega.shape[-1], m - 1, m - 2)
    return np.abs(omega @ qubit_sel.T - nu @ line_sel.T)


def min_spurious_detuning(nu: np.ndarray, omega: np.ndarray, m: int) -> np.ndarray:
    detunings = spurious_detunings(nu, omega, m)
    if detunings.shape[-1] == 0:
        return np.full(np.asarray(omega).shape[:-1], np.inf)
    return detunings.min(axis=-1)


def cascade_path_sum(nu: np.ndarray, omega: np.ndarray, g: np.ndarray, m: int) -> np.ndarray:
    """Signed lowest-order coupling (GHz) between |m-1,0..0> and |0,1..1>.

    Sums over every order in which the qubits absorb the m-1 cascade photons.
    Step s lowers the qudit from level m-s, contributing sqrt(m-s)*g; the
    denominator of intermediate state s is the energy defect
    E_initial - E_s = sum_{top s lines} nu - sum_{first s absorbers} omega.
    """
    nu = np.asarray(nu, dtype=float)[: m - 1]
    omega = np.asarray(omega, dtype=float)
    g = np.broadcast_to(np.asarray(g, dtype=float), omega.shape)
    n = m - 1
    emitted = np.cumsum(nu[::-1])  # energy released after s+1 photons
    total = np.zeros(omega.shape[:-1])
    weights = np.sqrt(np.arange(n, 0, -1, dtype=float))
    for order in itertools.permutations(range(n)):
        idx = list(order)
        amp = np.prod(weights * g[..., idx], axis=-1)
        absorbed = np.cumsum(omega[..., idx], axis=-1)
        defects = emitted[: n - 1] - absorbed[..., : n - 1]
        total = total + amp / np.prod(defects, axis=-1)
    return total


def dressing_weight(nu: np.ndarray, omega: np.ndarray, g: np.ndarray, m: int) -> np.ndarray:
    """Mean first-order admixture of intermediate states into the bright pair.

    |m-1,0..0> couples to |m-2,1_j> with sqrt(m-1)*g_j across nu[m-2]-omega_j;
    |0,1..1> couples to |1,..0_j..> with g_j across omega_j-nu[0].
    """
    if m < 3:
        return np.zeros(np.asarray(omega).shape[:-1])
    nu = np.asarray(nu, dtype=float)
    omega = np.asarray(omega, dtype=float)
    g = np.broadcast_to(np.asarray(g, dtype=float), omega.shape)
    top = ((m - 1) * g**2 / (nu[m - 2] - omega) ** 2).sum(axis=-1)
    bottom = (g**2 / (omega - nu[0]) ** 2).sum(axis=-1)
    return 0.5 * (top + bottom)

