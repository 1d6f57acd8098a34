"""Time evolution under piecewise-constant Hamiltonians.

Core workflow:
1. Segment: duration, detuning vector and sample grid of one pulse segment
2. evolve_pure(): Schroedinger equation, fixed-step RK4, renormalised
3. evolve_lindblad(): Lindblad master equation, RK4 on the vectorised state
4. run_schedule(): chain segments, carrying the state across boundaries

Populations are always read in a supplied readout basis (identity = the
computational basis).
"""

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import pandas as pd
import scipy.sparse as sp

from quditsim.config import settings
from quditsim.core.exceptions import InvalidInputError, NumericalError
from quditsim.core.integrators import check_step, integrate_linear
from quditsim.core.operators import Operator, QuantumState
from quditsim.schemas.device import DeviceSpec
from quditsim.services.hamiltonian import (
    DetuningVector,
    build_hamiltonian,
    collapse_operators,
    frame_reference,
    shift_energy_reference,
)

logger = logging.getLogger(__name__)

Mode = Literal["pure", "lindblad"]


@dataclass(frozen=True)
class Segment:
    duration: float
    detuning: DetuningVector | None = None
    label: str = ""
    sample_times: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class TraceResult:
    """Sampled populations of one evolution (or ensemble mean)."""

    times: np.ndarray
    populations: np.ndarray  # (n_samples, dim), readout basis
    labels: tuple[str, ...]
    tracked: tuple[str, ...]
    final_state: QuantumState | None = None
    spread: np.ndarray | None = None
    states: tuple[QuantumState, ...] | None = None
    diagnostics: dict = field(default_factory=dict)

    def population(self, label: str) -> np.ndarray:
        try:
            k = self.labels.index(label)
        except ValueError:
            raise InvalidInputError(f"Unknown basis label {label!r}") from None
        return self.populations[:, k]

    def population_spread(self, label: str) -> np.ndarray | None:
        if self.spread is None:
            return None
        return self.spread[:, self.labels.index(label)]

    def to_frame(self) -> pd.DataFrame:
        data: dict[str, np.ndarray] = {"time_ns": self.times}
        for label in self.tracked:
            data[label] = self.population(label)
        if self.spread is not None:
            for label in self.tracked:
                data[f"{label}_std"] = self.population_spread(label)
        return pd.DataFrame(data)


def _sample_grid(duration: float, sample_times: np.ndarray | None) -> tuple[np.ndarray, np.ndarray]:
    """Integration stops (always ending at ``duration``) and a mask of recorded ones."""
    if sample_times is None:
        grid = np.arange(0.0, duration, settings.sample_interval_ns)
        stops = np.unique(np.append(grid, duration))
        return stops, np.ones(stops.size, dtype=bool)
    samples = np.asarray(sample_times, dtype=float)
    if samples.ndim != 1 or samples.size == 0:
        raise InvalidInputError("sample_times must be a non-empty 1-D array")
    if np.any(np.diff(samples) <= 0):
        raise InvalidInputError("sample_times must be strictly increasing")
    if samples[0] < 0 or samples[-1] > duration + 1e-12:
        raise InvalidInputError(f"sample_times must lie within [0, {duration}]")
    if samples[-1] < duration:
        return np.append(samples, duration), np.append(np.ones(samples.size, dtype=bool), False)
    return samples, np.ones(samples.size, dtype=bool)


def _check_initial(hamiltonian: Operator, initial: QuantumState) -> None:
    if initial.basis != hamiltonian.basis:
        raise InvalidInputError(
            f"State basis {initial.basis.dims} does not match Hamiltonian basis {hamiltonian.basis.dims}"
        )
    initial.validate(eigenvalue_floor=settings.positivity_floor)


def evolve_pure(
    hamiltonian: Operator,
    initial: QuantumState,
    duration: float,
    dt: float | None = None,
    *,
    sample_times: np.ndarray | None = None,
    readout: np.ndarray | None = None,
    tracked: tuple[str, ...] | None = None,
    keep_states: bool = False,
) -> TraceResult:
    """Integrate i d|psi>/dt = H|psi> (H in rad/ns) for ``duration`` ns."""
    dt = settings.dt_ns if dt is None else dt
    check_step(dt, duration)
    if not initial.is_pure:
        raise InvalidInputError("evolve_pure needs a ket; use evolve_lindblad for density matrices")
    _check_initial(hamiltonian, initial)

    stops, recorded = _sample_grid(duration, sample_times)
    generator = (-1j * hamiltonian.matrix).tocsr()
    basis = hamiltonian.basis
    pops = np.zeros((stops.size, basis.total_dim))
    states: list[QuantumState] = []
    drift = {"max": 0.0}

    def renormalise(y: np.ndarray) -> np.ndarray:
        norm = np.linalg.norm(y)
        drift["max"] = max(drift["max"], abs(norm - 1.0))
        return y / norm

    def record(k: int, y: np.ndarray) -> None:
        amps = y if readout is None else readout.conj().T @ y
        pops[k] = np.abs(amps) ** 2
        if keep_states and recorded[k]:
            states.append(QuantumState(basis, "ket", y.copy()))

    final = integrate_linear(generator, initial.data, stops, dt, after_step=renormalise, on_sample=record)
    if drift["max"] > settings.norm_tolerance:
        logger.warning("Norm drift per step reached %.2e (dt=%.4g ns)", drift["max"], dt)
    else:
        logger.debug("Max norm drift per step %.2e", drift["max"])

    return TraceResult(
        times=stops[recorded],
        populations=pops[recorded],
        labels=basis.labels,
        tracked=tracked or (),
        final_state=QuantumState(basis, "ket", final),
        states=tuple(states) if keep_states else None,
        diagnostics={"max_norm_drift": drift["max"]},
    )


def liouvillian(hamiltonian: Operator, collapse: list[Operator]) -> sp.csr_matrix:
    """Superoperator for row-major vec(rho): vec(A rho B) = (A kron B^T) vec(rho)."""
    d = hamiltonian.basis.total_dim
    eye = sp.identity(d, dtype=complex, format="csr")
    h = hamiltonian.matrix
    generator = -1j * (sp.kron(h, eye) - sp.kron(eye, h.T))
    for op in collapse:
        if op.basis != hamiltonian.basis:
            raise InvalidInputError("Collapse operator basis does not match the Hamiltonian")
        a = op.matrix
        ada = (a.conj().T @ a).tocsr()
        generator = generator + sp.kron(a, a.conj()) - 0.5 * sp.kron(ada, eye) - 0.5 * sp.kron(eye, ada.T)
    return generator.tocsr()


def evolve_lindblad(
    hamiltonian: Operator,
    collapse: list[Operator],
    initial: QuantumState,
    duration: float,
    dt: float | None = None,
    *,
    sample_times: np.ndarray | None = None,
    readout: np.ndarray | None = None,
    tracked: tuple[str, ...] | None = None,
    keep_states: bool = False,
) -> TraceResult:
    """Integrate the Lindblad equation; each step re-symmetrises rho."""
    dt = settings.dt_ns if dt is None else dt
    check_step(dt, duration)
    _check_initial(hamiltonian, initial)
    basis = hamiltonian.basis
    d = basis.total_dim
    rho0 = initial.to_density().data

    stops, recorded = _sample_grid(duration, sample_times)
    generator = liouvillian(hamiltonian, collapse)
    pops = np.zeros((stops.size, d))
    states: list[QuantumState] = []
    stats = {"trace_drift": 0.0, "min_eigenvalue": np.inf}

    def symmetrise(y: np.ndarray) -> np.ndarray:
        r = y.reshape(d, d)
        return (0.5 * (r + r.conj().T)).ravel()

    def record(k: int, y: np.ndarray) -> None:
        rho = y.reshape(d, d)
        stats["trace_drift"] = max(stats["trace_drift"], abs(np.real(np.trace(rho)) - 1.0))
        stats["min_eigenvalue"] = min(stats["min_eigenvalue"], float(np.linalg.eigvalsh(rho).min()))
        view = rho if readout is None else readout.conj().T @ rho @ readout
        pops[k] = np.real(np.diag(view))
        if keep_states and recorded[k]:
            states.append(QuantumState(basis, "density", rho.copy()))

    final = integrate_linear(generator, rho0.ravel(), stops, dt, after_step=symmetrise, on_sample=record)
    if stats["trace_drift"] > settings.trace_tolerance:
        logger.warning("Trace drift reached %.2e (dt=%.4g ns)", stats["trace_drift"], dt)
    if stats["min_eigenvalue"] < settings.positivity_floor:
        raise NumericalError(
            f"Density matrix lost positivity (eigenvalue {stats['min_eigenvalue']:.3e} "
            f"below {settings.positivity_floor:.0e}); reduce dt"
        )

    return TraceResult(
        times=stops[recorded],
        populations=pops[recorded],
        labels=basis.labels,
        tracked=tracked or (),
        final_state=QuantumState(basis, "density", final.reshape(d, d)),
        states=tuple(states) if keep_states else None,
        diagnostics={
            "max_trace_drift": stats["trace_drift"],
            "min_eigenvalue": stats["min_eigenvalue"],
        },
    )


def run_schedule(
    device: DeviceSpec,
    segments: list[Segment],
    initial: QuantumState,
    mode: Mode = "pure",
    dt: float | None = None,
    *,
    readout: np.ndarray | None = None,
    tracked: tuple[str, ...] | None = None,
    reference: float | None = None,
    keep_states: bool = False,
) -> TraceResult:
    """Run consecutive segments; sample times are concatenated with offsets.

    The first sample of each later segment repeats the previous segment's last
    sample and is dropped. A single energy reference is used for all segments.
    """
    if not segments:
        raise InvalidInputError("Schedule needs at least one segment")
    if mode not in ("pure", "lindblad"):
        raise InvalidInputError(f"Unknown evolution mode {mode!r}")
    ref = frame_reference(device) if reference is None else reference
    collapse = collapse_operators(device) if mode == "lindblad" else []
    state = initial
    if mode == "lindblad":
        state = state.to_density()

    times: list[np.ndarray] = []
    pops: list[np.ndarray] = []
    states: list[QuantumState] = []
    diagnostics: dict[str, float] = {}
    offset = 0.0
    for k, seg in enumerate(segments):
        h = shift_energy_reference(build_hamiltonian(device, seg.detuning), ref)
        if mode == "pure":
            part = evolve_pure(
                h, state, seg.duration, dt,
                sample_times=seg.sample_times, readout=readout, keep_states=keep_states,
            )
        else:
            part = evolve_lindblad(
                h, collapse, state, seg.duration, dt,
                sample_times=seg.sample_times, readout=readout, keep_states=keep_states,
            )
        seg_times = part.times + offset
        seg_pops = part.populations
        seg_states = list(part.states or ())
        if k > 0 and seg_times.size and times and np.isclose(seg_times[0], times[-1][-1]):
            seg_times, seg_pops, seg_states = seg_times[1:], seg_pops[1:], seg_states[1:]
        times.append(seg_times)
        pops.append(seg_pops)
        states.extend(seg_states)
        for key, value in part.diagnostics.items():
            if key == "min_eigenvalue":
                diagnostics[key] = min(diagnostics.get(key, np.inf), value)
            else:
                diagnostics[key] = max(diagnostics.get(key, 0.0), value)
        offset += seg.duration
        state = part.final_state
        logger.debug("Segment %d (%s) done at t=%.3f ns", k, seg.label or "unnamed", offset)

    return TraceResult(
        times=np.concatenate(times),
        populations=np.vstack(pops),
        labels=initial.basis.labels,
        tracked=tracked or (),
        final_state=state,
        states=tuple(states) if keep_states else None,
        diagnostics=diagnostics,
    )
