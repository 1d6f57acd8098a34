"""Experiment protocols built on the dynamics and effective-coupling services.

Core workflow:
1. prepare_interaction_point(): re-tune to the dressed resonance, pick the
   readout basis and prepare the bright state
2. rabi_scan(): bright-pair oscillation under the m-body coupling
3. noise_scan(): ensemble average over static frequency offsets
4. interferometer_scan(): interact, accumulate field phase, interact again
5. ghz_estimate(): GHZ fidelity from the density matrix and from the
   interferometer amplitude
"""

import concurrent.futures
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass, field
from typing import TypeVar

import numpy as np

from quditsim.config import settings
from quditsim.core.exceptions import FitError, InvalidInputError
from quditsim.core.operators import QuantumState
from quditsim.schemas.device import DeviceSpec
from quditsim.schemas.experiment import InterferometerSpec, NoiseEnsembleSpec, SolverOptions, TauGrid
from quditsim.services.dynamics import Mode, Segment, TraceResult, run_schedule
from quditsim.services.effective import (
    DressedDoublet,
    calibrate_field_offset,
    dressed_basis,
    effective_doublet,
    field_detuning,
    retune_resonance,
)
from quditsim.services.fitting import CosineFit, fit_cosine
from quditsim.services.hamiltonian import DetuningVector, bright_pair, device_basis

logger = logging.getLogger(__name__)

DEFAULT_TAU_I = {3: 60.0, 4: 55.0, 5: 170.0}

T = TypeVar("T")
R = TypeVar("R")


def _parallel_map(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    """Map in a thread pool; results keep the input order."""
    workers = max(1, settings.max_workers)
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(fn, item) for item in items]
        return [f.result() for f in futures]


@dataclass(frozen=True, eq=False)
class InteractionPoint:
    """Device at the m-body resonance together with its readout basis."""

    device: DeviceSpec
    m: int
    offset: float
    doublet: DressedDoublet
    frame: str
    readout: np.ndarray | None = field(repr=False, default=None)

    @property
    def bright(self) -> tuple[str, str]:
        return self.doublet.labels

    @property
    def coupling(self) -> float:
        return self.doublet.coupling

    @property
    def nominal_period(self) -> float:
        """Period (ns) of the bright-pair population oscillation, 1/(2 lambda)."""
        return 1.0 / (2.0 * self.coupling)

    def initial_state(self, label: str | None = None) -> QuantumState:
        basis = device_basis(self.device)
        label = self.bright[0] if label is None else label
        if self.readout is None:
            return QuantumState.basis_ket(basis, label)
        return QuantumState.from_vector(basis, self.readout[:, basis.index_of(label)])


def prepare_interaction_point(
    device: DeviceSpec, m: int, options: SolverOptions | None = None
) -> InteractionPoint:
    options = options or SolverOptions()
    bright_pair(device, m)
    offset = 0.0
    if options.retune:
        device, offset = retune_resonance(device, m)
    doublet = effective_doublet(device, m)
    readout = dressed_basis(device, m) if options.frame == "dressed" else None
    logger.info(
        "Interaction point m=%d: lambda=%.4f MHz, qubit offset %.4f MHz, %s frame",
        m, doublet.coupling * 1e3, offset * 1e3, options.frame,
    )
    return InteractionPoint(device, m, offset, doublet, options.frame, readout)


def tau_grid_for(point: InteractionPoint, grid: TauGrid | None = None) -> np.ndarray:
    grid = grid or TauGrid()
    stop = grid.stop if grid.stop is not None else grid.periods * point.nominal_period
    if stop <= grid.start:
        raise InvalidInputError(f"tau grid stop {stop} must exceed start {grid.start}")
    return np.linspace(grid.start, stop, grid.points)


def oscillation_contrast(trace: TraceResult, label: str, start: float = 0.0) -> float:
    """max - min of a population series over samples with t >= start."""
    series = trace.population(label)[trace.times >= start]
    if series.size == 0:
        raise InvalidInputError(f"No samples at or after t={start} ns")
    return float(series.max() - series.min())


def _interaction_segment(tau_grid: np.ndarray, label: str = "interaction") -> Segment:
    tau_grid = np.asarray(tau_grid, dtype=float)
    if tau_grid.ndim != 1 or tau_grid.size == 0:
        raise InvalidInputError("tau grid must be a non-empty 1-D array")
    return Segment(duration=float(tau_grid[-1]), label=label, sample_times=tau_grid)


def rabi_scan(
    device: DeviceSpec,
    m: int,
    tau_grid: np.ndarray | None = None,
    mode: Mode = "pure",
    options: SolverOptions | None = None,
    point: InteractionPoint | None = None,
) -> TraceResult:
    """Evolve the bright state |0,1..1> under the m-body coupling and sample the pair."""
    options = options or SolverOptions()
    point = point or prepare_interaction_point(device, m, options)
    grid = tau_grid_for(point) if tau_grid is None else np.asarray(tau_grid, dtype=float)
    trace = run_schedule(
        point.device,
        [_interaction_segment(grid)],
        point.initial_state(),
        mode,
        options.dt,
        readout=point.readout,
        tracked=point.bright,
    )
    logger.info("Rabi scan m=%d: %d samples up to %.1f ns (%s)", m, grid.size, grid[-1], mode)
    return trace


def noise_scan(
    device: DeviceSpec,
    m: int,
    spec: NoiseEnsembleSpec,
    tau_grid: np.ndarray | None = None,
    seed: int = 0,
    mode: Mode = "pure",
    options: SolverOptions | None = None,
    point: InteractionPoint | None = None,
) -> TraceResult:
    """Average bright-pair dynamics over static uniform frequency offsets.

    Offsets are drawn up front from ``default_rng(seed)`` with shape
    (ensemble_size, n_circuits); the qudit entry shifts its 0 -> m-1
    transition. Members run in parallel and merge in draw order.
    """
    options = options or SolverOptions()
    point = point or prepare_interaction_point(device, m, options)
    grid = tau_grid_for(point) if tau_grid is None else np.asarray(tau_grid, dtype=float)
    widths = np.array(spec.widths(len(point.device.circuits)))

    if not np.any(widths > 0):
        base = rabi_scan(point.device, m, grid, mode, options, point=point)
        return TraceResult(
            times=base.times,
            populations=base.populations,
            labels=base.labels,
            tracked=base.tracked,
            final_state=base.final_state,
            spread=np.zeros_like(base.populations),
            diagnostics={**base.diagnostics, "ensemble_size": 1, "offsets": [[0.0] * widths.size]},
        )

    rng = np.random.default_rng(seed)
    offsets = rng.uniform(-widths, widths, size=(spec.ensemble_size, widths.size))
    initial = point.initial_state()

    def member(k: int) -> np.ndarray:
        row = offsets[k]
        detuning = DetuningVector.for_transition(m, float(row[0]), row[1:].tolist())
        segment = Segment(float(grid[-1]), detuning, f"member-{k}", grid)
        trace = run_schedule(point.device, [segment], initial, mode, options.dt, readout=point.readout)
        return trace.populations

    stacked = np.stack(_parallel_map(member, list(range(spec.ensemble_size))))
    logger.info(
        "Noise ensemble m=%d: %d members, widths %s MHz",
        m, spec.ensemble_size, np.round(widths * 1e3, 3).tolist(),
    )
    return TraceResult(
        times=grid.copy(),
        populations=stacked.mean(axis=0),
        labels=device_basis(point.device).labels,
        tracked=point.bright,
        spread=stacked.std(axis=0),
        diagnostics={"ensemble_size": spec.ensemble_size, "offsets": offsets.tolist()},
    )


@dataclass(frozen=True, eq=False)
class InterferometerResult:
    m: int
    tau_i: float
    delta_b: float
    coupling: float
    trace: TraceResult
    fit: CosineFit
    applied_delta_b: float
    field_coupling: float

    @property
    def fitted_frequency(self) -> float:
        """Raw oscillation frequency of the first bright population vs tau_B (GHz)."""
        return self.fit.frequency

    @property
    def field_frequency(self) -> float:
        """Phase rate with the field-segment coupling removed: sqrt(f^2 - (2 lambda_field)^2)."""
        return math.sqrt(max(self.fit.frequency**2 - (2.0 * self.field_coupling) ** 2, 0.0))

    @property
    def expected_frequency(self) -> float:
        return self.m * self.delta_b

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "tau_i_ns": self.tau_i,
            "delta_b_ghz": self.delta_b,
            "applied_delta_b_ghz": self.applied_delta_b,
            "lambda_ghz": self.coupling,
            "field_lambda_ghz": self.field_coupling,
            "fitted_frequency_mhz": self.fitted_frequency * 1e3,
            "field_frequency_mhz": self.field_frequency * 1e3,
            "expected_frequency_mhz": self.expected_frequency * 1e3,
            "fit": self.fit.to_dict(),
        }


def resolve_tau_i(point: InteractionPoint, spec: InterferometerSpec) -> float:
    if spec.tau_i is not None:
        return spec.tau_i
    if spec.auto_calibrate or point.m not in DEFAULT_TAU_I:
        return 1.0 / (8.0 * point.coupling)
    return DEFAULT_TAU_I[point.m]


def interferometer_scan(
    device: DeviceSpec,
    m: int,
    spec: InterferometerSpec,
    mode: Mode = "pure",
    options: SolverOptions | None = None,
    point: InteractionPoint | None = None,
) -> InterferometerResult:
    """tau_I interaction, Z offsets for tau_B, tau_I interaction, then read the pair.

    During the Z segment the qudit 0 -> m-1 transition moves by -x and every
    qubit by +x. With ``calibrate_field`` x is solved so the dressed bright
    pair separates by exactly m*delta_b; otherwise x = delta_b. In lindblad
    mode the fringe is fitted with a decaying envelope.
    The first interaction and the Z segment are shared across the tau_B grid;
    only the closing interaction runs per point.
    """
    options = options or SolverOptions()
    point = point or prepare_interaction_point(device, m, options)
    tau_i = resolve_tau_i(point, spec)
    rate = m * spec.delta_b
    stop = spec.tau_b_stop if spec.tau_b_stop is not None else 3.0 / rate
    if stop * rate < 2.0:
        raise InvalidInputError(
            f"tau_B grid spans {stop * rate:.2f} periods of m*delta_b; need at least 2"
        )
    tau_b = np.linspace(0.0, stop, spec.tau_b_points)

    initial = point.initial_state()
    prepared = run_schedule(
        point.device, [Segment(tau_i, label="interaction")], initial, mode, options.dt,
        readout=point.readout,
    ).final_state

    if spec.calibrate_field:
        calibration = calibrate_field_offset(point.device, m, spec.delta_b)
        applied, field_coupling = calibration.applied, calibration.coupling
    else:
        applied = spec.delta_b
        field_coupling = effective_doublet(point.device, m, field_detuning(m, applied)).coupling
    phase = run_schedule(
        point.device, [Segment(float(tau_b[-1]), field_detuning(m, applied), "field", tau_b)], prepared, mode,
        options.dt, readout=point.readout, keep_states=True,
    )

    def close(state: QuantumState) -> np.ndarray:
        trace = run_schedule(
            point.device, [Segment(tau_i, label="interaction")], state, mode, options.dt,
            readout=point.readout,
        )
        return trace.populations[-1]

    rows = np.stack(_parallel_map(close, list(phase.states)))
    trace = TraceResult(
        times=tau_b,
        populations=rows,
        labels=device_basis(point.device).labels,
        tracked=point.bright,
        diagnostics={"tau_i": tau_i, "applied_delta_b": applied},
    )
    fit = fit_cosine(tau_b, trace.population(point.bright[0]), damped=mode == "lindblad")
    result = InterferometerResult(m, tau_i, spec.delta_b, point.coupling, trace, fit, applied, field_coupling)
    logger.info(
        "Interferometer m=%d: fitted %.3f MHz, field %.3f MHz (expected %.3f MHz)",
        m, result.fitted_frequency * 1e3, result.field_frequency * 1e3, rate * 1e3,
    )
    return result


@dataclass(frozen=True)
class GhzEstimate:
    m: int
    tau: float
    p1: float
    p2: float
    rho_off_direct: float
    fidelity_direct: float
    phase: float
    rho_off_interferometric: float | None = None
    fidelity_interferometric: float | None = None
    interferometer: dict | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _pair_block(state: QuantumState, readout: np.ndarray | None, indices: tuple[int, int]) -> np.ndarray:
    ia, ib = indices
    if state.is_pure:
        amps = state.data if readout is None else readout.conj().T @ state.data
        pair = amps[[ia, ib]]
        return np.outer(pair, pair.conj())
    rho = state.data if readout is None else readout.conj().T @ state.data @ readout
    return rho[np.ix_([ia, ib], [ia, ib])]


def ghz_estimate(
    device: DeviceSpec,
    m: int,
    mode: Mode = "pure",
    tau: float | None = None,
    options: SolverOptions | None = None,
    interferometric: bool = True,
    point: InteractionPoint | None = None,
) -> GhzEstimate:
    """Prepare (|0,1..1> + e^{i phi}|m-1,0..0>)/sqrt(2) with a tau = 1/(8 lambda) pulse.

    Fidelity = (p1 + p2)/2 + |rho_off|. The interferometric estimate replaces
    |rho_off| with the amplitude of the interferometer cosine, extrapolated to
    tau_B = 0 and corrected for decay over the closing pulse, during which the
    pair coherence is on average half converted to population. The amplitude is
    reported as measured; sqrt(p1 p2) bounds it only up to fit error.
    """
    options = options or SolverOptions()
    point = point or prepare_interaction_point(device, m, options)
    tau = 1.0 / (8.0 * point.coupling) if tau is None else tau
    basis = device_basis(point.device)
    indices = (basis.index_of(point.bright[0]), basis.index_of(point.bright[1]))

    final = run_schedule(
        point.device, [Segment(tau, label="ghz")], point.initial_state(), mode, options.dt,
        readout=point.readout,
    ).final_state
    block = _pair_block(final, point.readout, indices)
    p1, p2 = float(np.real(block[0, 0])), float(np.real(block[1, 1]))
    rho_off = float(abs(block[0, 1]))
    # Relative phase of |m-1,0..0> against |0,1..1> in the prepared state.
    phase = float(np.angle(block[1, 0]))
    estimate = GhzEstimate(
        m=m, tau=tau, p1=p1, p2=p2, rho_off_direct=rho_off, phase=phase,
        fidelity_direct=0.5 * (p1 + p2) + rho_off,
    )
    if not interferometric:
        return estimate

    try:
        scan = interferometer_scan(
            device, m, InterferometerSpec(tau_i=tau), mode, options, point=point
        )
    except FitError as exc:
        logger.warning("Interferometric GHZ estimate unavailable: %s", exc)
        return estimate
    amplitude = scan.fit.amplitude * math.exp(0.5 * scan.fit.decay_rate * tau)
    bound = math.sqrt(max(p1 * p2, 0.0))
    if amplitude > bound + settings.fit_residual_limit:
        logger.warning("Interferometer amplitude %.4f exceeds sqrt(p1 p2) = %.4f", amplitude, bound)
    logger.info("GHZ m=%d: direct |rho_off|=%.4f, interferometric %.4f", m, rho_off, amplitude)
    return GhzEstimate(
        m=m, tau=tau, p1=p1, p2=p2, rho_off_direct=rho_off, phase=phase,
        fidelity_direct=estimate.fidelity_direct,
        rho_off_interferometric=amplitude,
        fidelity_interferometric=0.5 * (p1 + p2) + amplitude,
        interferometer=scan.to_dict(),
    )
