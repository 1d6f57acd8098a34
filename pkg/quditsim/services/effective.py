"""Effective m-body coupling between the bright pair |0,1..1> and |m-1,0..0>.

Three independent estimates:
1. lambda_from_splitting(): half the exact gap of the bright doublet
2. lambda_from_rabi_fit(): half the fitted population-oscillation frequency
3. lambda_perturbative(): lowest-order sum over photon-absorption orders

Supporting operations:
- effective_doublet(): 2x2 effective Hamiltonian of the dressed bright pair
- retune_resonance(): common qubit offset cancelling the dispersive shifts
- calibrate_field_offset(): applied Z offset giving a dressed pair detuning of m*delta_b
- dressed_basis(): full readout basis of dressed eigenstates

All frequencies are GHz.
"""

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import eigh, polar
from scipy.optimize import brentq, linear_sum_assignment

from quditsim.config import settings
from quditsim.core.exceptions import FitError, HybridizationError, InvalidInputError, NumericalError
from quditsim.core.operators import ProductBasis
from quditsim.schemas.device import DeviceSpec
from quditsim.services.dynamics import TraceResult
from quditsim.services.fitting import fit_cosine
from quditsim.services.hamiltonian import (
    TWO_PI,
    DetuningVector,
    bright_pair,
    build_hamiltonian,
    device_basis,
    frame_reference,
    shift_energy_reference,
)
from quditsim.services.resonance import cascade_path_sum, min_spurious_detuning

logger = logging.getLogger(__name__)

MAX_BRACKET_EXPANSIONS = 30


@dataclass(frozen=True)
class EffectiveCoupling:
    """An estimate of the m-body coupling lambda (GHz, non-negative)."""

    m: int
    coupling: float
    method: str  # splitting / rabi-fit / perturbative
    bright_overlaps: tuple[float, float] | None = None
    signed_coupling: float | None = None
    perturbative_regime: bool | None = None
    details: dict = field(default_factory=dict)

    @property
    def coupling_mhz(self) -> float:
        return self.coupling * 1e3

    def to_dict(self) -> dict:
        d = asdict(self)
        d["coupling_mhz"] = self.coupling_mhz
        if self.bright_overlaps is not None:
            d["bright_overlaps"] = list(self.bright_overlaps)
        return d


@dataclass(frozen=True)
class DressedDoublet:
    """Bright doublet of the (m-1)-excitation sector."""

    labels: tuple[str, str]
    energies: tuple[float, float]
    overlaps: tuple[float, float]
    h_eff: np.ndarray = field(repr=False)
    vectors: np.ndarray = field(repr=False)  # sector-local, columns follow labels
    columns: tuple[int, int] = (0, 0)

    @property
    def coupling(self) -> float:
        return float(abs(self.h_eff[0, 1]))

    @property
    def detuning(self) -> float:
        """Diagonal difference <a|H|a> - <b|H|b> of the dressed pair."""
        return float(np.real(self.h_eff[0, 0] - self.h_eff[1, 1]))

    @property
    def splitting(self) -> float:
        return float(abs(self.energies[1] - self.energies[0]))


def _sector_block(h_ghz, idx: np.ndarray) -> np.ndarray:
    block = h_ghz[idx][:, idx].toarray()
    return 0.5 * (block + block.conj().T)


def _shifted_hamiltonian_ghz(device: DeviceSpec, detuning: DetuningVector | None = None):
    h = shift_energy_reference(build_hamiltonian(device, detuning), frame_reference(device))
    return h.matrix / TWO_PI


def _describe_vector(basis: ProductBasis, idx: np.ndarray, vec: np.ndarray, top: int = 4) -> dict[str, float]:
    weights = np.abs(vec) ** 2
    order = np.argsort(weights)[::-1][:top]
    return {basis.label(int(idx[k])): round(float(weights[k]), 6) for k in order}


def _doublet_from_eigensystem(
    basis: ProductBasis,
    idx: np.ndarray,
    energies: np.ndarray,
    vectors: np.ndarray,
    labels: tuple[str, str],
) -> DressedDoublet:
    positions = {int(v): k for k, v in enumerate(idx)}
    ia = positions[basis.index_of(labels[0])]
    ib = positions[basis.index_of(labels[1])]
    weight = np.abs(vectors[ia, :]) ** 2 + np.abs(vectors[ib, :]) ** 2
    cols = np.sort(np.argsort(weight, kind="stable")[::-1][:2])
    v2 = vectors[:, cols]
    e2 = energies[cols]
    # Projection of the bare pair onto the doublet, orthonormalised (Lowdin).
    projection = v2[[ia, ib], :].conj().T
    unitary, _ = polar(projection)
    dressed = v2 @ unitary
    h_eff = unitary.conj().T @ np.diag(e2) @ unitary
    return DressedDoublet(
        labels=labels,
        energies=(float(e2[0]), float(e2[1])),
        overlaps=(float(weight[cols[0]]), float(weight[cols[1]])),
        h_eff=0.5 * (h_eff + h_eff.conj().T),
        vectors=dressed,
        columns=(int(cols[0]), int(cols[1])),
    )


def effective_doublet(device: DeviceSpec, m: int, detuning: DetuningVector | None = None) -> DressedDoublet:
    labels = bright_pair(device, m)
    basis = device_basis(device)
    idx = basis.sector(m - 1)
    energies, vectors = eigh(_sector_block(_shifted_hamiltonian_ghz(device, detuning), idx))
    return _doublet_from_eigensystem(basis, idx, energies, vectors, labels)


def _check_overlaps(basis: ProductBasis, idx: np.ndarray, vectors: np.ndarray, doublet: DressedDoublet) -> None:
    threshold = settings.bright_overlap_threshold
    for col, overlap in zip(doublet.columns, doublet.overlaps):
        if overlap < threshold:
            summary = _describe_vector(basis, idx, vectors[:, col])
            raise HybridizationError(
                f"Bright eigenvector {col} keeps only {overlap:.3f} weight on "
                f"{doublet.labels} (threshold {threshold}); components: {summary}",
                eigenvector=summary,
            )


def lambda_from_splitting(device: DeviceSpec, m: int, sector_only: bool = True) -> EffectiveCoupling:
    """Half the gap between the two eigenstates that carry the bright pair.

    ``sector_only=False`` diagonalises the whole space instead of the
    (m-1)-excitation block; both give the same answer and the full version
    is kept as a cross-check.
    """
    labels = bright_pair(device, m)
    basis = device_basis(device)
    h = _shifted_hamiltonian_ghz(device)
    if sector_only:
        idx = basis.sector(m - 1)
        energies, vectors = eigh(_sector_block(h, idx))
    else:
        idx = np.arange(basis.total_dim)
        dense = h.toarray()
        energies, vectors = eigh(0.5 * (dense + dense.conj().T))
    doublet = _doublet_from_eigensystem(basis, idx, energies, vectors, labels)
    _check_overlaps(basis, idx, vectors, doublet)
    coupling = 0.5 * doublet.splitting
    logger.info(
        "Splitting lambda_%d = %.4f MHz (overlaps %.3f, %.3f)",
        m, coupling * 1e3, *doublet.overlaps,
    )
    return EffectiveCoupling(
        m=m,
        coupling=coupling,
        method="splitting",
        bright_overlaps=doublet.overlaps,
        details={"energies": list(doublet.energies), "residual_detuning": doublet.detuning},
    )


def lambda_from_rabi_fit(trace: TraceResult, pair: tuple[str, str]) -> EffectiveCoupling:
    """lambda = f/2 from a cosine fit to the population of ``pair[1]``.

    Raises FitError when the trace does not look like two-level dynamics or
    spans fewer than two oscillation periods.
    """
    for label in pair:
        if label not in trace.labels:
            raise InvalidInputError(f"Label {label!r} not present in trace")
    times = trace.times
    values = trace.population(pair[1])
    try:
        fit = fit_cosine(times, values)
    except FitError as exc:
        raise FitError(
            f"Trace of {pair[1]} is not two-level dynamics: {exc}", rms_residual=exc.rms_residual
        ) from exc
    span = float(times[-1] - times[0])
    if fit.frequency * span < 2.0:
        raise FitError(
            f"Trace spans {fit.frequency * span:.2f} periods; need at least 2",
            rms_residual=fit.rms_residual,
        )
    m = len(pair[0])
    return EffectiveCoupling(
        m=m,
        coupling=0.5 * fit.frequency,
        method="rabi-fit",
        details=fit.to_dict(),
    )


def lambda_perturbative(device: DeviceSpec, m: int) -> EffectiveCoupling:
    """Lowest-order path sum over the (m-1)! photon-absorption orders."""
    bright_pair(device, m)
    nu = np.array([device.qudit.transition(k) for k in range(1, m)])
    omega = np.array([q.base_freq for q in device.qubits])
    g = np.array(device.couplings)
    signed = float(cascade_path_sum(nu, omega, g, m))
    spurious = float(min_spurious_detuning(nu, omega, m))
    margin = settings.perturbative_margin * float(g.max())
    regime = spurious >= margin
    if not regime:
        logger.warning(
            "Perturbative estimate outside its regime: min spurious detuning %.1f MHz < %.0f x max g",
            spurious * 1e3, settings.perturbative_margin,
        )
    return EffectiveCoupling(
        m=m,
        coupling=abs(signed),
        method="perturbative",
        signed_coupling=signed,
        perturbative_regime=regime,
        details={"min_spurious_detuning": spurious},
    )


def retune_resonance(device: DeviceSpec, m: int, span: float | None = None) -> tuple[DeviceSpec, float]:
    """Shift all qubits by a common offset so the dressed bright pair is resonant.

    Returns the re-tuned device and the offset (GHz).
    """
    span = settings.retune_span_ghz if span is None else span

    def residual(x: float) -> float:
        return effective_doublet(device.with_qubit_offset(x), m).detuning

    d0 = residual(0.0)
    if abs(d0) < 1e-12:
        return device, 0.0
    guess = -d0 / (m - 1)
    half = max(abs(guess) / 2.0, 1e-4)
    lo, hi = guess - half, guess + half
    f_lo, f_hi = residual(lo), residual(hi)
    expansions = 0
    while np.sign(f_lo) == np.sign(f_hi):
        expansions += 1
        if expansions > MAX_BRACKET_EXPANSIONS or half > span:
            raise NumericalError(
                f"Could not bracket the dressed resonance within +/-{span} GHz "
                f"(residual detuning {d0 * 1e3:.3f} MHz at zero offset)"
            )
        half *= 2.0
        lo, hi = guess - half, guess + half
        f_lo, f_hi = residual(lo), residual(hi)
    offset = float(brentq(residual, lo, hi, xtol=1e-14, rtol=1e-12))
    logger.info(
        "Re-tuned m=%d qubits by %.4f MHz (dressed detuning was %.4f MHz)",
        m, offset * 1e3, d0 * 1e3,
    )
    return device.with_qubit_offset(offset), offset


@dataclass(frozen=True)
class FieldCalibration:
    """Applied Z offset that separates the dressed bright pair by m*delta_b."""

    m: int
    delta_b: float
    applied: float
    detuning_shift: float
    coupling: float  # |h_eff[0, 1]| of the doublet during the field segment

    def to_dict(self) -> dict:
        return asdict(self)


def field_detuning(m: int, offset: float) -> DetuningVector:
    """Qudit 0 -> m-1 transition down by ``offset``, every qubit up by ``offset``."""
    return DetuningVector.for_transition(m, -offset, [offset] * (m - 1))


def calibrate_field_offset(device: DeviceSpec, m: int, delta_b: float) -> FieldCalibration:
    """Solve for the applied offset x whose dressed pair detuning moves by m*delta_b.

    The bare pair moves by m*x; the qubits' dispersive shifts change with x,
    so the dressed shift is solved for with brentq.
    """
    if not delta_b > 0:
        raise InvalidInputError(f"delta_b must be positive, got {delta_b}")
    base = effective_doublet(device, m).detuning
    target = m * delta_b

    def residual(x: float) -> float:
        return effective_doublet(device, m, field_detuning(m, x)).detuning - base - target

    lo, hi = 0.5 * delta_b, 2.0 * delta_b
    f_lo, f_hi = residual(lo), residual(hi)
    expansions = 0
    while np.sign(f_lo) == np.sign(f_hi):
        expansions += 1
        if expansions > MAX_BRACKET_EXPANSIONS:
            raise NumericalError(
                f"Could not bracket the field offset for m={m}, delta_b={delta_b * 1e3:.3f} MHz"
            )
        lo, hi = lo / 2.0, hi * 2.0
        f_lo, f_hi = residual(lo), residual(hi)
    applied = float(brentq(residual, lo, hi, xtol=1e-15, rtol=1e-12))
    doublet = effective_doublet(device, m, field_detuning(m, applied))
    logger.info(
        "Field offset m=%d: %.4f MHz applied for delta_b=%.4f MHz (dressed lambda %.4f MHz)",
        m, applied * 1e3, delta_b * 1e3, doublet.coupling * 1e3,
    )
    return FieldCalibration(
        m=m,
        delta_b=delta_b,
        applied=applied,
        detuning_shift=doublet.detuning - base,
        coupling=doublet.coupling,
    )


def dressed_basis(device: DeviceSpec, m: int) -> np.ndarray:
    """Unitary whose column k is the dressed eigenstate continuously connected to label k.

    Every excitation sector is diagonalised; eigenvectors are matched to
    computational states by maximum total overlap, except the bright pair,
    which is represented by the orthonormalised doublet projection. Column
    phases make each dressed state's overlap with its label real positive.
    """
    labels = bright_pair(device, m)
    basis = device_basis(device)
    h = _shifted_hamiltonian_ghz(device)
    unitary = np.zeros((basis.total_dim, basis.total_dim), dtype=complex)
    for n in np.unique(basis.excitation_numbers):
        idx = basis.sector(int(n))
        if idx.size == 1:
            unitary[idx[0], idx[0]] = 1.0
            continue
        energies, vectors = eigh(_sector_block(h, idx))
        rows = np.arange(idx.size)
        cols = np.arange(idx.size)
        if n == m - 1:
            doublet = _doublet_from_eigensystem(basis, idx, energies, vectors, labels)
            positions = {int(v): k for k, v in enumerate(idx)}
            pair_rows = [positions[basis.index_of(lab)] for lab in labels]
            for k, row in enumerate(pair_rows):
                unitary[idx, idx[row]] = doublet.vectors[:, k]
            rows = np.setdiff1d(rows, pair_rows)
            cols = np.setdiff1d(cols, doublet.columns)
        overlap = np.abs(vectors[np.ix_(rows, cols)]) ** 2
        r, c = linear_sum_assignment(-overlap)
        for row, col in zip(rows[r], cols[c]):
            vec = vectors[:, col]
            anchor = vec[row]
            if abs(anchor) > 0:
                vec = vec * (np.conj(anchor) / abs(anchor))
            unitary[idx, idx[row]] = vec
    return unitary
