"""Frequency planner: choose qubit frequencies for an m-body cascade.

Core workflow:
1. Ladder the qudit lines nu_1..nu_{m-1} from base frequency and anharmonicity
2. Sample candidate qubit frequencies inside the tuning band; the last qubit is
   fixed by the resonance condition sum(omega) = sum(nu)
3. Score every candidate: minimum spurious-process detuning, penalised for
   bright-state dressing above the limit and for a lowest-order coupling away
   from the target (either side, in e-folds); candidates with two qubits closer
   than the minimum spacing are not admissible
4. Refine the best admissible candidate by coordinate descent
5. Return a FrequencyPlan, or raise PlannerError with the best plan found

The search is deterministic for a given seed.
"""

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from quditsim.config import settings
from quditsim.core.exceptions import InvalidInputError, PlannerError
from quditsim.schemas.device import CircuitSpec, DeviceSpec
from quditsim.services.resonance import (
    cascade_path_sum,
    dressing_weight,
    min_spurious_detuning,
)

logger = logging.getLogger(__name__)

# Coupling scale targeted by default (GHz), per interaction order.
DEFAULT_LAMBDA_TARGET = {3: 0.00225, 4: 0.0014, 5: 0.0008}

DRESSING_PENALTY = 1.0  # GHz per unit of excess admixture
COUPLING_PENALTY = 0.5  # GHz per e-fold away from the target coupling
REFINE_FRACTION = 0.1
MIN_STEP = 1e-5


@dataclass(frozen=True)
class FrequencyPlan:
    """Qubit frequency assignment produced by plan_frequencies()."""

    m: int
    qudit_base: float
    anharmonicity: float
    g: float
    qubit_freqs: tuple[float, ...]
    min_spurious_detuning: float
    dressing_weight: float
    lambda_estimate: float
    lambda_target: float
    min_qubit_spacing: float
    resonance_residual: float
    threshold: float
    seed: int
    evaluations: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["qubit_freqs"] = list(self.qubit_freqs)
        return d

    def to_device(
        self,
        qudit_levels: int = 5,
        qubit_levels: int = 2,
        qubit_anharmonicity: float = -0.25,
        t1: float | None = None,
        t2_star: float | None = None,
    ) -> DeviceSpec:
        qudit = CircuitSpec(
            levels=qudit_levels,
            base_freq=self.qudit_base,
            anharmonicity=self.anharmonicity,
            t1=t1,
            t2_star=t2_star,
        )
        qubits = [
            CircuitSpec(
                levels=qubit_levels,
                base_freq=f,
                anharmonicity=qubit_anharmonicity if qubit_levels > 2 else 0.0,
                t1=t1,
                t2_star=t2_star,
            )
            for f in self.qubit_freqs
        ]
        return DeviceSpec(circuits=[qudit, *qubits], couplings=[self.g] * len(qubits))


def qudit_lines(qudit_base: float, anharmonicity: float, m: int) -> np.ndarray:
    """Transition frequencies nu_1..nu_{m-1} (GHz)."""
    return qudit_base + anharmonicity * np.arange(m - 1)


def min_qubit_spacing(omega: np.ndarray) -> np.ndarray:
    """Smallest pairwise |omega_i - omega_j| (GHz) of each candidate row."""
    omega = np.asarray(omega, dtype=float)
    n = omega.shape[-1]
    gaps = np.abs(omega[..., :, None] - omega[..., None, :])
    gaps[..., np.arange(n), np.arange(n)] = np.inf
    return gaps.min(axis=(-2, -1))


def _score(
    nu: np.ndarray,
    omega: np.ndarray,
    g: float,
    m: int,
    dressing_limit: float,
    lambda_target: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    spurious = min_spurious_detuning(nu, omega, m)
    dressing = dressing_weight(nu, omega, g, m)
    coupling = np.abs(cascade_path_sum(nu, omega, g, m))
    mismatch = np.abs(np.log(np.maximum(coupling, 1e-15) / lambda_target))
    score = (
        spurious
        - DRESSING_PENALTY * np.maximum(0.0, dressing - dressing_limit)
        - COUPLING_PENALTY * mismatch
    )
    return score, spurious, dressing, coupling


def plan_frequencies(
    m: int,
    qudit_base: float,
    anharmonicity: float,
    g: float,
    threshold: float | None = None,
    seed: int = 0,
    *,
    budget: int | None = None,
    window: float | None = None,
    dressing_limit: float | None = None,
    lambda_target: float | None = None,
    min_spacing: float | None = None,
) -> FrequencyPlan:
    """Find qubit frequencies that resonate the m-body process and avoid spurious ones.

    Raises:
        InvalidInputError: m outside [3, 5], |anharmonicity| not above
            ``threshold`` or an empty tuning band.
        PlannerError: no candidate keeps every spurious process at least
            ``threshold`` away from resonance.
    """
    if not 3 <= m <= 5:
        raise InvalidInputError(f"Frequency planning supports m in [3, 5], got {m}")
    if not g > 0:
        raise InvalidInputError(f"Coupling g must be positive, got {g}")
    threshold = settings.planner_threshold_ghz if threshold is None else threshold
    budget = settings.planner_budget if budget is None else budget
    window = settings.planner_window_ghz if window is None else window
    dressing_limit = settings.planner_dressing_limit if dressing_limit is None else dressing_limit
    min_spacing = settings.planner_min_spacing_ghz if min_spacing is None else min_spacing
    if lambda_target is None:
        lambda_target = DEFAULT_LAMBDA_TARGET[m]
    if budget < 10:
        raise InvalidInputError(f"Planner budget too small: {budget}")
    if abs(anharmonicity) <= threshold:
        raise InvalidInputError(
            f"|anharmonicity| = {abs(anharmonicity)} GHz must exceed the spurious threshold {threshold} GHz"
        )

    nu = qudit_lines(qudit_base, anharmonicity, m)
    target_sum = float(nu.sum())
    band_lo, band_hi = settings.planner_band_ghz
    lo = max(band_lo, float(nu.min()) - window)
    hi = min(band_hi, float(nu.max()) + window)
    if hi <= lo:
        raise InvalidInputError(f"Empty tuning band [{lo}, {hi}] GHz")

    def complete(free: np.ndarray) -> np.ndarray:
        last = target_sum - free.sum(axis=-1, keepdims=True)
        return np.concatenate([free, last], axis=-1)

    def feasible(omega: np.ndarray) -> np.ndarray:
        in_band = np.all((omega >= lo) & (omega <= hi), axis=-1)
        return in_band & (min_qubit_spacing(omega) >= min_spacing)

    # --- Stage 1: random search ---
    rng = np.random.default_rng(seed)
    n_random = budget - int(budget * REFINE_FRACTION)
    free = rng.uniform(lo, hi, size=(n_random, m - 2))
    omega = complete(free)
    score, spurious, dressing, coupling = _score(nu, omega, g, m, dressing_limit, lambda_target)
    valid = feasible(omega)
    admissible = valid & (spurious >= threshold)
    evaluations = n_random

    if not admissible.any():
        ranked = np.where(valid, spurious, -np.inf)
        i = int(np.argmax(ranked))
        best = {
            "qubit_freqs": omega[i].tolist(),
            "min_spurious_detuning": float(spurious[i]) if valid[i] else None,
            "threshold": threshold,
            "evaluations": evaluations,
        }
        raise PlannerError(
            f"No frequency plan for m={m} keeps spurious processes >= {threshold} GHz "
            f"(best {best['min_spurious_detuning']} GHz after {evaluations} candidates)",
            best=best,
        )

    i = int(np.argmax(np.where(admissible, score, -np.inf)))
    x = free[i].copy()
    current = float(score[i])

    # --- Stage 2: coordinate descent ---
    step = (hi - lo) / 20.0
    refine_budget = budget - n_random
    while step >= MIN_STEP and evaluations < budget:
        improved = False
        for axis in range(m - 2):
            for sign in (1.0, -1.0):
                if evaluations >= budget:
                    break
                trial = x.copy()
                trial[axis] += sign * step
                trial_omega = complete(trial[None, :])
                evaluations += 1
                if not feasible(trial_omega)[0]:
                    continue
                t_score, t_spur, _, _ = _score(nu, trial_omega, g, m, dressing_limit, lambda_target)
                if t_spur[0] >= threshold and t_score[0] > current + 1e-15:
                    x, current, improved = trial, float(t_score[0]), True
        if not improved:
            step /= 2.0
    logger.debug("Planner refinement used %d of %d evaluations", evaluations - n_random, refine_budget)

    omega_best = complete(x[None, :])
    _, spur_best, dress_best, coup_best = _score(nu, omega_best, g, m, dressing_limit, lambda_target)
    freqs = tuple(sorted((float(w) for w in omega_best[0]), reverse=True))
    plan = FrequencyPlan(
        m=m,
        qudit_base=qudit_base,
        anharmonicity=anharmonicity,
        g=g,
        qubit_freqs=freqs,
        min_spurious_detuning=float(spur_best[0]),
        dressing_weight=float(dress_best[0]),
        lambda_estimate=float(coup_best[0]),
        lambda_target=lambda_target,
        min_qubit_spacing=float(min_qubit_spacing(np.array(freqs))),
        resonance_residual=float(sum(freqs) - target_sum),
        threshold=threshold,
        seed=seed,
        evaluations=evaluations,
    )
    if plan.dressing_weight > dressing_limit:
        logger.warning(
            "Plan for m=%d dresses the bright pair by %.3f (limit %.3f)",
            m, plan.dressing_weight, dressing_limit,
        )
    ratio = plan.lambda_estimate / lambda_target
    if not 1.0 / settings.planner_lambda_tolerance <= ratio <= settings.planner_lambda_tolerance:
        logger.warning(
            "Plan for m=%d reaches lambda %.3f MHz, off the %.3f MHz target by x%.2f",
            m, plan.lambda_estimate * 1e3, lambda_target * 1e3, ratio,
        )
    logger.info(
        "Planned m=%d: qubits=%s GHz, min spurious detuning %.1f MHz, lambda ~ %.3f MHz",
        m,
        [round(f, 4) for f in freqs],
        plan.min_spurious_detuning * 1e3,
        plan.lambda_estimate * 1e3,
    )
    if not math.isclose(plan.resonance_residual, 0.0, abs_tol=1e-9):
        raise PlannerError(
            f"Resonance residual {plan.resonance_residual:.3e} GHz after planning",
            best=plan.to_dict(),
        )
    return plan
