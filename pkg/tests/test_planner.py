"""Unit tests for resonance bookkeeping and the frequency planner."""

import math

import numpy as np
import pytest

from quditsim.core.exceptions import InvalidInputError, PlannerError
from quditsim.config import settings
from quditsim.services.planner import DEFAULT_LAMBDA_TARGET, min_qubit_spacing, plan_frequencies, qudit_lines
from quditsim.services.resonance import (
    cascade_path_sum,
    dressing_weight,
    min_spurious_detuning,
    spurious_detunings,
)


class TestSpuriousDetunings:
    """Enumeration of lower-order photon exchanges."""

    def test_process_counts(self):
        nu = qudit_lines(5.0, -0.25, 5)
        omega = np.array([5.3, 5.1, 4.4, 4.2])
        # sum over k = 1..3 of C(4, k)^2
        assert spurious_detunings(nu, omega, 5).shape == (68,)
        assert spurious_detunings(nu[:2], omega[:2], 3).shape == (4,)

    def test_single_photon_minimum(self):
        nu = np.array([5.0, 4.75])
        omega = np.array([4.55, 5.2])
        assert min_spurious_detuning(nu, omega, 3) == pytest.approx(0.2)

    def test_no_spurious_processes_for_m2(self):
        assert math.isinf(min_spurious_detuning(np.array([5.0]), np.array([5.0]), 2))

    def test_batched_candidates(self):
        nu = np.array([5.0, 4.75])
        omega = np.array([[4.55, 5.2], [5.0, 4.75]])
        result = min_spurious_detuning(nu, omega, 3)
        assert result.shape == (2,)
        assert result[1] == pytest.approx(0.0)


class TestCascadePathSum:
    """Lowest-order coupling through all absorption orders."""

    def test_m2_is_bare_coupling(self):
        assert cascade_path_sum(np.array([5.0]), np.array([5.0]), np.array([0.01]), 2) == pytest.approx(0.01)

    def test_m3_closed_form(self):
        nu = np.array([5.0, 4.75])
        omega = np.array([4.55, 5.2])
        g = 0.01
        expected = math.sqrt(2) * g**2 * (1 / (4.75 - 4.55) + 1 / (4.75 - 5.2))
        assert cascade_path_sum(nu, omega, np.array([g, g]), 3) == pytest.approx(expected, rel=1e-12)

    def test_harmonic_qudit_cancels_m3(self):
        nu = np.array([5.0, 5.0])
        omega = np.array([5.2, 4.8])
        assert abs(cascade_path_sum(nu, omega, np.array([0.02, 0.02]), 3)) < 1e-12

    def test_harmonic_qudit_cancels_m4(self):
        nu = np.array([5.0, 5.0, 5.0])
        omega = np.array([5.2, 4.95, 4.85])
        total = cascade_path_sum(nu, omega, np.array([0.02] * 3), 4)
        assert abs(total) < 1e-12

    @pytest.mark.parametrize(
        "m, omega",
        [
            (3, [4.55, 5.2]),
            (4, [5.3, 4.6, 4.85]),
            (5, [5.3, 5.1, 4.4, 4.2]),
        ],
    )
    def test_scales_with_g_to_the_m_minus_1(self, m, omega):
        nu = qudit_lines(5.0, -0.25, m)
        omega = np.array(omega)
        base = cascade_path_sum(nu, omega, np.full(m - 1, 0.01), m)
        doubled = cascade_path_sum(nu, omega, np.full(m - 1, 0.02), m)
        assert abs(base) > 0
        assert doubled == pytest.approx(2.0 ** (m - 1) * base, rel=1e-12)

    def test_dressing_weight_zero_for_m2(self):
        assert dressing_weight(np.array([5.0]), np.array([5.0]), 0.01, 2) == 0.0


class TestPlanFrequencies:
    """Penalised random search plus coordinate refinement."""

    def test_m3_plan_is_resonant_and_clear(self):
        plan = plan_frequencies(3, 5.0, -0.25, 0.023, seed=0)
        assert abs(plan.resonance_residual) < 1e-9
        assert sum(plan.qubit_freqs) == pytest.approx(9.75, abs=1e-9)
        assert plan.min_spurious_detuning >= 0.05
        assert list(plan.qubit_freqs) == sorted(plan.qubit_freqs, reverse=True)
        assert all(4.0 <= f <= 6.0 for f in plan.qubit_freqs)
        assert plan.lambda_target == DEFAULT_LAMBDA_TARGET[3]
        assert plan.lambda_estimate == pytest.approx(plan.lambda_target, rel=settings.planner_lambda_tolerance - 1)

    def test_m5_plan_is_resonant_and_clear(self):
        plan = plan_frequencies(5, 5.0, -0.25, 0.023, seed=0)
        assert abs(plan.resonance_residual) < 1e-9
        assert plan.min_spurious_detuning >= plan.threshold
        assert len(plan.qubit_freqs) == 4
        assert plan.evaluations <= 10000
        assert plan.min_qubit_spacing >= settings.planner_min_spacing_ghz
        assert plan.lambda_estimate == pytest.approx(DEFAULT_LAMBDA_TARGET[5], rel=settings.planner_lambda_tolerance - 1)

    def test_m4_plan_keeps_qubits_apart(self):
        plan = plan_frequencies(4, 5.0, -0.25, 0.023, seed=0)
        gaps = -np.diff(plan.qubit_freqs)
        assert gaps.min() >= 0.05
        assert plan.min_qubit_spacing == pytest.approx(gaps.min())
        assert plan.lambda_estimate == pytest.approx(DEFAULT_LAMBDA_TARGET[4], rel=settings.planner_lambda_tolerance - 1)

    def test_coupling_targets_fall_with_order(self):
        lam = {m: plan_frequencies(m, 5.0, -0.25, 0.023, seed=0).lambda_estimate for m in (3, 4, 5)}
        assert lam[5] < lam[4] < lam[3]
        # Static offsets widen the pair detuning like sqrt(m), so lambda_m / sqrt(m) must fall too.
        assert lam[5] / math.sqrt(5) < lam[4] / 2 < lam[3] / math.sqrt(3)

    def test_min_qubit_spacing_rows(self):
        omega = np.array([[5.0, 4.9, 4.7], [4.8, 4.8, 5.3]])
        assert min_qubit_spacing(omega) == pytest.approx([0.1, 0.0])

    def test_same_seed_same_plan(self):
        first = plan_frequencies(4, 5.0, -0.25, 0.023, seed=42, budget=2000)
        second = plan_frequencies(4, 5.0, -0.25, 0.023, seed=42, budget=2000)
        assert first == second

    def test_device_from_plan(self):
        plan = plan_frequencies(3, 5.0, -0.25, 0.023, seed=0)
        device = plan.to_device(qudit_levels=4)
        assert device.dims == (4, 2, 2)
        assert device.couplings == [0.023, 0.023]
        assert [q.base_freq for q in device.qubits] == list(plan.qubit_freqs)

    def test_unreachable_threshold_raises(self):
        with pytest.raises(PlannerError, match="No frequency plan for m=3") as excinfo:
            plan_frequencies(3, 5.0, -0.25, 0.023, threshold=0.2, seed=0, budget=500, window=0.1)
        assert excinfo.value.best["threshold"] == 0.2
        # Every frequency in the narrow band sits within 125 MHz of a qudit line.
        assert excinfo.value.best["min_spurious_detuning"] <= 0.125 + 1e-12

    def test_rejects_anharmonicity_below_threshold(self):
        with pytest.raises(InvalidInputError, match="must exceed the spurious threshold"):
            plan_frequencies(3, 5.0, -0.04, 0.023)
        with pytest.raises(InvalidInputError, match="must exceed the spurious threshold"):
            plan_frequencies(3, 5.0, 0.25, 0.023, threshold=0.25)

    def test_rejects_m2(self):
        with pytest.raises(InvalidInputError, match="m in \\[3, 5\\]"):
            plan_frequencies(2, 5.0, -0.25, 0.023)

    def test_rejects_tiny_budget(self):
        with pytest.raises(InvalidInputError, match="budget too small"):
            plan_frequencies(3, 5.0, -0.25, 0.023, budget=5)
