"""Unit tests for the cosine fit."""

import math

import numpy as np
import pytest

from quditsim.core.exceptions import FitError, InvalidInputError
from quditsim.services.fitting import fit_cosine


class TestFitCosine:
    """Grid start point plus curve_fit refinement."""

    def test_recovers_parameters(self):
        t = np.linspace(0.0, 100.0, 501)
        y = 0.4 * np.cos(2 * math.pi * 0.05 * t + 0.3) + 0.5
        fit = fit_cosine(t, y)
        assert fit.frequency == pytest.approx(0.05, rel=1e-6)
        assert fit.amplitude == pytest.approx(0.4, rel=1e-6)
        assert fit.phase == pytest.approx(0.3, abs=1e-6)
        assert fit.offset == pytest.approx(0.5, abs=1e-6)
        assert fit.rms_residual < 1e-8

    def test_negative_amplitude_is_folded(self):
        t = np.linspace(0.0, 100.0, 401)
        y = 0.5 - 0.5 * np.cos(2 * math.pi * 0.03 * t)
        fit = fit_cosine(t, y)
        assert fit.amplitude > 0
        assert np.allclose(fit.evaluate(t), y, atol=1e-6)

    def test_damped_fit_extrapolates_envelope(self):
        t = np.linspace(0.0, 200.0, 401)
        y = 0.45 * np.exp(-0.004 * t) * np.cos(2 * math.pi * 0.03 * t + 0.2) + 0.5
        fit = fit_cosine(t, y, damped=True)
        assert fit.amplitude == pytest.approx(0.45, rel=1e-5)
        assert fit.decay_rate == pytest.approx(0.004, rel=1e-5)
        assert fit.frequency == pytest.approx(0.03, rel=1e-6)
        assert np.allclose(fit.evaluate(t), y, atol=1e-6)
        plain = fit_cosine(t, y, residual_limit=1.0)
        assert plain.decay_rate == 0.0
        assert plain.amplitude < 0.4

    def test_flat_series_raises(self):
        t = np.linspace(0.0, 10.0, 50)
        with pytest.raises(FitError, match="flat"):
            fit_cosine(t, np.full_like(t, 0.25))

    def test_two_tone_series_exceeds_residual_limit(self):
        t = np.linspace(0.0, 200.0, 801)
        y = 0.5 * np.cos(2 * math.pi * 0.05 * t) + 0.5 * np.cos(2 * math.pi * 0.0731 * t)
        with pytest.raises(FitError, match="RMS residual") as excinfo:
            fit_cosine(t, y)
        assert excinfo.value.rms_residual > 0.05

    def test_mismatched_lengths(self):
        with pytest.raises(InvalidInputError, match="matching 1-D arrays"):
            fit_cosine(np.arange(10.0), np.arange(9.0))

    def test_too_few_samples(self):
        with pytest.raises(InvalidInputError, match="at least 5 samples"):
            fit_cosine(np.arange(4.0), np.array([0.0, 1.0, 0.0, 1.0]))
