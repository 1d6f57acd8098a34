"""Cosine fitting for population oscillations.

Model: y(t) = A exp(-gamma t) cos(2 pi f t + phi) + C with A >= 0 and f >= 0
(GHz when t is ns). gamma is held at 0 unless a damped fit is requested, in
which case A is the envelope extrapolated to t = 0. A linear least-squares
scan over a frequency grid picks the start point (lowest frequency wins
ties), then scipy's curve_fit refines the free parameters.
"""

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import curve_fit

from quditsim.config import settings
from quditsim.core.exceptions import FitError, InvalidInputError

logger = logging.getLogger(__name__)

GRID_OVERSAMPLING = 8
MIN_PEAK_TO_PEAK = 1e-6


@dataclass(frozen=True)
class CosineFit:
    frequency: float
    amplitude: float
    phase: float
    offset: float
    rms_residual: float
    decay_rate: float = 0.0  # 1/ns

    def evaluate(self, times: np.ndarray) -> np.ndarray:
        t = np.asarray(times, dtype=float)
        return _damped_model(t, self.amplitude, self.frequency, self.phase, self.offset, self.decay_rate)

    def to_dict(self) -> dict:
        return asdict(self)


def _model(t, amplitude, frequency, phase, offset):
    return amplitude * np.cos(2.0 * math.pi * frequency * t + phase) + offset


def _damped_model(t, amplitude, frequency, phase, offset, decay_rate):
    return amplitude * np.exp(-decay_rate * t) * np.cos(2.0 * math.pi * frequency * t + phase) + offset


def _linear_fit(t: np.ndarray, y: np.ndarray, frequency: float) -> tuple[np.ndarray, float]:
    w = 2.0 * math.pi * frequency
    design = np.column_stack([np.cos(w * t), np.sin(w * t), np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return coef, float(resid @ resid)


def fit_cosine(
    times: np.ndarray,
    values: np.ndarray,
    f_min: float | None = None,
    f_max: float | None = None,
    residual_limit: float | None = None,
    damped: bool = False,
) -> CosineFit:
    """Fit a single cosine to ``values`` sampled at ``times``; ``damped`` adds an exponential envelope.

    Raises:
        InvalidInputError: mismatched or too short series.
        FitError: flat series, failed refinement, or RMS residual above the limit.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise InvalidInputError(f"times {t.shape} and values {y.shape} must be matching 1-D arrays")
    if t.size < 5:
        raise InvalidInputError(f"Need at least 5 samples to fit a cosine, got {t.size}")
    limit = settings.fit_residual_limit if residual_limit is None else residual_limit

    if np.ptp(y) < MIN_PEAK_TO_PEAK:
        raise FitError("Series is flat; no oscillation to fit", rms_residual=0.0)

    span = float(t[-1] - t[0])
    step = float(np.median(np.diff(t)))
    lo = 0.5 / span if f_min is None else f_min
    hi = 0.5 / step if f_max is None else f_max
    grid = np.arange(lo, hi, 1.0 / (GRID_OVERSAMPLING * span))
    if grid.size == 0:
        raise InvalidInputError(f"Empty frequency grid [{lo}, {hi}]")

    rss = np.array([_linear_fit(t, y, f)[1] for f in grid])
    best_rss = rss.min()
    k = int(np.flatnonzero(rss <= best_rss * (1 + 1e-9) + 1e-15)[0])
    coef, _ = _linear_fit(t, y, grid[k])
    amplitude = float(math.hypot(coef[0], coef[1]))
    phase = float(math.atan2(-coef[1], coef[0]))
    p0 = [amplitude, float(grid[k]), phase, float(coef[2])]

    try:
        if damped:
            params, _ = curve_fit(_damped_model, t, y, p0=[*p0, 0.0], maxfev=20000)
        else:
            params, _ = curve_fit(_model, t, y, p0=p0, maxfev=10000)
    except RuntimeError as exc:
        raise FitError(f"Cosine refinement did not converge: {exc}") from exc

    amplitude, frequency, phase, offset = (float(p) for p in params[:4])
    decay_rate = float(params[4]) if damped else 0.0
    if amplitude < 0:
        amplitude, phase = -amplitude, phase + math.pi
    if frequency < 0:
        frequency, phase = -frequency, -phase
    phase = math.remainder(phase, 2.0 * math.pi)
    rms = float(np.sqrt(np.mean((y - _damped_model(t, amplitude, frequency, phase, offset, decay_rate)) ** 2)))
    fit = CosineFit(frequency, amplitude, phase, offset, rms, decay_rate)
    logger.debug("Cosine fit: f=%.6f GHz, A=%.4f, gamma=%.3e /ns, rms=%.2e", frequency, amplitude, decay_rate, rms)
    if rms > limit:
        raise FitError(f"RMS residual {rms:.3g} exceeds limit {limit}", rms_residual=rms)
    return fit
