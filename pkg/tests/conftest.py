"""Shared test fixtures for quditsim."""

import pytest

from quditsim.schemas.device import CircuitSpec, DeviceSpec
from quditsim.services.experiments import prepare_interaction_point
from quditsim.services.planner import plan_frequencies


def make_device(
    qudit: tuple[int, float, float],
    qubits: list[float],
    g: float,
    qubit_levels: int = 2,
    t1: float | None = None,
    t2_star: float | None = None,
) -> DeviceSpec:
    """Device from (levels, base_freq, anharmonicity) of the qudit and qubit frequencies."""
    levels, base, alpha = qudit
    circuits = [CircuitSpec(levels=levels, base_freq=base, anharmonicity=alpha, t1=t1, t2_star=t2_star)]
    circuits += [
        CircuitSpec(levels=qubit_levels, base_freq=f, t1=t1, t2_star=t2_star) for f in qubits
    ]
    return DeviceSpec(circuits=circuits, couplings=[g] * len(qubits))


@pytest.fixture
def device_factory():
    """The make_device helper, for tests that need a custom layout."""
    return make_device


@pytest.fixture
def jc_device() -> DeviceSpec:
    """Resonant qudit-qubit pair at 5 GHz with g = 10 MHz (m = 2)."""
    return make_device((2, 5.0, 0.0), [5.0], 0.01)


@pytest.fixture
def weak_m3_device() -> DeviceSpec:
    """m = 3 device deep in the perturbative regime: qubits 4.55 and 5.2 GHz, g = 10 MHz."""
    return make_device((3, 5.0, -0.25), [4.55, 5.2], 0.01)


@pytest.fixture(scope="session")
def planned_devices():
    """Planner-built devices for m = 3..5 (g = 23 MHz, seed 0), computed once."""
    cache: dict[int, DeviceSpec] = {}

    def get(m: int) -> DeviceSpec:
        if m not in cache:
            plan = plan_frequencies(m, 5.0, -0.25, 0.023, seed=0)
            cache[m] = plan.to_device(qudit_levels=5)
        return cache[m]

    return get


@pytest.fixture(scope="session")
def interaction_points(planned_devices):
    """Re-tuned interaction points for the planned devices, computed once."""
    cache = {}

    def get(m: int):
        if m not in cache:
            cache[m] = prepare_interaction_point(planned_devices(m), m)
        return cache[m]

    return get
