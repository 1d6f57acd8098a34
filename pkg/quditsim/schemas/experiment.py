"""Pydantic schemas for run documents (CLI configs)."""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from quditsim.schemas.device import DeviceSpec


class PlannerRequest(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    qudit_base: float = Field(5.0, gt=0, description="Qudit 0-1 frequency (GHz)")
    anharmonicity: float = Field(-0.25, description="Qudit anharmonicity (GHz)")
    g: float = Field(0.023, gt=0, description="Qudit-qubit coupling (GHz)")
    threshold: float | None = Field(None, gt=0, description="Minimum spurious detuning (GHz)")
    budget: int | None = Field(None, ge=10)
    window: float | None = Field(None, gt=0)
    dressing_limit: float | None = Field(None, gt=0)
    lambda_target: float | None = Field(None, gt=0, description="Target m-body coupling (GHz)")
    min_spacing: float | None = Field(None, ge=0, description="Minimum qubit-qubit spacing (GHz)")
    qudit_levels: int = Field(5, ge=2, le=9)
    qubit_levels: int = Field(2, ge=2, le=3)
    qubit_anharmonicity: float = -0.25
    t1: float | None = Field(None, gt=0)
    t2_star: float | None = Field(None, gt=0)


class SolverOptions(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    dt: float | None = Field(None, gt=0, description="RK4 step (ns); default from settings")
    frame: Literal["dressed", "bare"] = "dressed"
    retune: bool = True


class TauGrid(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    start: float = Field(0.0, ge=0)
    stop: float | None = Field(None, gt=0, description="null: periods x nominal Rabi period")
    points: int = Field(201, ge=5)
    periods: float = Field(3.0, gt=0)


class NoiseEnsembleSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    delta_max: float | list[float] = Field(
        0.005, description="Half-width (GHz) of the uniform offset per circuit; scalar or one per circuit"
    )
    ensemble_size: int = Field(20, ge=1)

    @model_validator(mode="after")
    def _non_negative(self):
        widths = self.delta_max if isinstance(self.delta_max, list) else [self.delta_max]
        if any(w < 0 for w in widths):
            raise ValueError("delta_max entries must be non-negative")
        return self

    def widths(self, n_circuits: int) -> list[float]:
        if isinstance(self.delta_max, list):
            if len(self.delta_max) != n_circuits:
                raise ValueError(
                    f"delta_max has {len(self.delta_max)} entries, device has {n_circuits} circuits"
                )
            return list(self.delta_max)
        return [float(self.delta_max)] * n_circuits


class InterferometerSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    tau_i: float | None = Field(None, gt=0, description="Interaction time (ns); null uses the default per m")
    auto_calibrate: bool = Field(False, description="Use tau_i = 1/(8 lambda) from the splitting")
    delta_b: float = Field(0.005, gt=0, description="Qubit Z offset during the phase segment (GHz)")
    tau_b_stop: float | None = Field(None, gt=0, description="null: three periods of m*delta_b")
    tau_b_points: int = Field(41, ge=5)
    calibrate_field: bool = Field(
        True, description="Solve the applied offset so the dressed pair separates by m*delta_b"
    )


class GhzSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    tau: float | None = Field(None, gt=0, description="Preparation time (ns); null uses 1/(8 lambda)")
    interferometric: bool = True


Experiment = Literal["rabi", "noise", "interferometer", "ghz", "plan", "lambda"]


class RunConfig(BaseModel):
    """One CLI run. Exactly one of ``device`` / ``planner`` must be given."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    experiment: Experiment
    m: int = Field(..., ge=2, le=5)
    mode: Literal["pure", "lindblad"] = "pure"
    seed: int = Field(0, ge=0)
    output_dir: str | None = None
    device: DeviceSpec | None = None
    planner: PlannerRequest | None = None
    solver: SolverOptions = Field(default_factory=SolverOptions)
    tau_grid: TauGrid = Field(default_factory=TauGrid)
    noise: NoiseEnsembleSpec = Field(default_factory=NoiseEnsembleSpec)
    interferometer: InterferometerSpec = Field(default_factory=InterferometerSpec)
    ghz: GhzSpec = Field(default_factory=GhzSpec)

    @model_validator(mode="after")
    def _device_source(self):
        if (self.device is None) == (self.planner is None):
            raise ValueError("exactly one of 'device' or 'planner' must be provided")
        if self.device is not None and self.device.n_qubits != self.m - 1:
            raise ValueError(
                f"m={self.m} needs {self.m - 1} qubits, device has {self.device.n_qubits}"
            )
        if self.experiment == "plan" and self.planner is None:
            raise ValueError("experiment 'plan' needs a 'planner' section")
        return self
