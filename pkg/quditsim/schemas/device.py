"""Pydantic schemas for the device document.

Frequencies are in GHz (cycles per ns), times in ns. Circuit 0 is the qudit,
circuits 1..N are the qubits.
"""

from pydantic import BaseModel, ConfigDict, Field, model_validator


class CircuitSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    levels: int = Field(..., ge=2, le=9)
    base_freq: float = Field(..., gt=0, description="0-1 transition frequency (GHz)")
    anharmonicity: float = Field(0.0, description="alpha (GHz); transition k-1 -> k is base_freq + (k-1)*alpha")
    t1: float | None = Field(None, gt=0, description="Energy relaxation time (ns); null disables relaxation")
    t2_star: float | None = Field(None, gt=0, description="Ramsey dephasing time (ns); null disables dephasing")

    @model_validator(mode="after")
    def _coherence_bound(self):
        if self.t1 is not None and self.t2_star is not None and self.t2_star > 2 * self.t1:
            raise ValueError(
                f"t2_star ({self.t2_star}) must not exceed 2*t1 ({2 * self.t1})"
            )
        return self

    def transition(self, k: int) -> float:
        """Frequency of the k-1 -> k transition (k >= 1)."""
        return self.base_freq + (k - 1) * self.anharmonicity


class QubitCoupling(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    a: int = Field(..., ge=1, description="First qubit (circuit index)")
    b: int = Field(..., ge=1, description="Second qubit (circuit index)")
    g: float = Field(..., gt=0, description="Exchange coupling (GHz)")

    @model_validator(mode="after")
    def _distinct(self):
        if self.a == self.b:
            raise ValueError(f"qubit coupling needs two distinct qubits, got a=b={self.a}")
        return self


class DeviceSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    circuits: list[CircuitSpec] = Field(..., min_length=2, max_length=5)
    couplings: list[float] = Field(..., description="Qudit-qubit coupling g_j per qubit (GHz)")
    qubit_couplings: list[QubitCoupling] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_couplings(self):
        n_qubits = len(self.circuits) - 1
        if len(self.couplings) != n_qubits:
            raise ValueError(
                f"couplings: expected {n_qubits} entries (one per qubit), got {len(self.couplings)}"
            )
        for j, g in enumerate(self.couplings, start=1):
            if not g > 0:
                raise ValueError(f"couplings[{j - 1}]: g for qubit {j} must be positive, got {g}")
        for qc in self.qubit_couplings:
            if max(qc.a, qc.b) > n_qubits:
                raise ValueError(
                    f"qubit_couplings: qubit index {max(qc.a, qc.b)} exceeds qubit count {n_qubits}"
                )
        return self

    @property
    def qudit(self) -> CircuitSpec:
        return self.circuits[0]

    @property
    def qubits(self) -> list[CircuitSpec]:
        return self.circuits[1:]

    @property
    def n_qubits(self) -> int:
        return len(self.circuits) - 1

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c.levels for c in self.circuits)

    def with_qubit_offset(self, offset: float) -> "DeviceSpec":
        """Copy with every qubit base frequency shifted by ``offset`` GHz."""
        circuits = [self.qudit] + [
            q.model_copy(update={"base_freq": q.base_freq + offset}) for q in self.qubits
        ]
        return self.model_copy(update={"circuits": circuits})
