from typing import Any

from pydantic import BaseModel, Field

REPORT_VERSION = "1.0.0"

MODULE_VERSIONS = {
    "symbolic": "1.0.0",
    "metric": "1.0.0",
    "heat": "1.0.0",
    "stochastic": "1.0.0",
    "reports": REPORT_VERSION,
}


class Extremizer(BaseModel):
    """Sample at which a reported constant is attained."""

    x: list[float]
    y: list[float] | None = None
    t: float | None = None
    r: float | None = None
    value: float
    label: str | None = None


class BoundReport(BaseModel):
    claim: str
    description: str
    constants: dict[str, float]
    extremizers: dict[str, Extremizer] = Field(default_factory=dict)
    n_samples: int = 0
    n_excluded: int = 0
    ceilings: dict[str, float] = Field(default_factory=dict)
    tracked: list[str] = Field(default_factory=list)
    levels: list[dict[str, float]] = Field(default_factory=list)
    drift: dict[str, float] = Field(default_factory=dict)
    stable: bool | None = None
    within_ceilings: bool = True
    passed: bool = False
    notes: list[str] = Field(default_factory=list)


class ClaimRecord(BaseModel):
    claim: str
    passed: bool
    stable: bool | None = None
    constants: dict[str, float] = Field(default_factory=dict)
    detail: str = ""
    skipped: bool = False


class ClosureReport(BaseModel):
    system: dict[str, Any]
    status: str
    dim: int
    basis: list[str]
    depths: list[int]
    structure_constants: dict[str, dict[str, str]]
    generator_coordinates: list[dict[str, str]]
    lower_central_series: list[int] = Field(default_factory=list)
    nilpotency: str | None = None
    type_r: str | None = None
    type_r_passed: bool | None = None
    hormander: str | None = None
    hormander_passed: bool | None = None
    min_rank: int | None = None


class VerificationSummary(BaseModel):
    system: dict[str, Any]
    claims: list[ClaimRecord]
    gate: str | None = None
    passed: bool

    @classmethod
    def from_claims(cls, system: dict[str, Any], claims: list[ClaimRecord], gate: str | None = None):
        enabled = [c for c in claims if not c.skipped]
        passed = gate is None and bool(enabled) and all(c.passed for c in enabled)
        return cls(system=system, claims=claims, gate=gate, passed=passed)


class ReportEnvelope(BaseModel):
    """Every file written under --out: command result plus provenance."""

    command: str
    config_hash: str
    versions: dict[str, str] = Field(default_factory=lambda: dict(MODULE_VERSIONS))
    settings: dict[str, Any] = Field(default_factory=dict)
    config: dict[str, Any] = Field(default_factory=dict)
    result: dict[str, Any]
    passed: bool | None = None


class CommandResult(BaseModel):
    """What a command hands to the report writer: a JSON result and named CSV tables."""

    result: dict[str, Any]
    tables: dict[str, str] = Field(default_factory=dict)
    passed: bool | None = None
