import hashlib
import json
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, field_validator, model_validator

CLAIMS = (
    "closure",
    "hormander",
    "type-r",
    "doubling",
    "gaussian",
    "on-diagonal",
    "poisson",
    "harnack",
    "poincare",
    "riesz",
    "mc-oracle",
    "transference",
    "support-qr",
)

# fields that change where or how loudly a run reports, not what it computes
_UNHASHED = {"out", "workers", "log_level"}


class Ceilings(BaseModel):
    """Pass thresholds. The constants are calibration values, not known bounds."""

    model_config = ConfigDict(extra="forbid")

    gaussian_upper: PositiveFloat = 100.0
    gaussian_lower: PositiveFloat = 1e-4
    on_diagonal_spread: PositiveFloat = 50.0
    doubling: PositiveFloat = 64.0
    poisson_ratio: PositiveFloat = 16.0
    poisson_gradient: PositiveFloat = 10.0
    harnack: PositiveFloat = 20.0
    poincare: PositiveFloat = 10.0
    riesz: PositiveFloat = 10.0
    riesz_identity: PositiveFloat = 1e-10
    mc_tv: PositiveFloat = 0.05
    transference: PositiveFloat = 0.05
    drift: PositiveFloat = 0.10
    doubling_drift: PositiveFloat = 0.05

    @classmethod
    def from_file(cls, path: str | Path) -> "Ceilings":
        return cls.model_validate_json(Path(path).read_text())


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: str
    system: str | None = None
    builtin: str | None = None
    params: dict[str, Any] = Field(default_factory=dict)
    # None selects the default ladder for the system's dimension and domain
    grid: list[PositiveInt] | None = None
    eps_ladder: list[PositiveFloat] | None = None
    boundary: str | None = None
    padding: PositiveFloat = 1.0
    stencil: int = 2
    method: str = "eigen"
    seed: int = 0
    claims: list[str] | None = None
    ceilings: Ceilings = Field(default_factory=Ceilings)
    sources: list[list[float]] | None = None
    target: list[float] | None = None
    radii: list[PositiveFloat] = Field(default_factory=lambda: [0.25, 0.5, 0.75, 1.0])
    times: list[PositiveFloat] = Field(default_factory=lambda: [0.25, 0.5, 1.0])
    c_low: PositiveFloat = 3.5
    c_up: PositiveFloat = 5.0
    p_list: list[PositiveFloat] = Field(default_factory=lambda: [1.5, 4.0])
    n_functions: PositiveInt = 10
    n_paths: PositiveInt = 1_000_000
    n_steps: PositiveInt = 200
    n_words: PositiveInt = 100
    max_len: PositiveFloat = 1.0
    out: str = "out"
    workers: PositiveInt = 1
    log_level: str = "INFO"

    @model_validator(mode="after")
    def _one_system(self):
        if (self.system is None) == (self.builtin is None):
            raise ValueError("exactly one of --system and --builtin is required")
        return self

    @field_validator("stencil")
    @classmethod
    def _stencil(cls, v: int) -> int:
        if v not in (1, 2, 3):
            raise ValueError("stencil radius must be 1, 2 or 3")
        return v

    @field_validator("method")
    @classmethod
    def _method(cls, v: str) -> str:
        if v not in ("eigen", "krylov", "implicit-midpoint"):
            raise ValueError(f"unknown semigroup method {v!r}")
        return v

    @field_validator("claims")
    @classmethod
    def _claims(cls, v: list[str] | None) -> list[str] | None:
        if v is None:
            return v
        unknown = sorted(set(v) - set(CLAIMS))
        if unknown:
            raise ValueError(f"unknown claims {unknown}; choose from {list(CLAIMS)}")
        return v

    def enabled(self, claim: str) -> bool:
        return self.claims is None or claim in self.claims

    def canonical(self) -> dict[str, Any]:
        return self.model_dump(mode="json", exclude=_UNHASHED)

    def config_hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()
