import json
import math

import pytest
from pydantic import ValidationError

from src.domain.models.config import Ceilings, RunConfig
from src.domain.models.reports import ClaimRecord, CommandResult, VerificationSummary
from src.domain.services.report_writer import ReportWriter


def test_run_config_defaults():
    config = RunConfig(command="analyze", builtin="grushin")
    assert config.grid is None
    assert config.eps_ladder is None
    assert config.times == [0.25, 0.5, 1.0]
    assert config.method == "eigen"
    assert config.n_paths == 1_000_000
    assert config.ceilings.mc_tv == 0.05
    assert config.enabled("riesz")


@pytest.mark.parametrize(
    "values",
    [
        {"builtin": "grushin", "stencil": 4},
        {"builtin": "grushin", "method": "rk4"},
        {"builtin": "grushin", "claims": ["gaussian", "telepathy"]},
        {"builtin": "grushin", "grid": [0]},
        {"builtin": "grushin", "system": "grushin.sys"},
        {},
        {"builtin": "grushin", "colour": "blue"},
    ],
)
def test_run_config_rejects(values):
    with pytest.raises(ValidationError):
        RunConfig(command="analyze", **values)


def test_config_hash_ignores_where_and_how_loudly():
    base = RunConfig(command="distance", builtin="grushin")
    moved = RunConfig(command="distance", builtin="grushin", out="elsewhere", workers=4, log_level="DEBUG")
    reseeded = RunConfig(command="distance", builtin="grushin", seed=1)
    assert base.config_hash() == moved.config_hash()
    assert base.config_hash() != reseeded.config_hash()
    assert len(base.config_hash()) == 64
    assert "out" not in base.canonical()


def test_ceilings_file(tmp_path):
    path = tmp_path / "ceilings.json"
    path.write_text(json.dumps({"harnack": 5.0}))
    ceilings = Ceilings.from_file(path)
    assert ceilings.harnack == 5.0
    assert ceilings.poincare == 10.0

    path.write_text(json.dumps({"harnak": 5.0}))
    with pytest.raises(ValidationError):
        Ceilings.from_file(path)
    path.write_text(json.dumps({"harnack": -1.0}))
    with pytest.raises(ValidationError):
        Ceilings.from_file(path)


def test_verification_summary():
    ok = ClaimRecord(claim="closure", passed=True)
    bad = ClaimRecord(claim="type-r", passed=False)
    skipped = ClaimRecord(claim="gaussian", passed=False, skipped=True)
    assert VerificationSummary.from_claims({}, [ok]).passed
    assert not VerificationSummary.from_claims({}, [ok, bad]).passed
    assert not VerificationSummary.from_claims({}, [ok, bad, skipped], gate="type-r").passed
    assert not VerificationSummary.from_claims({}, [skipped]).passed


def test_report_writer_output(tmp_path, settings):
    config = RunConfig(command="volumes", builtin="grushin", out=str(tmp_path))
    result = CommandResult(result={"nu": math.inf, "ratio": 4.0}, tables={"volumes": "r,volume\n"})
    path = ReportWriter(settings).write(config, result)
    assert path == tmp_path / "volumes.json"
    data = json.loads(path.read_text())
    assert data["result"]["nu"] is None
    assert data["config_hash"] == config.config_hash()
    assert data["passed"] is None
    assert list(data) == sorted(data)
    assert (tmp_path / "volumes.csv").read_text() == "r,volume\n"
