import pytest

from src.domain.models.config import RunConfig
from src.domain.symbolic.liealg import CHECKED_AT_POINTS, RANK_DROP_FOUND
from src.domain.symbolic.registry import builtin


def _config(command: str, name: str, **values) -> RunConfig:
    return RunConfig(command=command, builtin=name, **values)


def test_sources_join_the_rank_check(services):
    system = builtin("affine_planted")
    assert services.analysis.analyze(system).hormander.kind == CHECKED_AT_POINTS
    verdict = services.analysis.analyze(system, points=[[0.0, 0.0]]).hormander
    assert verdict.kind == RANK_DROP_FOUND
    assert verdict.min_rank == 0


def test_default_ladders(services, grushin):
    systems = services.systems
    config = _config("heat-verify", "grushin")
    assert systems.grid_counts(grushin, config) == [65, 129, 257]
    assert systems.epsilons(grushin, config) == [0.2, 0.1, 0.05]
    assert [g.counts for g in systems.metric_ladder(grushin, config)] == [(65, 65), (129, 129), (257, 257)]
    assert [g.counts for g in systems.heat_ladder(grushin, config)] == [(64, 64), (128, 128), (256, 256)]

    motion = builtin("motion_group")
    assert systems.grid_counts(motion, config) == [33, 65]
    assert systems.epsilons(motion, config) == [0.2, 0.1]

    torus = builtin("torus_sin")
    assert [g.counts for g in systems.heat_ladder(torus, config)] == [(64, 64), (128, 128), (256, 256)]


def test_heat_levels_share_their_samples(services, grushin):
    levels = services.heat.levels.heat_levels(grushin, _config("heat-verify", "grushin", grid=[33, 65]))
    coarse, fine = levels
    assert [level.grid.counts for level in levels] == [(32, 32), (64, 64)]
    assert coarse.samples.size == fine.samples.size > 0
    assert fine.grid.nodes()[fine.samples] == pytest.approx(coarse.grid.nodes()[coarse.samples])


@pytest.mark.slow
@pytest.mark.parametrize("name", ["grushin", "torus_sin"])
def test_heat_bounds_hold_on_the_default_ladder(services, name):
    verification = services.heat.heat_verify(builtin(name), _config("heat-verify", name))
    gaussian, diagonal = verification.reports
    assert gaussian.stable
    assert gaussian.passed
    assert diagonal.passed


@pytest.mark.slow
@pytest.mark.parametrize("name", ["grushin", "torus_sin"])
def test_poincare_holds_on_the_default_ladder(services, name):
    report = services.heat.poincare(builtin(name), _config("poincare", name)).reports[0]
    assert report.stable
    assert report.passed


@pytest.mark.slow
def test_riesz_ratios_settle_on_the_grushin_ladder(services, grushin):
    report = services.heat.riesz(grushin, _config("riesz", "grushin")).reports[0]
    assert set(report.drift) == {"ratio_p1.5", "ratio_p4"}
    assert report.stable
    assert report.passed


@pytest.mark.slow
def test_poisson_mass_and_harnack_fit_on_the_grushin_plane(services, grushin):
    verification = services.heat.poisson_verify(grushin, _config("poisson-verify", "grushin"))
    _, harnack = verification.reports
    assert all(entry["mass_defect"] < 1e-6 for entry in verification.diagnostics)
    assert harnack.constants["C"] == 1.0
    assert harnack.passed


@pytest.mark.slow
def test_monte_carlo_endpoints_match_the_grushin_kernel(services, grushin):
    verification = services.oracle.mc_compare(grushin, _config("mc-compare", "grushin"))
    report = verification.reports[0]
    assert report.constants["tv"] <= 0.05
    assert report.constants["escaped"] == 0.0
    assert "step_halving" in report.constants
