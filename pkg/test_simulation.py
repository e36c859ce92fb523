import numpy as np
import pytest
from pydantic import ValidationError

from ep_adaptive.config import ChainConfig, RunConfig, SolverConfig
from ep_adaptive.distributions import EpPrior, SpikeSlab
from ep_adaptive.simulation import (
    PowerRow, Scenario, StudyKind, fixed_design, grid_scenarios, run_estimation_study, run_power_study,
    simulate_replicate,
)

TINY = RunConfig(
    seed=3,
    mc_reps=2000,
    standardize=False,
    chain=ChainConfig(iters=120, burn_in=20),
    solver=SolverConfig(tol=1e-8, max_iter=200, restarts=3),
)


def test_grid_scenarios():
    scenarios = grid_scenarios([50, 100], [10, 20, 40], replicates=5, seed=1, qs=[.5, 1.], pis=[.2])
    assert len(scenarios) == 2 * 3 * 3
    assert len({s.seed for s in scenarios}) == len(scenarios)
    assert [s.truth_name for s in scenarios[:3]] == ['ep', 'ep', 'spike_slab']
    assert scenarios[2].label == 'n50_p10_pi0.2'
    assert scenarios == grid_scenarios([50, 100], [10, 20, 40], replicates=5, seed=1, qs=[.5, 1.], pis=[.2])
    assert scenarios[0].seed != grid_scenarios([50], [10], 5, seed=2, qs=[.5])[0].seed


def test_grid_needs_a_truth():
    with pytest.raises(ValueError):
        grid_scenarios([50], [10], replicates=5, seed=0)
    with pytest.raises(ValidationError):
        Scenario(n=10, p=1, truth=EpPrior(tau2=1., q=1.), replicates=1, seed=0)


def test_replicates_are_reproducible():
    scenario = Scenario(n=30, p=10, truth=EpPrior(tau2=1., q=.5), replicates=3, seed=8)
    a_data, a_beta = simulate_replicate(scenario, 2)
    b_data, b_beta = simulate_replicate(scenario, 2)
    np.testing.assert_array_equal(a_data.y, b_data.y)
    np.testing.assert_array_equal(a_beta, b_beta)
    c_data, _ = simulate_replicate(scenario, 1)
    assert not np.array_equal(a_data.X, c_data.X)


def test_wide_scenarios_keep_their_design():
    scenario = Scenario(n=20, p=40, truth=SpikeSlab(pi=.2, tau2=1.), replicates=3, seed=4)
    assert scenario.fixed_design
    design = fixed_design(scenario)
    np.testing.assert_array_equal(design, fixed_design(scenario))
    a, beta_a = simulate_replicate(scenario, 0, design)
    b, beta_b = simulate_replicate(scenario, 1, design)
    np.testing.assert_array_equal(a.X, b.X)
    assert not np.array_equal(beta_a, beta_b)
    assert np.mean(beta_a == 0.) > .5


def _power(workers=1):
    scenarios = grid_scenarios([40], [10], replicates=10, seed=5, qs=[1.])
    return run_power_study(scenarios, alpha=.05, mc_reps=2000, seed=5, workers=workers)


def test_power_study_rows():
    (report,) = _power()
    assert report.study == StudyKind.power
    assert report.completed == 10 and report.attempts == 10 and report.failed_replicates == 0
    frame = report.frame()
    assert list(frame.columns[:5]) == ['replicate', 'n', 'p', 'truth', 'parameter']
    assert set(PowerRow.model_fields) <= set(frame.columns)
    assert frame['replicate'].tolist() == list(range(10))
    assert 0. <= report.rejection_rate <= 1.
    assert report.oracle_rejection_rate is not None
    assert (frame['kind'] == 'ols').all()
    summary = report.summary()
    assert summary['completed'] == 10
    assert 'oracle_rejection_rate' in summary


@pytest.mark.parametrize('workers', [3, 8])
def test_power_study_is_reproducible_across_workers(workers):
    a, = _power()
    b, = _power(workers=workers)
    assert a.power_rows == b.power_rows
    assert a.summary() == b.summary()


def test_generated_designs_skip_the_norm_warning(recwarn, caplog):
    report, = _power()
    assert report.completed == 10
    assert not [w for w in recwarn if 'squared norm n' in str(w.message)]
    assert not [r for r in caplog.records if 'squared norm n' in r.getMessage()]


def test_power_study_on_wide_design():
    scenarios = grid_scenarios([20], [30], replicates=4, seed=6, qs=[1.])
    report, = run_power_study(scenarios, mc_reps=1000, seed=6)
    assert {r.kind.value for r in report.power_rows} == {'ridge'}


def test_power_study_needs_scenarios():
    with pytest.raises(ValueError):
        run_power_study([])


def test_estimation_study_rows():
    scenarios = grid_scenarios([30], [10], replicates=3, seed=2, qs=[.5])
    report, = run_estimation_study(scenarios, config=TINY)
    assert report.study == StudyKind.estimation
    assert report.completed == 3
    assert report.attempts == 3 + report.boundary_replicates + report.failed_replicates
    for row in report.estimation_rows:
        for name in ('zero_match_adaptive', 'zero_match_laplace', 'miss_adaptive', 'miss_laplace'):
            assert 0. <= getattr(row, name) <= 1.
        if row.reject:
            assert row.mse_adaptive == row.mse_ungated
        else:
            assert row.mse_adaptive == row.mse_laplace
    assert report.frame().shape == (3, 16)
    assert all(v.shape == (3,) for v in report.selection_metrics.values())
    summary = report.summary()
    assert summary['mean_mse_laplace'] == pytest.approx(report.mse_laplace.mean())


@pytest.mark.parametrize('workers', [2, 8])
def test_estimation_study_is_reproducible(workers):
    scenarios = grid_scenarios([30], [10], replicates=2, seed=9, qs=[2.])
    a, = run_estimation_study(scenarios, config=TINY)
    b, = run_estimation_study(scenarios, config=TINY.model_copy(update={'workers': workers}))
    assert a.estimation_rows == b.estimation_rows


def test_ungated_study_ignores_the_test():
    scenarios = grid_scenarios([30], [10], replicates=2, seed=10, qs=[1.])
    report, = run_estimation_study(scenarios, config=TINY.model_copy(update={'gate': False}))
    for row in report.estimation_rows:
        assert row.mse_adaptive == row.mse_ungated


STUDY_CONFIG = RunConfig(
    seed=11,
    mc_reps=20_000,
    standardize=False,
    chain=ChainConfig(iters=10_500, burn_in=500),
    solver=SolverConfig(restarts=10),
    workers=8,
)


@pytest.mark.slow
def test_level_under_laplace_truth():
    scenarios = grid_scenarios([200], [100], replicates=1000, seed=12, qs=[1.])
    report, = run_power_study(scenarios, mc_reps=100_000, seed=12, workers=8)
    assert .03 <= report.rejection_rate <= .07
    assert .03 <= report.oracle_rejection_rate <= .07


@pytest.mark.slow
def test_power_against_other_shapes():
    scenarios = grid_scenarios([200], [100], replicates=500, seed=13, qs=[.25, 4.])
    heavy, light = run_power_study(scenarios, mc_reps=100_000, seed=13, workers=8)
    assert .86 <= heavy.rejection_rate
    assert light.rejection_rate >= .95


@pytest.mark.slow
def test_ridge_power_with_as_many_coefficients_as_observations():
    scenarios = grid_scenarios([100], [100], replicates=200, seed=17, qs=[.25, 1., 4.])
    heavy, laplace, light = run_power_study(scenarios, mc_reps=100_000, seed=17, workers=8)
    assert {r.kind.value for r in heavy.power_rows + laplace.power_rows + light.power_rows} == {'ridge'}
    assert laplace.rejection_rate <= .08
    assert heavy.rejection_rate >= .7
    assert .45 <= light.rejection_rate <= .85


@pytest.mark.slow
def test_half_spike_slab_looks_laplace():
    scenarios = grid_scenarios([200], [100], replicates=500, seed=14, pis=[.5, .1])
    half, sparse = run_power_study(scenarios, mc_reps=100_000, seed=14, workers=8)
    assert half.rejection_rate <= .1
    assert sparse.rejection_rate >= .9


@pytest.mark.slow
@pytest.mark.parametrize('n', [100, 200])
def test_adaptive_beats_laplace_for_heavy_tails(n):
    scenarios = grid_scenarios([n], [100], replicates=100, seed=15, qs=[.25])
    report, = run_estimation_study(scenarios, config=STUDY_CONFIG)
    assert report.completed == 100
    assert np.mean(report.mse_adaptive < report.mse_laplace) >= .8


@pytest.mark.slow
def test_adaptive_matches_laplace_under_laplace_truth():
    scenarios = grid_scenarios([200], [100], replicates=100, seed=16, qs=[1.])
    report, = run_estimation_study(scenarios, config=STUDY_CONFIG)
    summary = report.summary()
    assert summary['adaptive_worse_gated'] <= summary['adaptive_worse_ungated']
    assert .95 <= summary['median_mse_ratio'] <= 1.05


@pytest.mark.slow
@pytest.mark.parametrize('n, gated, ungated', [(100, .12, .56), (200, .34, .67)])
def test_gating_protects_dense_spike_slab(n, gated, ungated):
    scenarios = grid_scenarios([n], [100], replicates=100, seed=18, pis=[.9])
    report, = run_estimation_study(scenarios, config=STUDY_CONFIG)
    summary = report.summary()
    assert report.completed == 100
    assert summary['adaptive_worse_gated'] == pytest.approx(gated, abs=.15)
    assert summary['adaptive_worse_ungated'] == pytest.approx(ungated, abs=.15)
    assert summary['adaptive_worse_gated'] <= summary['adaptive_worse_ungated'] - .1
