"""
Simulation studies: level and power of the Laplace test, and the estimation
performance of the adaptive procedure against a fixed Laplace prior.

Data follow y = X beta + e with standard normal design entries, coefficients
drawn from the scenario's truth and e ~ N(0, sigma2 I). A fresh design is
drawn for every replicate when n > p; when n <= p one design is drawn per
scenario and kept.
"""
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from ep_adaptive import streams
from ep_adaptive.adaptive import (
    check_variances, fit_summaries, laplace_estimate, mean_squared_error, miss_rate, zero_pattern_match,
)
from ep_adaptive.config import RIDGE_RCOND, RunConfig, Summary
from ep_adaptive.data import RegressionData
from ep_adaptive.distributions import EpPrior, SpikeSlab, ep_sample, spike_slab_sample
from ep_adaptive.eb_estimation import estimate_q, estimate_variances
from ep_adaptive.errors import BoundaryVarianceError, EpAdaptiveError
from ep_adaptive.testing import (
    NullDistribution, TestKind, decompose_design, laplace_test, oracle_test, reciprocal_condition, simulate_null,
)

logger = logging.getLogger(__name__)

# attempts per requested replicate before an estimation scenario gives up
MAX_ATTEMPT_FACTOR = 10


class StudyKind(str, Enum):
    power = 'power'
    estimation = 'estimation'


class Scenario(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=2)
    p: int = Field(ge=2)
    truth: Union[EpPrior, SpikeSlab]
    replicates: int = Field(gt=0)
    seed: int = Field(ge=0, lt=2 ** 64)
    sigma2: float = Field(1., gt=0)

    @property
    def fixed_design(self) -> bool:
        return self.n <= self.p

    @property
    def truth_name(self) -> str:
        return 'ep' if isinstance(self.truth, EpPrior) else 'spike_slab'

    @property
    def parameter(self) -> float:
        return self.truth.q if isinstance(self.truth, EpPrior) else self.truth.pi

    @property
    def label(self) -> str:
        key = 'q' if isinstance(self.truth, EpPrior) else 'pi'
        return f'n{self.n}_p{self.p}_{key}{self.parameter:g}'


class PowerRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    replicate: int
    statistic: float
    lower: float
    upper: float
    reject: bool
    tail_prob: float
    kind: TestKind
    oracle_statistic: Optional[float] = None
    oracle_reject: Optional[bool] = None


class EstimationRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    replicate: int
    q_hat: float
    sigma2_hat: float
    tau2_hat: float
    reject: bool
    mse_adaptive: float
    mse_laplace: float
    mse_ungated: float
    mode_mse_adaptive: float
    mode_mse_laplace: float
    zero_match_adaptive: float
    zero_match_laplace: float
    miss_adaptive: float
    miss_laplace: float
    min_ess_adaptive: float
    min_ess_laplace: float


class SimReport(BaseModel):
    """
    Per-replicate results of one scenario; vectors run over completed
    replicates in replicate order
    """
    model_config = ConfigDict(frozen=True)

    scenario: Scenario
    study: StudyKind
    power_rows: Tuple[PowerRow, ...] = ()
    estimation_rows: Tuple[EstimationRow, ...] = ()
    attempts: int = 0
    boundary_replicates: int = 0
    failed_replicates: int = 0

    @property
    def rows(self) -> Sequence[BaseModel]:
        return self.power_rows if self.study == StudyKind.power else self.estimation_rows

    @property
    def completed(self) -> int:
        return len(self.rows)

    def _column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    @property
    def rejection_rate(self) -> float:
        return float(self._column('reject').mean()) if self.completed else float('nan')

    @property
    def rejection_se(self) -> float:
        r = self.rejection_rate
        return float(np.sqrt(r * (1. - r) / self.completed)) if self.completed else float('nan')

    @property
    def oracle_rejection_rate(self) -> Optional[float]:
        flags = [r.oracle_reject for r in self.power_rows if r.oracle_reject is not None]
        return float(np.mean(flags)) if flags else None

    @property
    def mse_adaptive(self) -> np.ndarray:
        return self._column('mse_adaptive')

    @property
    def mse_laplace(self) -> np.ndarray:
        return self._column('mse_laplace')

    @property
    def mse_ungated(self) -> np.ndarray:
        return self._column('mse_ungated')

    @property
    def selection_metrics(self) -> Dict[str, np.ndarray]:
        return {
            name: self._column(name)
            for name in ('zero_match_adaptive', 'zero_match_laplace', 'miss_adaptive', 'miss_laplace')
        }

    def frame(self) -> pd.DataFrame:
        records = [r.model_dump(mode='json') for r in self.rows]
        if self.study == StudyKind.power:
            columns = list(PowerRow.model_fields)
            for rec in records:
                rec.update(n=self.scenario.n, p=self.scenario.p, truth=self.scenario.truth_name,
                           parameter=self.scenario.parameter)
            columns = columns[:1] + ['n', 'p', 'truth', 'parameter'] + columns[1:]
        else:
            columns = list(EstimationRow.model_fields)
        return pd.DataFrame.from_records(records, columns=columns)

    def summary(self) -> Dict[str, Optional[float]]:
        out = {
            'completed': self.completed,
            'attempts': self.attempts,
            'boundary_replicates': self.boundary_replicates,
            'failed_replicates': self.failed_replicates,
            'rejection_rate': self.rejection_rate,
            'rejection_se': self.rejection_se,
        }
        if self.study == StudyKind.power:
            out['oracle_rejection_rate'] = self.oracle_rejection_rate
        elif self.completed:
            adaptive, laplace, ungated = self.mse_adaptive, self.mse_laplace, self.mse_ungated
            out.update(
                adaptive_worse_gated=float(np.mean(adaptive > laplace)),
                adaptive_worse_ungated=float(np.mean(ungated > laplace)),
                median_mse_ratio=float(np.median(adaptive / laplace)),
                mean_mse_adaptive=float(adaptive.mean()),
                mean_mse_laplace=float(laplace.mean()),
                mean_mse_ungated=float(ungated.mean()),
            )
        return out


def grid_scenarios(ns: Iterable[int], ps: Iterable[int], replicates: int, seed: int,
                   qs: Iterable[float] = (), pis: Iterable[float] = (), tau2: float = 1.,
                   sigma2: float = 1.) -> List[Scenario]:
    """
    Scenarios for every (n, p, q) and (n, p, pi) combination; scenario seeds
    are derived from ``seed`` and the scenario's position in the grid
    """
    ns, ps = list(ns), list(ps)
    truths = [EpPrior(tau2=tau2, q=q) for q in qs] + [SpikeSlab(pi=pi, tau2=tau2) for pi in pis]
    out = []
    for n in ns:
        for p in ps:
            for truth in truths:
                out.append(Scenario(
                    n=n, p=p, truth=truth, replicates=replicates, sigma2=sigma2,
                    seed=streams.child_seed(seed, streams.REPLICATES, len(out)),
                ))
    if not out:
        raise ValueError('scenario grid is empty')
    return out


def draw_truth(truth: Union[EpPrior, SpikeSlab], p: int, rng) -> np.ndarray:
    if isinstance(truth, EpPrior):
        return ep_sample(p, truth, rng)
    return spike_slab_sample(p, truth, rng)


def fixed_design(scenario: Scenario) -> np.ndarray:
    return streams.substream(scenario.seed, streams.DESIGNS).standard_normal((scenario.n, scenario.p))


def simulate_replicate(scenario: Scenario, attempt: int,
                       design: Optional[np.ndarray] = None) -> Tuple[RegressionData, np.ndarray]:
    """
    Data set number ``attempt`` of ``scenario`` with its true coefficients
    """
    rng = streams.substream(scenario.seed, streams.REPLICATES, attempt)
    X = design if design is not None else rng.standard_normal((scenario.n, scenario.p))
    beta = draw_truth(scenario.truth, scenario.p, rng)
    y = X @ beta + rng.normal(0., np.sqrt(scenario.sigma2), scenario.n)
    return RegressionData(y=y, X=X), beta


def _ordered_map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


class NullCache:
    """
    Null distributions shared between replicates: the i.i.d. Laplace null per
    p and the ridge null per fixed design
    """

    def __init__(self, mc_reps: int, seed: int, workers: int = 1):
        self.mc_reps = mc_reps
        self.seed = seed
        self.workers = workers
        self._nulls: Dict[tuple, NullDistribution] = {}
        self._lock = threading.Lock()

    def ols(self, p: int) -> NullDistribution:
        with self._lock:
            key = ('ols', p)
            if key not in self._nulls:
                self._nulls[key] = simulate_null(
                    None, p, self.mc_reps, streams.child_seed(self.seed, streams.NULL_DRAWS, p), workers=self.workers,
                )
            return self._nulls[key]

    def for_design(self, scenario: Scenario, design: Optional[np.ndarray]) -> NullDistribution:
        if design is None or (scenario.n > scenario.p and reciprocal_condition(design.T @ design) >= RIDGE_RCOND):
            return self.ols(scenario.p)
        with self._lock:
            key = ('ridge', scenario.seed, scenario.n, scenario.p)
            if key not in self._nulls:
                self._nulls[key] = simulate_null(
                    decompose_design(design), scenario.p, self.mc_reps, scenario.seed, workers=self.workers,
                )
            return self._nulls[key]


def _power_replicate(scenario: Scenario, attempt: int, design, alpha: float, nulls: NullCache) -> Optional[PowerRow]:
    data, beta = simulate_replicate(scenario, attempt, design)
    try:
        test = laplace_test(data, alpha, nulls.mc_reps, scenario.seed, null=nulls.for_design(scenario, design),
                            check_standardized=False)
    except EpAdaptiveError as e:
        logger.info('%s replicate %d failed: %s', scenario.label, attempt, e)
        return None
    try:
        oracle = oracle_test(beta, alpha, nulls.ols(scenario.p), n=scenario.n)
        oracle_statistic, oracle_reject = oracle.statistic, oracle.reject
    except EpAdaptiveError:
        oracle_statistic = oracle_reject = None
    return PowerRow(
        replicate=attempt,
        statistic=test.statistic,
        lower=test.lower_quantile,
        upper=test.upper_quantile,
        reject=test.reject,
        tail_prob=test.null_tail_prob,
        kind=test.kind,
        oracle_statistic=oracle_statistic,
        oracle_reject=oracle_reject,
    )


def run_power_study(scenarios: Sequence[Scenario], alpha: float = .05, mc_reps: int = 100_000, seed: int = 0,
                    workers: int = 1) -> List[SimReport]:
    """
    Rejection rates of the Laplace test (and of the oracle test on the true
    coefficients) for every scenario
    """
    if not scenarios:
        raise ValueError('scenario grid is empty')
    nulls = NullCache(mc_reps, seed, workers)
    reports = []
    for scenario in scenarios:
        design = fixed_design(scenario) if scenario.fixed_design else None
        results = _ordered_map(
            lambda a: _power_replicate(scenario, a, design, alpha, nulls), range(scenario.replicates), workers,
        )
        rows = tuple(r for r in results if r is not None)
        report = SimReport(
            scenario=scenario, study=StudyKind.power, power_rows=rows, attempts=scenario.replicates,
            failed_replicates=scenario.replicates - len(rows),
        )
        logger.info('%s: rejection rate %.3f (se %.3f)', scenario.label, report.rejection_rate, report.rejection_se)
        reports.append(report)
    return reports


class _Boundary:
    pass


_BOUNDARY = _Boundary()


def _estimation_replicate(scenario: Scenario, attempt: int, design, config: RunConfig,
                          nulls: NullCache) -> Union[EstimationRow, _Boundary, None]:
    data, beta = simulate_replicate(scenario, attempt, design)
    fit_config = config.model_copy(update={'seed': streams.child_seed(scenario.seed, streams.GIBBS, attempt)})
    try:
        test = laplace_test(data, config.alpha, nulls.mc_reps, scenario.seed, null=nulls.for_design(scenario, design),
                            check_standardized=False)
        variances = estimate_variances(data)
        check_variances(variances)
        q_est = estimate_q(data, test.kind)
        laplace_mode, laplace_draws = laplace_estimate(data, variances, Summary.both, fit_config)
        ep_prior = EpPrior(tau2=variances.tau2_hat, q=q_est.q_hat)
        ep_mode, ep_draws = fit_summaries(data, ep_prior, variances.sigma2_hat, Summary.both, fit_config)
    except BoundaryVarianceError:
        logger.debug('%s attempt %d has boundary variance estimates', scenario.label, attempt)
        return _BOUNDARY
    except EpAdaptiveError as e:
        logger.info('%s attempt %d failed: %s', scenario.label, attempt, e)
        return None

    gated = config.gate and not test.reject
    mode, draws = (laplace_mode, laplace_draws) if gated else (ep_mode, ep_draws)
    threshold = config.selection_threshold
    return EstimationRow(
        replicate=attempt,
        q_hat=q_est.q_hat,
        sigma2_hat=variances.sigma2_hat,
        tau2_hat=variances.tau2_hat,
        reject=test.reject,
        mse_adaptive=mean_squared_error(draws.mean, beta),
        mse_laplace=mean_squared_error(laplace_draws.mean, beta),
        mse_ungated=mean_squared_error(ep_draws.mean, beta),
        mode_mse_adaptive=mean_squared_error(mode.beta, beta),
        mode_mse_laplace=mean_squared_error(laplace_mode.beta, beta),
        zero_match_adaptive=zero_pattern_match(mode.beta, beta),
        zero_match_laplace=zero_pattern_match(laplace_mode.beta, beta),
        miss_adaptive=miss_rate(mode.beta, beta, threshold),
        miss_laplace=miss_rate(laplace_mode.beta, beta, threshold),
        min_ess_adaptive=draws.min_ess,
        min_ess_laplace=laplace_draws.min_ess,
    )


def run_estimation_study(scenarios: Sequence[Scenario], config: RunConfig = RunConfig(standardize=False),
                         mc_reps: Optional[int] = None) -> List[SimReport]:
    """
    Adaptive, ungated and Laplace posterior means and modes on the same data
    sets. Replicates with boundary variance estimates are replaced by further
    draws until each scenario has its quota, and are counted.
    """
    if not scenarios:
        raise ValueError('scenario grid is empty')
    nulls = NullCache(mc_reps or config.mc_reps, config.seed, config.workers)
    reports = []
    for scenario in scenarios:
        design = fixed_design(scenario) if scenario.fixed_design else None
        rows: List[EstimationRow] = []
        boundary = failed = attempts = 0
        limit = MAX_ATTEMPT_FACTOR * scenario.replicates
        while len(rows) < scenario.replicates and attempts < limit:
            batch = range(attempts, min(attempts + scenario.replicates - len(rows), limit))
            results = _ordered_map(
                lambda a: _estimation_replicate(scenario, a, design, config, nulls), batch, config.workers,
            )
            attempts = batch.stop
            for result in results:
                if result is _BOUNDARY:
                    boundary += 1
                elif result is None:
                    failed += 1
                else:
                    rows.append(result)
        if len(rows) < scenario.replicates:
            logger.warning('%s: only %d of %d replicates completed after %d attempts',
                           scenario.label, len(rows), scenario.replicates, attempts)
        report = SimReport(
            scenario=scenario, study=StudyKind.estimation, estimation_rows=tuple(rows), attempts=attempts,
            boundary_replicates=boundary, failed_replicates=failed,
        )
        logger.info('%s: %s', scenario.label, report.summary())
        reports.append(report)
    return reports
