"""
Machine-readable artifacts: JSON reports validated by pydantic file models and
CSV tables written through pandas.

Floats in JSON use the shortest representation that round-trips exactly, so
two runs with the same seed can be compared byte for byte.
"""
import json
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Type

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from ep_adaptive import __version__
from ep_adaptive.adaptive import AdaptiveResult
from ep_adaptive.config import RunConfig
from ep_adaptive.simulation import SimReport, StudyKind
from ep_adaptive.solvers import ModeFit, PosteriorDraws
from ep_adaptive.testing import TestOutcome

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = '%.17g'
COEFFICIENT_COLUMNS = ('index', 'name', 'mode', 'posterior_mean', 'q025', 'q50', 'q975', 'ess')


class TestReportFile(TestOutcome):
    seed: int
    version: str = __version__

    @classmethod
    def from_outcome(cls, outcome: TestOutcome, seed: int) -> 'TestReportFile':
        return cls(**outcome.model_dump(), seed=seed)


class PriorFit(BaseModel):
    """
    Summaries of one fit, as reported per prior in the fit table
    """
    model_config = ConfigDict(frozen=True)

    q: float
    mode_sparsity: Optional[float] = None
    mode_objective: Optional[float] = None
    mode_converged: Optional[bool] = None
    min_ess: Optional[float] = None


def prior_fit(q: float, mode: Optional[ModeFit], draws: Optional[PosteriorDraws]) -> PriorFit:
    fields = {}
    if mode is not None:
        fields.update(mode_sparsity=mode.sparsity_rate, mode_objective=mode.objective, mode_converged=mode.converged)
    if draws is not None:
        fields.update(min_ess=draws.min_ess)
    return PriorFit(q=q, **fields)


class FitReportFile(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int
    version: str = __version__
    n: int
    p: int
    label: str
    q_used: float
    q_hat: float
    kurtosis: float
    q_clamped: bool
    sigma2_hat: float
    tau2_hat: float
    test: TestOutcome
    iters: int
    burn_in: int
    thinning: int
    adaptive: PriorFit
    laplace: PriorFit
    names: List[str]
    mode: Optional[List[float]] = None
    posterior_mean: Optional[List[float]] = None


class ScenarioSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str
    n: int
    p: int
    truth: str
    parameter: float
    replicates: int
    seed: int
    rows_file: str
    completed: int
    attempts: int
    boundary_replicates: int
    failed_replicates: int
    rejection_rate: Optional[float] = None
    rejection_se: Optional[float] = None
    oracle_rejection_rate: Optional[float] = None
    adaptive_worse_gated: Optional[float] = None
    adaptive_worse_ungated: Optional[float] = None
    median_mse_ratio: Optional[float] = None
    mean_mse_adaptive: Optional[float] = None
    mean_mse_laplace: Optional[float] = None
    mean_mse_ungated: Optional[float] = None


class StudySummaryFile(BaseModel):
    model_config = ConfigDict(frozen=True)

    study: StudyKind
    seed: int
    alpha: float
    mc_reps: int
    version: str = __version__
    scenarios: List[ScenarioSummary]


class Manifest(BaseModel):
    """
    Everything needed to replay a command: its arguments, the resolved
    configuration and the files it wrote
    """
    model_config = ConfigDict(frozen=True)

    command: str
    argv: List[str]
    version: str = __version__
    config: RunConfig
    files: List[str]


FILE_MODELS: Tuple[Type[BaseModel], ...] = (TestReportFile, FitReportFile, StudySummaryFile, Manifest)


def write_json(model: BaseModel, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=2) + '\n', encoding='utf-8')
    logger.info('wrote %s', path)
    return path


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')
    logger.info('wrote %s (%d rows)', path, len(frame))
    return path


def write_schemas(out_dir: Path) -> List[Path]:
    """One ``<Model>.schema.json`` per file model"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for model in FILE_MODELS:
        path = out_dir / f'{model.__name__}.schema.json'
        path.write_text(json.dumps(model.model_json_schema(), indent=2) + '\n', encoding='utf-8')
        paths.append(path)
    return paths


def outcome_report(outcome: TestOutcome, seed: int) -> TestReportFile:
    return TestReportFile.from_outcome(outcome, seed)


def fit_report(result: AdaptiveResult, laplace_fit: Tuple[Optional[ModeFit], Optional[PosteriorDraws]],
               names: Sequence[str], config: RunConfig) -> FitReportFile:
    """
    ``laplace_fit`` is the fit of the same data under q = 1, reported beside
    the adaptive fit
    """
    return FitReportFile(
        seed=config.seed,
        n=result.test.n,
        p=result.test.p,
        label=result.label,
        q_used=result.q_used,
        q_hat=result.q_estimate.q_hat,
        kurtosis=result.q_estimate.kurtosis,
        q_clamped=result.q_estimate.clamped,
        sigma2_hat=result.variances.sigma2_hat,
        tau2_hat=result.variances.tau2_hat,
        test=result.test,
        iters=config.chain.iters,
        burn_in=config.chain.burn_in,
        thinning=config.chain.thinning,
        adaptive=prior_fit(result.q_used, result.mode, result.draws),
        laplace=prior_fit(1., *laplace_fit),
        names=list(names),
        mode=result.mode.beta.tolist() if result.mode is not None else None,
        posterior_mean=result.posterior_mean.tolist() if result.posterior_mean is not None else None,
    )


def coefficient_frame(result: AdaptiveResult, names: Sequence[str]) -> pd.DataFrame:
    """
    One row per coefficient; summaries that were not requested are left empty
    """
    p = len(names)
    blank = np.full(p, np.nan)
    q025 = q50 = q975 = ess = posterior_mean = blank
    if result.draws is not None:
        q025, q50, q975 = result.draws.quantiles((.025, .5, .975))
        ess = result.draws.ess_per_coordinate
        posterior_mean = result.posterior_mean
    return pd.DataFrame({
        'index': np.arange(1, p + 1),
        'name': list(names),
        'mode': result.mode.beta if result.mode is not None else blank,
        'posterior_mean': posterior_mean,
        'q025': q025,
        'q50': q50,
        'q975': q975,
        'ess': ess,
    }, columns=list(COEFFICIENT_COLUMNS))


def scenario_summary(report: SimReport, rows_file: str) -> ScenarioSummary:
    scenario = report.scenario
    stats = {k: (None if v is None or not np.isfinite(v) else v) for k, v in report.summary().items()}
    return ScenarioSummary(
        label=scenario.label,
        n=scenario.n,
        p=scenario.p,
        truth=scenario.truth_name,
        parameter=scenario.parameter,
        replicates=scenario.replicates,
        seed=scenario.seed,
        rows_file=rows_file,
        **stats,
    )


def study_summary(study: StudyKind, reports: Sequence[SimReport], rows_files: Sequence[str],
                  config: RunConfig) -> StudySummaryFile:
    return StudySummaryFile(
        study=study,
        seed=config.seed,
        alpha=config.alpha,
        mc_reps=config.mc_reps,
        scenarios=[scenario_summary(r, f) for r, f in zip(reports, rows_files)],
    )
