from enum import Enum
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Summary(str, Enum):
    mode = 'mode'
    mean = 'mean'
    both = 'both'

    @property
    def wants_mode(self) -> bool:
        return self in (Summary.mode, Summary.both)

    @property
    def wants_mean(self) -> bool:
        return self in (Summary.mean, Summary.both)


class ChainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    iters: int = Field(10500, gt=0)
    burn_in: int = Field(500, ge=0)
    thinning: int = Field(1, gt=0)

    @model_validator(mode='after')
    def _check_burn_in(self):
        if self.iters <= self.burn_in:
            raise ValueError(f'iters ({self.iters}) must exceed burn_in ({self.burn_in})')
        return self

    @property
    def retained(self) -> int:
        return len(range(self.burn_in, self.iters, self.thinning))


class SolverConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    tol: float = Field(1e-10, gt=0)
    max_iter: int = Field(1000, gt=0)
    restarts: int = Field(100, gt=0)


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int = Field(0, ge=0, lt=2 ** 64)
    alpha: float = Field(0.05, gt=0, lt=1)
    mc_reps: int = Field(1_000_000, ge=1000)
    chain: ChainConfig = ChainConfig()
    solver: SolverConfig = SolverConfig()
    standardize: bool = True
    summary: Summary = Summary.both
    out_dir: Path = Path('.')
    workers: int = Field(1, gt=0)
    selection_threshold: float = Field(0.1, gt=0)
    gate: bool = True


# simulation studies discard 500 of 10,500 sweeps
SIMULATION_CHAIN = ChainConfig(iters=10500, burn_in=500, thinning=1)
# data analyses keep every 20th of 1,000,000 post burn-in sweeps
DATA_ANALYSIS_CHAIN = ChainConfig(iters=1000500, burn_in=500, thinning=20)
DEFAULT_SOLVER = SolverConfig(tol=1e-10, max_iter=1000, restarts=100)

# reciprocal condition number of X^T X below which the ridge statistic is used
RIDGE_RCOND = 1e-5
# kurtosis estimates are not inverted below this value
KURTOSIS_FLOOR = 1.9
# eigenvalues of the correlation matrix below this are treated as zero
EIGEN_FLOOR = 1e-12
