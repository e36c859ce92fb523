from typing import Any, Dict, Optional, Tuple

from pydantic import BaseModel, ConfigDict

from ep_adaptive.latex_utils import Content, ContentItem, LatexObject, Math, MultiLine
from ep_adaptive.report import ReportDescriptor
from ep_adaptive.testing import TestOutcome


def format_number(v, places, max_value=None):
    if v is None:
        return ''
    if max_value and v > max_value:
        return '> {:.{}f}'.format(round(max_value, places), places)
    return '{:.{}f}'.format(round(v, places), places)


def format_percent(v, places=1):
    return '' if v is None else format_number(100. * v, places) + '\\%'


def format_count(v):
    return '' if v is None else f'{int(round(v)):,}'


class FitComparison(BaseModel):
    """
    Estimates and summaries of one data set under Laplace and EP priors
    """
    model_config = ConfigDict(frozen=True)

    sigma2_hat: float
    tau2_hat: float
    q_hat: float
    sparsity_laplace: Optional[float] = None
    sparsity_ep: Optional[float] = None
    min_ess_laplace: Optional[float] = None
    min_ess_ep: Optional[float] = None


class TestTable(ReportDescriptor):
    title: ContentItem = 'Results of testing the appropriateness of a Laplace prior'

    def get_description(self) -> Tuple[ContentItem, ...]:
        return (
            'Statistic: OLS or ridge estimate the kurtosis is computed from',
            Content(Math('\\delta^2'), ': ridge constant (0 for OLS)'),
            Content(Math('\\psi_{\\alpha/2}, \\psi_{1-\\alpha/2}'), ': Monte Carlo null quantiles'),
            Content(Math('\\psi'), ': empirical kurtosis of the estimate'),
            Content(Math('\\Pr(\\psi^* \\leq \\psi | q = 1)'), ': null tail probability'),
        )

    def get_columns(self):
        return (
            Math('n'), Math('p'), 'Statistic', Math('\\delta^2'),
            Math('\\psi_{\\alpha/2}'), Math('\\psi_{1-\\alpha/2}'), Math('\\psi'),
            MultiLine(Math('\\Pr(\\psi^* \\leq \\psi'), Math('| q = 1)')),
            'Reject',
        )

    def compute_row(self, data: TestOutcome) -> Dict[str, Any]:
        return data.model_dump()

    def format_row(self, row: Dict[str, Any]) -> Tuple[ContentItem, ...]:
        return (
            str(row['n']), str(row['p']), row['kind'].value, format_number(row['delta2'], 3),
            format_number(row['lower_quantile'], 2), format_number(row['upper_quantile'], 2),
            format_number(row['statistic'], 2), format_number(row['null_tail_prob'], 3),
            'yes' if row['reject'] else 'no',
        )


class FitTable(ReportDescriptor):
    title: ContentItem = (
        'Variance and shape parameter estimates, posterior mode sparsity rates and minimum effective sample '
        'sizes under Laplace (L) and exponential power (EP) priors'
    )

    def get_description(self) -> Tuple[ContentItem, ...]:
        return (
            Content(Math('\\hat\\sigma^2, \\hat\\tau^2'), ': variance estimates'),
            Content(Math('\\hat q'), ': estimated shape'),
            'Mode sparsity: share of exact zeros in the posterior mode',
            'Min. ESS: smallest effective sample size over coefficients',
        )

    def get_columns(self):
        return (
            Math('\\hat\\sigma^2'), Math('\\hat\\tau^2'), Math('\\hat q'),
            MultiLine('Sparsity', 'L'), MultiLine('Sparsity', 'EP'),
            MultiLine('Min. ESS', 'L'), MultiLine('Min. ESS', 'EP'),
        )

    def compute_row(self, data: FitComparison) -> Dict[str, Any]:
        return data.model_dump()

    def format_row(self, row: Dict[str, Any]) -> Tuple[ContentItem, ...]:
        return (
            format_number(row['sigma2_hat'], 4), format_number(row['tau2_hat'], 4), format_number(row['q_hat'], 4),
            format_percent(row['sparsity_laplace']), format_percent(row['sparsity_ep']),
            format_count(row['min_ess_laplace']), format_count(row['min_ess_ep']),
        )
