"""
Command-line front end.

    ep-adaptive test     --data FILE.csv [--response y]      Laplace test report
    ep-adaptive fit      --y Y.csv --x X.csv                 two-stage fit
    ep-adaptive simulate power|estimate --n 200 --p 100 --q 1 .25
    ep-adaptive curves                                       plot-ready tables
    ep-adaptive schema                                       JSON Schemas of the outputs

Exit codes: 0 ok, 2 usage, 3 data error, 4 boundary variance estimate,
5 internal error.
"""
import logging
from argparse import ArgumentParser, BooleanOptionalAction, Namespace
from pathlib import Path
import sys
from sys import argv as sys_argv
from typing import List, Optional, Sequence

from pydantic import ValidationError

from ep_adaptive import __version__
from ep_adaptive.adaptive import adaptive_estimate, laplace_estimate
from ep_adaptive.config import DATA_ANALYSIS_CHAIN, DEFAULT_SOLVER, SIMULATION_CHAIN, ChainConfig, RunConfig, \
    SolverConfig, Summary
from ep_adaptive.curves import density_curves, kurtosis_curve, threshold_curves
from ep_adaptive.data import RegressionData
from ep_adaptive.data_file import load_csv
from ep_adaptive.errors import BoundaryVarianceError, DataParseError, DegenerateInputError, DomainError, \
    EpAdaptiveError, NotIdentifiableError
from ep_adaptive.output import Manifest, coefficient_frame, fit_report, outcome_report, study_summary, write_csv, \
    write_json, write_schemas
from ep_adaptive.report import render_report
from ep_adaptive.report_tables import FitComparison, FitTable, TestTable
from ep_adaptive.simulation import StudyKind, grid_scenarios, run_estimation_study, run_power_study
from ep_adaptive.testing import laplace_test

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_BOUNDARY = 4
EXIT_INTERNAL = 5

DATA_ERRORS = (DataParseError, DegenerateInputError, DomainError, NotIdentifiableError, ValidationError, OSError)

# Monte Carlo null draws when --mc-reps is not given
DATA_MC_REPS = 1_000_000
STUDY_MC_REPS = 100_000


class UsageError(Exception):
    pass


def _chain_preset(args: Namespace) -> ChainConfig:
    if args.command == 'simulate':
        return SIMULATION_CHAIN
    return DATA_ANALYSIS_CHAIN


def build_config(args: Namespace) -> RunConfig:
    """
    RunConfig from parsed flags; options a subcommand does not take keep their
    defaults
    """
    preset = _chain_preset(args)
    chain = ChainConfig(
        iters=getattr(args, 'iters', None) or preset.iters,
        burn_in=preset.burn_in if getattr(args, 'burn_in', None) is None else args.burn_in,
        thinning=getattr(args, 'thin', None) or preset.thinning,
    )
    solver = SolverConfig(
        tol=getattr(args, 'tol', None) or DEFAULT_SOLVER.tol,
        max_iter=DEFAULT_SOLVER.max_iter,
        restarts=getattr(args, 'restarts', None) or DEFAULT_SOLVER.restarts,
    )
    mc_reps = args.mc_reps or (STUDY_MC_REPS if args.command == 'simulate' else DATA_MC_REPS)
    return RunConfig(
        seed=args.seed,
        alpha=args.alpha,
        mc_reps=mc_reps,
        chain=chain,
        solver=solver,
        standardize=getattr(args, 'standardize', True),
        summary=Summary(getattr(args, 'summary', Summary.both.value)),
        out_dir=args.out_dir,
        workers=args.workers,
        gate=not getattr(args, 'no_gate', False),
    )


def _load_data(args: Namespace) -> RegressionData:
    if args.data is None and (args.y is None or args.x is None):
        raise UsageError('give --data FILE or both --y FILE and --x FILE')
    return load_csv(
        path=args.data, response=args.response, y_path=args.y, x_path=args.x, group_column=args.group_column,
        interactions=args.interactions, standardize_data=args.standardize,
    )


def _data_label(args: Namespace) -> str:
    return Path(args.data or args.x).stem


def cmd_test(args: Namespace, config: RunConfig) -> List[Path]:
    data = _load_data(args)
    outcome = laplace_test(data, config.alpha, config.mc_reps, config.seed, workers=config.workers)

    print(f'n={outcome.n}, p={outcome.p}, statistic={outcome.kind.value}, delta2={outcome.delta2:.6g}')
    print(f'psi={outcome.statistic:.6g}, null band=({outcome.lower_quantile:.6g}, {outcome.upper_quantile:.6g}), '
          f'Pr(psi* <= psi)={outcome.null_tail_prob:.4f}')
    print(f'Laplace prior {"rejected" if outcome.reject else "not rejected"} at alpha={config.alpha:g}')

    files = [write_json(outcome_report(outcome, config.seed), config.out_dir / 'test_report.json')]
    if args.latex:
        tex = render_report([(TestTable(), [(_data_label(args), outcome)])], title='Laplace prior test')
        files.append(_write_text(tex, config.out_dir / 'test_report.tex'))
    return files


def cmd_fit(args: Namespace, config: RunConfig) -> List[Path]:
    data = _load_data(args)
    result = adaptive_estimate(data, config=config)
    if result.q_used == 1.:
        laplace_fit = result.mode, result.draws
    else:
        laplace_fit = laplace_estimate(data, result.variances, config.summary, config)

    report = fit_report(result, laplace_fit, data.column_names, config)
    print(f'test: psi={result.test.statistic:.6g}, reject={result.test.reject}')
    print(f'sigma2_hat={report.sigma2_hat:.6g}, tau2_hat={report.tau2_hat:.6g}, q_hat={report.q_hat:.4g}, '
          f'q_used={report.q_used:.4g} ({report.label})')
    for name, fit in (('adaptive', report.adaptive), ('laplace', report.laplace)):
        print(f'{name}: mode sparsity={fit.mode_sparsity}, min ESS={fit.min_ess}')

    files = [
        write_json(report, config.out_dir / 'fit_report.json'),
        write_csv(coefficient_frame(result, data.column_names), config.out_dir / 'coefficients.csv'),
    ]
    if args.latex:
        comparison = FitComparison(
            sigma2_hat=report.sigma2_hat, tau2_hat=report.tau2_hat, q_hat=report.q_hat,
            sparsity_laplace=report.laplace.mode_sparsity, sparsity_ep=report.adaptive.mode_sparsity,
            min_ess_laplace=report.laplace.min_ess, min_ess_ep=report.adaptive.min_ess,
        )
        label = _data_label(args)
        tex = render_report(
            [(TestTable(), [(label, result.test)]), (FitTable(), [(label, comparison)])],
            title='Adaptive estimation',
        )
        files.append(_write_text(tex, config.out_dir / 'fit_report.tex'))
    return files


def cmd_simulate(args: Namespace, config: RunConfig) -> List[Path]:
    if not (args.q or args.pi):
        raise UsageError('give at least one --q or --pi value')
    try:
        scenarios = grid_scenarios(args.n, args.p, args.reps, config.seed, qs=args.q or (), pis=args.pi or (),
                                   tau2=args.tau2, sigma2=args.sigma2)
    except ValueError as e:
        raise UsageError(f'invalid scenario grid: {e}') from e

    study = StudyKind(args.study)
    if study == StudyKind.power:
        reports = run_power_study(scenarios, alpha=config.alpha, mc_reps=config.mc_reps, seed=config.seed,
                                  workers=config.workers)
    else:
        reports = run_estimation_study(scenarios, config=config)

    files, names = [], []
    for report in reports:
        name = f'{study.value}_{report.scenario.label}.csv'
        files.append(write_csv(report.frame(), config.out_dir / name))
        names.append(name)
        print(f'{report.scenario.label}: ' + ', '.join(
            f'{k}={v:.4g}' if isinstance(v, float) else f'{k}={v}' for k, v in report.summary().items()
        ))
    files.append(write_json(study_summary(study, reports, names, config), config.out_dir / f'{study.value}_summary.json'))
    return files


def cmd_curves(args: Namespace, config: RunConfig) -> List[Path]:
    qs = args.q or None
    kw = {} if qs is None else {'qs': qs}
    return [
        write_csv(density_curves(**kw), config.out_dir / 'density_curves.csv'),
        write_csv(threshold_curves(**kw), config.out_dir / 'threshold_curves.csv'),
        write_csv(kurtosis_curve(), config.out_dir / 'kurtosis_curve.csv'),
    ]


def cmd_schema(args: Namespace, config: RunConfig) -> List[Path]:
    return write_schemas(config.out_dir)


def _write_text(text: str, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding='utf-8')
    return path


def _add_data_options(parser: ArgumentParser):
    g = parser.add_argument_group('data')
    g.add_argument('--data', type=Path, help='combined CSV with a header row')
    g.add_argument('--response', default='y', help='response column of --data')
    g.add_argument('--y', type=Path, help='response CSV (single column)')
    g.add_argument('--x', type=Path, help='design CSV')
    g.add_argument('--group-column', help='remove the means of these groups from y and X')
    g.add_argument('--interactions', action='store_true', help='add pairwise products and squares')
    g.add_argument('--standardize', action=BooleanOptionalAction, default=True,
                   help='center y and X, scale columns to squared norm n')
    g.add_argument('--latex', action='store_true', help='also write a LaTeX report')


def _add_fit_options(parser: ArgumentParser):
    g = parser.add_argument_group('estimation')
    g.add_argument('--iters', type=int, help='Gibbs sweeps including burn-in')
    g.add_argument('--burn-in', type=int)
    g.add_argument('--thin', type=int)
    g.add_argument('--restarts', type=int, help='mode search restarts for q < 1')
    g.add_argument('--tol', type=float, help='coordinate descent tolerance')
    g.add_argument('--summary', choices=[s.value for s in Summary], default=Summary.both.value)
    g.add_argument('--no-gate', action='store_true', help='always use the estimated q')


def build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=0)
    common.add_argument('--alpha', type=float, default=.05)
    common.add_argument('--mc-reps', type=int, help='Monte Carlo draws of the null statistic')
    common.add_argument('--out-dir', type=Path, default=Path('.'))
    common.add_argument('--workers', type=int, default=1)
    common.add_argument('-v', '--verbose', action='count', default=0)

    parser = ArgumentParser(prog='ep-adaptive', description='Laplace prior test and adaptive estimation')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('test', parents=[common], help='test the appropriateness of a Laplace prior')
    _add_data_options(p)
    p.set_defaults(handler=cmd_test)

    p = sub.add_parser('fit', parents=[common], help='two-stage adaptive estimation')
    _add_data_options(p)
    _add_fit_options(p)
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser('simulate', parents=[common], help='power and estimation studies')
    p.add_argument('study', choices=[s.value for s in StudyKind] + ['estimate'])
    p.add_argument('--n', type=int, nargs='+', required=True)
    p.add_argument('--p', type=int, nargs='+', required=True)
    p.add_argument('--q', type=float, nargs='+', help='exponential power shapes')
    p.add_argument('--pi', type=float, nargs='+', help='spike-and-slab nonzero probabilities')
    p.add_argument('--reps', type=int, default=100)
    p.add_argument('--tau2', type=float, default=1.)
    p.add_argument('--sigma2', type=float, default=1.)
    _add_fit_options(p)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser('curves', parents=[common], help='density, thresholding and kurtosis tables')
    p.add_argument('--q', type=float, nargs='+')
    p.set_defaults(handler=cmd_curves)

    p = sub.add_parser('schema', parents=[common], help='write JSON Schemas of the output files')
    p.set_defaults(handler=cmd_schema)
    return parser


def _configure_logging(verbosity: int):
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level, format='%(levelname)s %(name)s: %(message)s')


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys_argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    if getattr(args, 'study', None) == 'estimate':
        args.study = StudyKind.estimation.value
    _configure_logging(args.verbose)

    try:
        config = build_config(args)
    except ValidationError as e:
        print(f'invalid options: {e}', file=sys.stderr)
        return EXIT_USAGE

    try:
        files = args.handler(args, config)
    except UsageError as e:
        print(f'usage error: {e}', file=sys.stderr)
        return EXIT_USAGE
    except BoundaryVarianceError as e:
        print(f'boundary variance estimate: {e}', file=sys.stderr)
        return EXIT_BOUNDARY
    except DATA_ERRORS as e:
        print(f'data error: {e}', file=sys.stderr)
        return EXIT_DATA
    except EpAdaptiveError as e:
        print(f'internal error: {e}', file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as e:
        logger.exception('unexpected failure')
        print(f'internal error: {e}', file=sys.stderr)
        return EXIT_INTERNAL

    manifest = Manifest(
        command=args.command,
        argv=argv,
        config=config,
        files=[str(Path(f).relative_to(config.out_dir)) for f in files],
    )
    write_json(manifest, config.out_dir / f'{args.command}_manifest.json')
    return EXIT_OK
