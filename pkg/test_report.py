import numpy as np
import pytest

from ep_adaptive import report_tables, testing
from ep_adaptive.curves import density_curves, kurtosis_curve, threshold_curves
from ep_adaptive.latex_utils import LINE_BREAK, LatexWriter, LongTable, Math, MultiLine, command, escape, \
    render_to_str
from ep_adaptive.report import format_legend, format_report_table, render_report
from ep_adaptive.report_tables import FitComparison, FitTable, format_count, format_number, format_percent

OUTCOME = testing.TestOutcome(
    statistic=5.4321, lower_quantile=3.9, upper_quantile=9.87, reject=False, null_tail_prob=.3456,
    kind=testing.TestKind.ridge, mc_reps=1000, alpha=.05, n=50, p=80, delta2=.4,
)


def test_number_formats():
    assert format_number(3.14159, 2) == '3.14'
    assert format_number(None, 2) == ''
    assert format_number(150., 1, max_value=100.) == '> 100.0'
    assert format_percent(.125) == '12.5\\%'
    assert format_count(10234.4) == '10,234'
    assert format_count(None) == ''


def test_escape():
    assert escape('x_1 & 50%') == 'x\\_1 \\& 50\\%'
    assert escape('plain') == 'plain'


def test_test_table_row():
    row = report_tables.TestTable().format_row(report_tables.TestTable().compute_row(OUTCOME))
    assert row == ('50', '80', 'ridge', '0.400', '3.90', '9.87', '5.43', '0.346', 'no')


def test_fit_table_row():
    comparison = FitComparison(sigma2_hat=.5, tau2_hat=.02, q_hat=.73, sparsity_laplace=.6, sparsity_ep=.85,
                               min_ess_laplace=1234., min_ess_ep=None)
    row = FitTable().format_row(FitTable().compute_row(comparison))
    assert row == ('0.5000', '0.0200', '0.7300', '60.0\\%', '85.0\\%', '1,234', '')


def test_report_table_keeps_entry_order():
    table = format_report_table(report_tables.TestTable(), [('b_set', OUTCOME), ('a_set', OUTCOME)])
    assert isinstance(table, LongTable)
    assert [r[0] for r in table.rows] == ['b\\_set', 'a\\_set']
    assert len(table.columns) == len(table.rows[0])


def test_render_report():
    tex = render_report([(report_tables.TestTable(), [('diabetes', OUTCOME)])], title='Laplace prior test')
    assert tex.startswith('\\documentclass{article}')
    assert '\\begin{longtable}{|c|c|c|c|c|c|c|c|c|c|}' in tex
    assert 'diabetes & 50 & 80 & ridge' in tex
    assert '\\title{Laplace prior test}' in tex
    assert tex.rstrip().endswith('\\end{document}')


def test_latex_pieces():
    assert render_to_str(Math('q')) == '${q}$'
    assert render_to_str(MultiLine('a', 'b')) == '\\vtop{\\hbox{\\strut a}\\hbox{\\strut b}}'
    buf = LatexWriter()
    buf.put(('x', 'y'))
    assert buf.value == 'x\n\\\\\ny\n'
    assert command('usepackage', 'geometry', options=('a4paper',)) == '\\usepackage[a4paper]{geometry}'


@pytest.mark.parametrize('descr', [report_tables.TestTable(), FitTable()])
def test_legend_entries_stay_on_their_item(descr):
    lines = render_to_str(format_legend(descr)).splitlines()
    assert LINE_BREAK not in lines
    assert lines.count('\\item') == len(descr.get_description())


def test_legend_symbol_precedes_its_meaning():
    lines = render_to_str(format_legend(report_tables.TestTable())).splitlines()
    at = lines.index('${\\delta^2}$')
    assert lines[at - 1] == '\\item'
    assert lines[at + 1] == ': ridge constant (0 for OLS)'


def test_density_curves():
    frame = density_curves(qs=(1., 2.), points=11)
    assert list(frame.columns) == ['q', 'beta', 'density']
    assert len(frame) == 22
    normal = frame[frame['q'] == 2.]
    assert normal['density'].max() == pytest.approx(1. / np.sqrt(2. * np.pi))


def test_threshold_curves():
    frame = threshold_curves(qs=(2., 1.), points=9)
    normal = frame[frame['q'] == 2.]
    np.testing.assert_allclose(normal['mode'], normal['b_ols'] / 2.)
    laplace = frame[frame['q'] == 1.]
    expected = np.sign(laplace['b_ols']) * np.maximum(np.abs(laplace['b_ols']) - np.sqrt(2.), 0.)
    np.testing.assert_allclose(laplace['mode'], expected, atol=1e-12)


def test_kurtosis_curve():
    frame = kurtosis_curve(points=50)
    assert len(frame) == 50
    assert frame['q'].iloc[0] == pytest.approx(.1)
    assert (np.diff(frame['kurtosis']) < 0).all()
