from typing import Any, Dict, Iterable, Tuple

from pydantic import BaseModel

from ep_adaptive.latex_utils import Bold, Content, ContentItem, Document, DotList, LatexObject, LatexWriter, LongTable, \
    escape


class ReportDescriptor(BaseModel):
    title: ContentItem = 'Results'
    label_column: ContentItem = 'Dataset'

    def get_description(self) -> Tuple[ContentItem, ...]:
        raise NotImplementedError('get description not implemented')

    def get_columns(self) -> Tuple[ContentItem, ...]:
        raise NotImplementedError('get columns not implemented')

    def compute_row(self, data: Any) -> Dict[str, Any]:
        raise NotImplementedError('compute row not implemented')

    def format_row(self, row: Dict[str, Any]) -> Tuple[ContentItem, ...]:
        raise NotImplementedError('format row not implemented')


def _generate_rows(descr: ReportDescriptor, entries: Iterable[Tuple[str, Any]]):
    for label, data in entries:
        yield (escape(label),) + descr.format_row(descr.compute_row(data))


def format_report_table(descr: ReportDescriptor, entries: Iterable[Tuple[str, Any]]) -> LongTable:
    """
    One row per ``(label, data)`` entry, in the given order
    """
    return LongTable(
        caption=descr.title,
        columns=(descr.label_column,) + descr.get_columns(),
        rows=tuple(_generate_rows(descr, entries)),
    )


def format_legend(descr: ReportDescriptor) -> Content:
    return Content(Bold(descr.title), DotList(*descr.get_description()))


def render_report(tables: Iterable[Tuple[ReportDescriptor, Iterable[Tuple[str, Any]]]], title: str = '') -> str:
    """
    Full LaTeX document with a legend and a table per descriptor
    """
    body = []
    for descr, entries in tables:
        body.append(format_legend(descr))
        body.append(format_report_table(descr, entries))
    out = LatexWriter()
    Document(title=title, body=Content(*body)).render(out)
    return out.value
