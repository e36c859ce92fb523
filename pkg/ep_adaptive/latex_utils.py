"""
Minimal LaTeX writer: render objects append lines to a ``LatexWriter``.
"""
from contextlib import contextmanager
from typing import List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field

ContentItem = Union[str, 'LatexObject', Tuple]

_SPECIAL = {
    '\\': '\\textbackslash{}',
    '&': '\\&', '%': '\\%', '$': '\\$', '#': '\\#', '_': '\\_',
    '{': '\\{', '}': '\\}', '~': '\\textasciitilde{}', '^': '\\textasciicircum{}',
}
LINE_BREAK = '\\\\'


def escape(text: str) -> str:
    """Escapes LaTeX special characters in plain text such as column names"""
    return ''.join(_SPECIAL.get(c, c) for c in text)


def command(name: str, *args, options: Tuple[str, ...] = ()) -> str:
    """``\\name[opt, ...]{arg}...``"""
    opts = f'[{", ".join(options)}]' if options else ''
    return f'\\{name}{opts}' + ''.join(f'{{{a}}}' for a in args)


class LatexWriter:
    def __init__(self):
        self.lines: List[str] = []

    def line(self, text: str) -> 'LatexWriter':
        self.lines.append(text)
        return self

    def put(self, v: ContentItem) -> 'LatexWriter':
        """Objects render themselves; tuples and lists are rendered one per line"""
        if isinstance(v, LatexObject):
            v.render(self)
        elif isinstance(v, (list, tuple)):
            for i, item in enumerate(v):
                if i:
                    self.line(LINE_BREAK)
                self.put(item)
        else:
            self.line(str(v))
        return self

    def cmd(self, name: str, *args, options: Tuple[str, ...] = ()) -> 'LatexWriter':
        return self.line(command(name, *args, options=options))

    @contextmanager
    def environment(self, name: str, *args):
        self.cmd('begin', name, *args)
        yield self
        self.cmd('end', name)

    @property
    def value(self) -> str:
        return ''.join(s + '\n' for s in self.lines)


class LatexObject(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    def render(self, out: LatexWriter):
        raise NotImplementedError('render not implemented')


def render_to_str(v: ContentItem) -> str:
    if not isinstance(v, LatexObject):
        return str(v)
    out = LatexWriter()
    v.render(out)
    return '\n'.join(out.lines)


class Document(LatexObject):
    document_class: str = 'article'
    title: str = ''
    date: str = '\\today'
    packages: Tuple[str, ...] = ('longtable', 'amsmath')
    body: Optional[LatexObject] = None

    def render(self, out: LatexWriter):
        out.cmd('documentclass', self.document_class)
        out.cmd('usepackage', 'geometry', options=('a4paper',))
        out.cmd('usepackage', 'inputenc', options=('utf8',))
        for p in self.packages:
            out.cmd('usepackage', p)
        if self.title:
            out.cmd('title', self.title)
        if self.date:
            out.cmd('date', self.date)
        with out.environment('document'):
            if self.body is not None:
                self.body.render(out)


class Content(LatexObject):
    items: Tuple[ContentItem, ...] = ()

    def __init__(self, *items, **kwargs):
        super().__init__(items=tuple(items), **kwargs)

    def render(self, out: LatexWriter):
        for item in self.items:
            out.put(item)


class DotList(Content):
    def render(self, out: LatexWriter):
        with out.environment('itemize'):
            for item in self.items:
                out.cmd('item').put(item)


class Wrapped(LatexObject):
    """Single item rendered inline inside ``template``"""
    item: ContentItem
    template: str = '{}'

    def __init__(self, item: ContentItem, **kwargs):
        super().__init__(item=item, **kwargs)

    def render(self, out: LatexWriter):
        out.line(self.template.format(render_to_str(self.item)))


class Math(Wrapped):
    template: str = '${{{}}}$'


class Bold(Wrapped):
    template: str = '\\textbf{{{}}}'


class MultiLine(Content):
    """Cell content stacked on several lines"""

    def render(self, out: LatexWriter):
        out.line('\\vtop{' + ''.join(f'\\hbox{{\\strut {render_to_str(v)}}}' for v in self.items) + '}')


class LongTable(LatexObject):
    caption: ContentItem = ''
    columns: Tuple[ContentItem, ...] = ()
    rows: Tuple[Tuple[ContentItem, ...], ...] = ()
    foot: ContentItem = Field(default_factory=lambda: command('hline'))

    def _row(self, out: LatexWriter, cells: Tuple[ContentItem, ...]):
        out.line(' & '.join(render_to_str(c) for c in cells) + ' ' + LINE_BREAK)

    def render(self, out: LatexWriter):
        spec = '|' + '|'.join('c' * len(self.columns)) + '|'
        with out.environment('longtable', spec):
            out.line(command('caption', render_to_str(self.caption)) + ' ' + LINE_BREAK)
            out.cmd('hline')
            self._row(out, self.columns)
            out.cmd('hline').cmd('endfirsthead')
            self._row(out, self.columns)
            out.cmd('endhead')
            out.put(self.foot).cmd('endfoot')
            out.put(self.foot).cmd('endlastfoot')
            for row in self.rows:
                self._row(out, row)
