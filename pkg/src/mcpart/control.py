"""Parser and printer for the multi-class control language.

Grammar::

    branch         ::= model "{" branch-list "}" | CLASS
    model          ::= TWOCLASS | partition-list
    branch-list    ::= branch | branch-list branch
    partition-list ::= partition | partition-list partition
    partition      ::= TWOCLASS class-list "/" class-list ";"
    class-list     ::= CLASS | class-list CLASS

A CLASS inside a partition is relative: it indexes the children of the
enclosing branch list. A CLASS appearing as a branch is an absolute label.
Names are any run of characters other than whitespace and ``{ } / ;``.
``#`` starts a comment that runs to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np

from .coding import CodingMatrix, Split, PartitionTree, validate_tree
from .errors import ControlSyntaxError

__all__ = [
    "SourceSpan",
    "Partition",
    "TwoClassNode",
    "PartitionNode",
    "Branch",
    "ControlSpec",
    "parse",
    "format_spec",
    "to_coding_matrix",
    "from_tree",
    "from_matrix",
    "to_tree",
    "tokens",
]


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int
    line: int
    column: int


@dataclass(frozen=True)
class Partition:
    name: str
    left: tuple[int, ...]
    right: tuple[int, ...]


@dataclass(frozen=True)
class TwoClassNode:
    """A named binary classifier with exactly two child branches."""

    name: str
    children: tuple["Branch", ...]


@dataclass(frozen=True)
class PartitionNode:
    """A non-hierarchical list of partitions over its child branches."""

    partitions: tuple[Partition, ...]
    children: tuple["Branch", ...]


Branch = Union[int, TwoClassNode, PartitionNode]


@dataclass(frozen=True)
class ControlSpec:
    root: Union[TwoClassNode, PartitionNode]

    def labels(self) -> list[int]:
        """Absolute class labels in order of appearance."""
        return _leaves(self.root)

    def names(self) -> list[str]:
        """Binary classifier names in pre-order, partitions in listed order."""
        out = []

        def visit(node):
            if isinstance(node, TwoClassNode):
                out.append(node.name)
            elif isinstance(node, PartitionNode):
                out.extend(p.name for p in node.partitions)
            else:
                return
            for child in node.children:
                visit(child)

        visit(self.root)
        return out

    @property
    def is_tree(self) -> bool:
        """True when every internal node is a named binary classifier."""

        def check(node):
            if isinstance(node, PartitionNode):
                return False
            if isinstance(node, TwoClassNode):
                return all(check(c) for c in node.children)
            return True

        return check(self.root)

    def __str__(self):
        return format_spec(self)


def _leaves(branch) -> list[int]:
    if isinstance(branch, (TwoClassNode, PartitionNode)):
        out = []
        for child in branch.children:
            out.extend(_leaves(child))
        return out
    return [branch]


# --- lexer -----------------------------------------------------------------

_TOKEN_RE = re.compile(r"(?P<ws>\s+)|(?P<comment>#[^\n]*)|(?P<punct>[{}/;])|(?P<word>[^\s{}/;#]+)")
_INT_RE = re.compile(r"[0-9]+\Z")


@dataclass(frozen=True)
class _Token:
    kind: str  # "punct", "word" or "eof"
    text: str
    span: SourceSpan

    @property
    def is_int(self):
        return self.kind == "word" and _INT_RE.match(self.text) is not None


def _lex(text: str) -> list[_Token]:
    out = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        # every character matches one of the alternatives
        kind = m.lastgroup
        value = m.group()
        if kind in ("punct", "word"):
            out.append(_Token(kind, value, SourceSpan(pos, m.end(), line, pos - line_start + 1)))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rfind("\n") + 1
        pos = m.end()
    out.append(_Token("eof", "", SourceSpan(pos, pos, line, pos - line_start + 1)))
    return out


def tokens(text: str) -> list[str]:
    """Token texts of a control source, comments and whitespace dropped."""
    return [t.text for t in _lex(text) if t.kind != "eof"]


# --- parser ----------------------------------------------------------------


class _Parser:
    def __init__(self, text):
        self.toks = _lex(text)
        self.i = 0
        self.partition_spans = {}

    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, k=1):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text):
        t = self.tok
        if t.text != text or t.kind != "punct":
            found = "end of input" if t.kind == "eof" else repr(t.text)
            raise ControlSyntaxError(f"expected {text!r}, found {found}", t.span)
        return self.advance()

    def error(self, message, tok=None):
        return ControlSyntaxError(message, (tok or self.tok).span)

    def parse(self):
        if self.tok.kind == "eof":
            raise self.error("empty control source")
        start = self.tok
        root = self.branch()
        if isinstance(root, int):
            raise self.error("top level must be a model with a branch list, not a bare class", start)
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r} after end of specification")
        return root

    def _starts_partition(self):
        # name, then one or more integers, then "/"
        k = 1
        while self.peek(k).is_int:
            k += 1
        return k > 1 and self.peek(k).text == "/" and self.peek(k).kind == "punct"

    def branch(self):
        t = self.tok
        if t.kind != "word":
            found = "end of input" if t.kind == "eof" else repr(t.text)
            raise self.error(f"expected a class or model name, found {found}")
        nxt = self.peek()
        if nxt.kind == "punct" and nxt.text == "{":
            name = self.advance().text
            children = self.branch_list()
            if len(children) != 2:
                raise self.error(f"binary model {name!r} must have exactly 2 branches, got {len(children)}", t)
            return TwoClassNode(name, children)
        if self._starts_partition():
            parts = []
            while self.tok.kind == "word":
                parts.append(self.partition())
            if not (self.tok.kind == "punct" and self.tok.text == "{"):
                raise self.error("expected '{' after partition list")
            children = self.branch_list()
            for p in parts:
                for c in p.left + p.right:
                    if c >= len(children):
                        raise ControlSyntaxError(
                            f"partition {p.name!r}: relative class {c} out of range for {len(children)} branches",
                            self.partition_spans[id(p)],
                        )
            return PartitionNode(tuple(parts), children)
        if t.is_int:
            self.advance()
            return int(t.text)
        raise self.error(f"expected '{{' or a partition after {t.text!r}", nxt)

    def class_list(self):
        out = []
        while self.tok.is_int:
            out.append(int(self.advance().text))
        if not out:
            raise self.error("expected a class value")
        return out

    def partition(self):
        name_tok = self.advance()
        left = self.class_list()
        self.expect("/")
        right = self.class_list()
        self.expect(";")
        span = SourceSpan(name_tok.span.start, self.toks[self.i - 1].span.end, name_tok.span.line, name_tok.span.column)
        both = left + right
        if len(set(both)) != len(both):
            raise ControlSyntaxError(f"partition {name_tok.text!r}: class repeated or on both sides", span)
        p = Partition(name_tok.text, tuple(left), tuple(right))
        self.partition_spans[id(p)] = span
        return p

    def branch_list(self):
        self.expect("{")
        children = []
        while not (self.tok.kind == "punct" and self.tok.text == "}"):
            if self.tok.kind == "eof":
                raise self.error("unterminated branch list: missing '}'")
            children.append(self.branch())
        if not children:
            raise self.error("empty branch list")
        self.expect("}")
        return tuple(children)


def _check_unique(root):
    labels = _leaves(root)
    seen = set()
    for x in labels:
        if x in seen:
            raise ControlSyntaxError(f"class {x} appears more than once")
        seen.add(x)
    names = ControlSpec(root).names()
    seen = set()
    for n in names:
        if n in seen:
            raise ControlSyntaxError(f"binary model name {n!r} used more than once")
        seen.add(n)


def parse(text: str) -> ControlSpec:
    """Parse control-language source into a :class:`ControlSpec`."""
    parser = _Parser(text.replace("\r\n", "\n"))
    root = parser.parse()
    _check_unique(root)
    return ControlSpec(root)


# --- printer ---------------------------------------------------------------

_INDENT = "  "


def _format_branch(branch, depth, out):
    pad = _INDENT * depth
    if isinstance(branch, TwoClassNode):
        if all(isinstance(c, int) for c in branch.children):
            out.append(f"{pad}{branch.name} {{{' '.join(map(str, branch.children))}}}")
            return
        out.append(f"{pad}{branch.name} {{")
        for child in branch.children:
            _format_branch(child, depth + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(branch, PartitionNode):
        for p in branch.partitions:
            out.append(f"{pad}{p.name} {' '.join(map(str, p.left))} / {' '.join(map(str, p.right))};")
        if all(isinstance(c, int) for c in branch.children):
            out.append(f"{pad}{{{' '.join(map(str, branch.children))}}}")
            return
        out.append(f"{pad}{{")
        for child in branch.children:
            _format_branch(child, depth + 1, out)
        out.append(f"{pad}}}")
    else:
        out.append(f"{pad}{int(branch)}")


def format_spec(spec) -> str:
    """Canonical source text for a spec (or a root node)."""
    root = spec.root if isinstance(spec, ControlSpec) else spec
    if not isinstance(root, (TwoClassNode, PartitionNode)):
        raise ControlSyntaxError("cannot print a bare class: the top level must be a model")
    out = []
    _format_branch(root, 0, out)
    return "\n".join(out) + "\n"


# --- conversions -----------------------------------------------------------


def _rows(branch) -> Iterator[tuple[str, list[int], list[int]]]:
    """Yield (name, negative labels, positive labels) in pre-order."""
    if isinstance(branch, TwoClassNode):
        yield branch.name, _leaves(branch.children[0]), _leaves(branch.children[1])
    elif isinstance(branch, PartitionNode):
        groups = [_leaves(c) for c in branch.children]
        for p in branch.partitions:
            yield (
                p.name,
                [x for c in p.left for x in groups[c]],
                [x for c in p.right for x in groups[c]],
            )
    else:
        return
    for child in branch.children:
        yield from _rows(child)


def to_coding_matrix(spec: ControlSpec) -> tuple[CodingMatrix, list[str], list[int]]:
    """Flatten a spec into a coding matrix.

    Returns the matrix, the binary model name for each row and the class label
    for each column. Columns are ordered by sorted absolute label.
    """
    labels = sorted(spec.labels())
    column = {x: j for j, x in enumerate(labels)}
    names = []
    rows = []
    for name, neg, pos in _rows(spec.root):
        row = np.zeros(len(labels), dtype=np.int8)
        row[[column[x] for x in neg]] = -1
        row[[column[x] for x in pos]] = 1
        names.append(name)
        rows.append(row)
    return CodingMatrix(np.array(rows)), names, labels


def from_tree(tree: PartitionTree, prefix: str) -> ControlSpec:
    """Name every split ``prefix`` plus one ``.NN`` segment per child step."""
    validate_tree(tree)
    if not isinstance(tree, Split):
        raise ControlSyntaxError("a single class cannot form a control spec")

    def build(node, name):
        if not isinstance(node, Split):
            return int(node)
        return TwoClassNode(name, (build(node.left, f"{name}.00"), build(node.right, f"{name}.01")))

    return ControlSpec(build(tree, prefix))


def to_tree(spec: ControlSpec) -> PartitionTree:
    """Convert a pure binary-tree spec into a :class:`Split` tree."""
    if not spec.is_tree:
        raise ControlSyntaxError("spec contains partition lists; not a pure tree")

    def build(node):
        if isinstance(node, TwoClassNode):
            return Split(build(node.children[0]), build(node.children[1]), node.name)
        return int(node)

    return build(spec.root)


def from_matrix(matrix: CodingMatrix, names=None, labels=None, prefix: str = "model") -> ControlSpec:
    """Non-hierarchical spec for a coding matrix: one partition per row.

    Zero entries are simply omitted from both sides of the partition.
    """
    a = matrix.entries
    n_p, n_c = a.shape
    if names is None:
        width = len(str(n_p - 1))
        names = [f"{prefix}{i:0{width}d}" for i in range(n_p)]
    if labels is None:
        labels = list(range(n_c))
    if len(names) != n_p or len(labels) != n_c:
        raise ValueError("names/labels length does not match the matrix")
    parts = tuple(
        Partition(str(name), tuple(int(j) for j in np.flatnonzero(row == -1)), tuple(int(j) for j in np.flatnonzero(row == 1)))
        for name, row in zip(names, a)
    )
    return ControlSpec(PartitionNode(parts, tuple(int(x) for x in labels)))
