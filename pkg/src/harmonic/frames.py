"""Frame-instance data model and the canonical frame notation.

A frame document is a flat list of frame instances::

    #DESCRIBE-MECHANICAL-PROBLEM.1
      agent       #HUMAN.1    // speaker
      theme       #OVERHEAT.1
    #OVERHEAT.1
      theme       #ENGINE.1

Headers sit at column 0 (any indentation is accepted on input), slot lines are
indented and read ``<slot> <filler>``. ``//`` starts a comment. The LaTeX
wrappers that appear in typeset listings (``\\textbf{...}`` and a trailing
``\\hfill`` caption) are accepted and ignored.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator, Union


class FrameSyntaxError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{message} (line {line}, column {col})")
        self.message = message
        self.line = line
        self.col = col


class DuplicateInstanceError(FrameSyntaxError):
    pass


class DanglingReferenceError(FrameSyntaxError):
    pass


# --------------------------------------------------------------------------
# Fillers
# --------------------------------------------------------------------------

CONCEPT = r"[A-Z][A-Z0-9]*(?:-[A-Z0-9]+)*"
SLOT = r"[a-z][a-z0-9]*(?:-[a-z0-9]+)*"
NUMBER = r"-?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?"

_INSTANCE_RE = re.compile(rf"#({CONCEPT})\.(\d+)")
_COREF_RE = re.compile(rf"->({CONCEPT})\.(\d+)")
_CONCEPT_RE = re.compile(rf"@({CONCEPT})")
_VARIABLE_RE = re.compile(rf"\?({SLOT})")
_RANGE_RE = re.compile(rf"({NUMBER})<>({NUMBER})")
_COMPARISON_RE = re.compile(rf"(<=|>=|<|>)({NUMBER})")
_NUMBER_RE = re.compile(NUMBER)
_BARE_RE = re.compile(r'[^\s"\\]+')
_DIRECTIVE_RE = re.compile(rf'\*({SLOT})\s+(".*")')
_SLOT_NAME_RE = re.compile(SLOT)


@dataclass(frozen=True)
class InstanceRef:
    concept: str
    index: int

    @property
    def id(self) -> str:
        return f"{self.concept}.{self.index}"


@dataclass(frozen=True)
class CoRef:
    """Pointer into the situation model (``->ENGINE.1``)."""

    concept: str
    index: int

    @property
    def id(self) -> str:
        return f"{self.concept}.{self.index}"


@dataclass(frozen=True)
class ConceptRef:
    concept: str


@dataclass(frozen=True)
class NumericRange:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"range lower bound {self.lo} exceeds upper bound {self.hi}")

    def admits(self, value: float) -> bool:
        return self.lo <= value <= self.hi


_OPS: dict[str, Callable[[float, float], bool]] = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


@dataclass(frozen=True)
class Comparison:
    op: str
    value: float

    def __post_init__(self):
        if self.op not in _OPS:
            raise ValueError(f"unknown comparison operator {self.op!r}")

    def admits(self, value: float) -> bool:
        return _OPS[self.op](value, self.value)


@dataclass(frozen=True)
class Number:
    value: float


@dataclass(frozen=True)
class Text:
    value: str


@dataclass(frozen=True)
class Directive:
    """``*take-this-action "..."`` instruction attached to a plan frame."""

    name: str
    text: str


@dataclass(frozen=True)
class Variable:
    """Template variable ``?name``; used by scripts, never by grounded frames."""

    name: str


Filler = Union[InstanceRef, CoRef, ConceptRef, NumericRange, Comparison, Number, Text, Directive, Variable]


def format_number(value: float) -> str:
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text


def _unescape(body: str) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            nxt = body[i + 1]
            out.append("\n" if nxt == "n" else nxt)
            i += 2
            continue
        out.append(ch)
        i += 1
    return "".join(out)


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _parse_quoted(raw: str) -> str | None:
    if len(raw) >= 2 and raw[0] == '"' and raw[-1] == '"':
        body = raw[1:-1]
        # reject an unescaped interior quote
        i = 0
        while i < len(body):
            if body[i] == "\\":
                i += 2
                continue
            if body[i] == '"':
                return None
            i += 1
        return _unescape(body)
    return None


def parse_filler(raw: str) -> Filler:
    """Parse one filler token (already stripped of comments)."""
    raw = raw.strip()
    if not raw:
        raise ValueError("empty filler")
    quoted = _parse_quoted(raw)
    if quoted is not None:
        return Text(quoted)
    m = _DIRECTIVE_RE.fullmatch(raw)
    if m:
        text = _parse_quoted(m.group(2))
        if text is None:
            raise ValueError(f"malformed directive text: {raw!r}")
        return Directive(m.group(1), text)
    if m := _INSTANCE_RE.fullmatch(raw):
        return InstanceRef(m.group(1), int(m.group(2)))
    if m := _COREF_RE.fullmatch(raw):
        return CoRef(m.group(1), int(m.group(2)))
    if m := _CONCEPT_RE.fullmatch(raw):
        return ConceptRef(m.group(1))
    if m := _VARIABLE_RE.fullmatch(raw):
        return Variable(m.group(1))
    if m := _RANGE_RE.fullmatch(raw):
        return NumericRange(float(m.group(1)), float(m.group(2)))
    if m := _COMPARISON_RE.fullmatch(raw):
        return Comparison(m.group(1), float(m.group(2)))
    if _NUMBER_RE.fullmatch(raw):
        return Number(float(raw))
    if _BARE_RE.fullmatch(raw) and raw[0] not in "#@?*<>" and not raw.startswith("->"):
        return Text(raw)
    raise ValueError(f"cannot parse filler {raw!r}")


def render_filler(filler: Filler) -> str:
    if isinstance(filler, InstanceRef):
        return f"#{filler.id}"
    if isinstance(filler, CoRef):
        return f"->{filler.id}"
    if isinstance(filler, ConceptRef):
        return f"@{filler.concept}"
    if isinstance(filler, Variable):
        return f"?{filler.name}"
    if isinstance(filler, NumericRange):
        return f"{format_number(filler.lo)}<>{format_number(filler.hi)}"
    if isinstance(filler, Comparison):
        return f"{filler.op}{format_number(filler.value)}"
    if isinstance(filler, Number):
        return format_number(filler.value)
    if isinstance(filler, Directive):
        return f"*{filler.name} {_quote(filler.text)}"
    if isinstance(filler, Text):
        value = filler.value
        if _BARE_RE.fullmatch(value) and "//" not in value and "\\hfill" not in value:
            try:
                if parse_filler(value) == filler:
                    return value
            except ValueError:
                pass
        return _quote(value)
    raise TypeError(f"not a filler: {filler!r}")


def filler_value(filler: Filler):
    """Plain Python value of a literal filler (str, float, or the filler itself)."""
    if isinstance(filler, Text):
        return filler.value
    if isinstance(filler, Number):
        return filler.value
    return filler


# --------------------------------------------------------------------------
# Frames and documents
# --------------------------------------------------------------------------


class Provenance(str, enum.Enum):
    TMR = "TMR"
    VMR = "VMR"
    GMR = "GMR"
    SITUATION = "SITUATION"


@dataclass(frozen=True)
class FrameInstance:
    concept: str
    index: int
    slots: tuple[tuple[str, Filler], ...] = ()
    provenance: Provenance | None = field(default=None, compare=False)
    tick: int | None = field(default=None, compare=False)

    @property
    def id(self) -> str:
        return f"{self.concept}.{self.index}"

    @property
    def ref(self) -> InstanceRef:
        return InstanceRef(self.concept, self.index)

    def get(self, name: str, default=None):
        for key, value in self.slots:
            if key == name:
                return value
        return default

    def __contains__(self, name: str) -> bool:
        return any(key == name for key, _ in self.slots)

    @property
    def slot_map(self) -> dict[str, Filler]:
        return dict(self.slots)

    def with_slot(self, name: str, value: Filler) -> "FrameInstance":
        """Copy with ``name`` set (replaced in place, or appended)."""
        slots = list(self.slots)
        for i, (key, _) in enumerate(slots):
            if key == name:
                slots[i] = (name, value)
                break
        else:
            slots.append((name, value))
        return replace(self, slots=tuple(slots))


def frame(concept: str, index: int = 1, *slots: tuple[str, Filler], **kw) -> FrameInstance:
    return FrameInstance(concept, index, tuple(slots), **kw)


@dataclass(frozen=True)
class FrameDocument:
    frames: tuple[FrameInstance, ...] = ()
    label: str | None = None

    def __iter__(self) -> Iterator[FrameInstance]:
        return iter(self.frames)

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, key: str) -> FrameInstance:
        for f in self.frames:
            if f.id == key:
                return f
        raise KeyError(key)

    def get(self, key: str) -> FrameInstance | None:
        try:
            return self[key]
        except KeyError:
            return None

    @property
    def root(self) -> FrameInstance | None:
        return self.frames[0] if self.frames else None

    def by_concept(self, concept: str) -> list[FrameInstance]:
        return [f for f in self.frames if f.concept == concept]

    def resolve(self, filler: Filler) -> FrameInstance | None:
        if isinstance(filler, InstanceRef):
            return self.get(filler.id)
        return None

    def with_provenance(self, provenance: Provenance, tick: int | None = None) -> "FrameDocument":
        return replace(
            self, frames=tuple(replace(f, provenance=provenance, tick=tick) for f in self.frames)
        )


# --------------------------------------------------------------------------
# Lexing: logical lines shared by every notation file
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LogicalLine:
    lineno: int
    col: int  # 1-based column of the first content character
    content: str


def _strip_comment(line: str, in_quote: bool) -> tuple[str, bool]:
    """Cut ``//`` or ``\\hfill`` comments and unwrap ``\\textbf{}`` outside quotes.

    Reports whether a quoted string is still open at end of line.
    """
    out = []
    open_bold = 0
    i = 0
    while i < len(line):
        ch = line[i]
        if in_quote:
            out.append(ch)
            if ch == "\\" and i + 1 < len(line):
                out.append(line[i + 1])
                i += 2
                continue
            if ch == '"':
                in_quote = False
            i += 1
            continue
        if ch == '"':
            in_quote = True
            out.append(ch)
            i += 1
            continue
        if line.startswith("//", i) or line.startswith("\\hfill", i):
            break
        if line.startswith("\\textbf{", i):
            open_bold += 1
            i += len("\\textbf{")
            continue
        if ch == "}" and open_bold:
            open_bold -= 1
            i += 1
            continue
        out.append(ch)
        i += 1
    return "".join(out), in_quote


def split_lines(text: str) -> list[str]:
    """Split on newlines only; other Unicode line breaks may appear inside quoted text."""
    return [line[:-1] if line.endswith("\r") else line for line in text.split("\n")]


def logical_lines(text: str) -> Iterator[LogicalLine]:
    """Yield non-blank content lines with comments and typesetting removed.

    A quoted string left open at end of line continues on the next line; the
    pieces are joined with a single space.
    """
    pending: LogicalLine | None = None
    in_quote = False
    for lineno, raw in enumerate(split_lines(text), start=1):
        stripped, in_quote_after = _strip_comment(raw, in_quote)
        if pending is not None:
            pending = LogicalLine(pending.lineno, pending.col, pending.content + " " + stripped.strip())
            if not in_quote_after:
                yield pending
                pending = None
            in_quote = in_quote_after
            continue
        content = stripped.rstrip()
        if not content.strip():
            in_quote = in_quote_after
            continue
        col = len(content) - len(content.lstrip()) + 1
        logical = LogicalLine(lineno, col, content.strip())
        if in_quote_after:
            pending = logical
        else:
            yield logical
        in_quote = in_quote_after
    if pending is not None:
        raise FrameSyntaxError("unterminated quoted string", pending.lineno, pending.col)


def split_slot_line(line: LogicalLine) -> tuple[str, str]:
    """Split ``name filler`` into its two parts."""
    content = line.content
    if content.startswith("*"):
        m = re.match(rf"\*({SLOT})\s", content)
        if not m:
            raise FrameSyntaxError(f"malformed directive {content!r}", line.lineno, line.col)
        return "*" + m.group(1), content
    parts = content.split(None, 1)
    if len(parts) != 2:
        raise FrameSyntaxError(f"slot line needs a name and a filler: {content!r}", line.lineno, line.col)
    return parts[0], parts[1]


# --------------------------------------------------------------------------
# parse / render
# --------------------------------------------------------------------------

_HEADER_RE = re.compile(rf"#({CONCEPT})\.(\d+)")
_LABEL_RE = re.compile(r"([A-Za-z][A-Za-z0-9-]*)\.(\d+)")


def _iter_refs(filler: Filler) -> Iterable[InstanceRef]:
    if isinstance(filler, InstanceRef):
        yield filler


def parse_frames(text: str, *, known: Iterable[str] = ()) -> FrameDocument:
    """Parse frame notation into a :class:`FrameDocument`.

    ``known`` lists instance ids that live outside the document (for example
    scene participants already in the situation model); references to them
    are not treated as dangling.
    """
    frames: list[tuple[FrameInstance, LogicalLine]] = []
    current: list | None = None
    header: tuple[str, int, LogicalLine] | None = None
    label: str | None = None
    seen: dict[str, LogicalLine] = {}

    def close():
        nonlocal current, header
        if header is not None:
            concept, index, where = header
            frames.append((FrameInstance(concept, index, tuple(current)), where))
        current, header = None, None

    for line in logical_lines(text):
        content = line.content
        if m := _HEADER_RE.fullmatch(content):
            close()
            fid = f"{m.group(1)}.{m.group(2)}"
            if fid in seen:
                raise DuplicateInstanceError(f"duplicate instance id #{fid}", line.lineno, line.col)
            seen[fid] = line
            header = (m.group(1), int(m.group(2)), line)
            current = []
            continue
        if _LABEL_RE.fullmatch(content) and header is None and not frames and label is None:
            label = content
            continue
        if header is None:
            raise FrameSyntaxError(f"slot line outside a frame: {content!r}", line.lineno, line.col)
        name, raw = split_slot_line(line)
        if not name.startswith("*") and not _SLOT_NAME_RE.fullmatch(name):
            raise FrameSyntaxError(f"invalid slot name {name!r}", line.lineno, line.col)
        if any(key == name for key, _ in current):
            raise FrameSyntaxError(f"duplicate slot {name!r}", line.lineno, line.col)
        try:
            filler = parse_filler(raw)
        except ValueError as exc:
            col = line.col + len(content) - len(raw)
            raise FrameSyntaxError(str(exc), line.lineno, col) from None
        current.append((name, filler))
    close()

    ids = set(seen) | set(known)
    for fr, where in frames:
        for _, filler in fr.slots:
            for ref in _iter_refs(filler):
                if ref.id not in ids:
                    raise DanglingReferenceError(
                        f"#{ref.id} referenced from #{fr.id} is not defined", where.lineno, where.col
                    )
    return FrameDocument(tuple(fr for fr, _ in frames), label)


def render_frames(doc: FrameDocument) -> str:
    """Render a document in canonical form (two-space slot indentation)."""
    lines: list[str] = []
    if doc.label:
        lines.append(doc.label)
    for fr in doc.frames:
        lines.append(f"#{fr.id}")
        width = max((len(k) for k, v in fr.slots if not isinstance(v, Directive)), default=0)
        for key, filler in fr.slots:
            if isinstance(filler, Directive):
                lines.append("  " + render_filler(filler))
            else:
                lines.append(f"  {key.ljust(width)} {render_filler(filler)}")
    return "\n".join(lines) + ("\n" if lines else "")


def check_document(doc: FrameDocument, *, known: Iterable[str] = ()) -> None:
    """Raise if ids collide or an InstanceRef has no target."""
    ids: set[str] = set()
    for fr in doc.frames:
        if fr.id in ids:
            raise DuplicateInstanceError(f"duplicate instance id #{fr.id}")
        ids.add(fr.id)
    ids |= set(known)
    for fr in doc.frames:
        for _, filler in fr.slots:
            for ref in _iter_refs(filler):
                if ref.id not in ids:
                    raise DanglingReferenceError(f"#{ref.id} referenced from #{fr.id} is not defined")


def skeleton(doc: FrameDocument) -> tuple:
    """Structure of ``doc`` up to instance renumbering.

    Instances are renamed in order of first appearance, so two documents that
    differ only in their indices (or in which index a concept starts at) have
    equal skeletons.
    """
    names: dict[str, str] = {}
    counters: dict[str, int] = {}

    def name_of(concept: str, iid: str) -> str:
        if iid not in names:
            counters[concept] = counters.get(concept, 0) + 1
            names[iid] = f"{concept}.{counters[concept]}"
        return names[iid]

    for fr in doc.frames:
        name_of(fr.concept, fr.id)

    out = []
    for fr in doc.frames:
        slots = []
        for key, filler in fr.slots:
            if isinstance(filler, InstanceRef):
                slots.append((key, ("ref", name_of(filler.concept, filler.id))))
            elif isinstance(filler, CoRef):
                slots.append((key, ("coref", filler.concept)))
            else:
                slots.append((key, filler))
        out.append((names[fr.id], tuple(slots)))
    return tuple(out)
