"""Note charts: data model, text format, validation, bundled songs.

A chart is an ordered list of patterns, each an ordered list of notes.
A note names one of the eight handpan dimples (0 = the central ding) and
an onset in integer milliseconds from chart start.  The text format is
line oriented and bit exact; see ``parse_chart`` for the grammar.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

DIMPLE_COUNT = 8

HEADER_LINE = "#CHART v1"

# Timing used for the bundled songs (inter-onset within a pattern and the
# extra gap between patterns).  Invented values; the source material gives
# note counts and pattern sizes only.
BUILTIN_STEP_MS = 500
BUILTIN_GAP_MS = 1500


class ChartError(Exception):
    """Base class for chart format errors."""


class ChartSyntaxError(ChartError):
    """Document does not match the chart grammar."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class ChartSemanticError(ChartError):
    """Document parses but violates a chart invariant."""


@dataclass(frozen=True)
class Note:
    dimple: int
    onset_ms: int
    id: int


@dataclass(frozen=True)
class Pattern:
    index: int
    notes: tuple[Note, ...]


@dataclass(frozen=True)
class Chart:
    title: str
    scale_name: str
    patterns: tuple[Pattern, ...]

    @property
    def notes(self) -> tuple[Note, ...]:
        return tuple(n for p in self.patterns for n in p.notes)

    @property
    def note_count(self) -> int:
        return sum(len(p.notes) for p in self.patterns)

    def duration_ms(self) -> int:
        notes = self.notes
        return notes[-1].onset_ms if notes else 0


@dataclass(frozen=True)
class Violation:
    rule: str
    where: str

    def __str__(self) -> str:
        return f"{self.rule} at {self.where}" if self.where else self.rule


def validate_chart(chart: Chart) -> list[Violation]:
    """Return all invariant violations ([] means the chart is valid)."""
    out: list[Violation] = []
    if not chart.patterns:
        out.append(Violation("NoPatterns", ""))
    for pat in chart.patterns:
        if pat.index < 1:
            out.append(Violation("BadPatternIndex", f"pattern {pat.index}"))
        if not pat.notes:
            out.append(Violation("EmptyPattern", f"pattern {pat.index}"))

    notes = chart.notes
    for pos, note in enumerate(notes):
        if note.id != pos:
            out.append(Violation("NonDenseIds", f"note id {note.id}"))
        if not 0 <= note.dimple < DIMPLE_COUNT:
            out.append(Violation("DimpleOutOfRange", f"note id {note.id}"))
        if note.onset_ms < 0:
            out.append(Violation("NegativeOnset", f"note id {note.id}"))

    prev: Optional[Note] = None
    for note in notes:
        if prev is not None and note.onset_ms < prev.onset_ms:
            out.append(Violation("NonMonotoneOnset", f"note id {note.id}"))
        prev = note

    # chords (equal onsets) must use distinct dimples within a pattern
    for pat in chart.patterns:
        chord: set[int] = set()
        last: Optional[int] = None
        for note in pat.notes:
            if note.onset_ms != last:
                chord = set()
                last = note.onset_ms
            if note.dimple in chord:
                out.append(Violation("DuplicateChordDimple", f"note id {note.id}"))
            chord.add(note.dimple)
    return out


def parse_chart(text: str) -> Chart:
    """Parse a chart document.

    Grammar (LF line endings, ASCII)::

        #CHART v1
        #TITLE <text>
        #SCALE <text>
        #PATTERN <int >= 1>
        N <dimple 0-7> <onset_ms>
        ...

    One or more ``#PATTERN`` blocks, each with at least one note line.
    Blank lines and ``;`` comment lines are ignored anywhere after line 1.
    """
    lines = text.split("\n")
    if not lines or lines[0] != HEADER_LINE:
        raise ChartSyntaxError(1, f"expected {HEADER_LINE!r} header")

    def significant(start: int) -> Iterable[tuple[int, str]]:
        for no, raw in enumerate(lines[start:], start + 1):
            line = raw.rstrip("\r")
            if not line.strip() or line.lstrip().startswith(";"):
                continue
            yield no, line

    stream = significant(1)

    def expect_tag(tag: str) -> tuple[int, str]:
        try:
            no, line = next(stream)
        except StopIteration:
            raise ChartSyntaxError(len(lines), f"missing {tag} line") from None
        if not line.startswith(tag + " "):
            raise ChartSyntaxError(no, f"expected {tag} line, got {line!r}")
        return no, line[len(tag) + 1:]

    _, title = expect_tag("#TITLE")
    _, scale = expect_tag("#SCALE")

    patterns: list[Pattern] = []
    cur_index: Optional[int] = None
    cur_notes: list[Note] = []
    next_id = 0

    def close_pattern(no: int) -> None:
        nonlocal cur_index, cur_notes
        if cur_index is None:
            return
        if not cur_notes:
            raise ChartSyntaxError(no, f"pattern {cur_index} has no notes")
        patterns.append(Pattern(cur_index, tuple(cur_notes)))
        cur_index, cur_notes = None, []

    for no, line in stream:
        fields = line.split()
        if fields[0] == "#PATTERN":
            close_pattern(no)
            if len(fields) != 2:
                raise ChartSyntaxError(no, "#PATTERN takes one integer")
            try:
                cur_index = int(fields[1])
            except ValueError:
                raise ChartSyntaxError(no, f"bad pattern index {fields[1]!r}") from None
            if cur_index < 1:
                raise ChartSyntaxError(no, "pattern index must be >= 1")
        elif fields[0] == "N":
            if cur_index is None:
                raise ChartSyntaxError(no, "note line before any #PATTERN")
            if len(fields) != 3:
                raise ChartSyntaxError(no, "note line is 'N <dimple> <onset_ms>'")
            try:
                dimple, onset = int(fields[1]), int(fields[2])
            except ValueError:
                raise ChartSyntaxError(no, f"bad note fields {line!r}") from None
            cur_notes.append(Note(dimple, onset, next_id))
            next_id += 1
        else:
            raise ChartSyntaxError(no, f"unrecognized line {line!r}")
    close_pattern(len(lines))

    chart = Chart(title, scale, tuple(patterns))
    violations = validate_chart(chart)
    if violations:
        raise ChartSemanticError("; ".join(str(v) for v in violations))
    return chart


def serialize_chart(chart: Chart) -> str:
    """Render a chart to its canonical document (LF endings, trailing LF)."""
    out = [HEADER_LINE, f"#TITLE {chart.title}", f"#SCALE {chart.scale_name}"]
    for pat in chart.patterns:
        out.append(f"#PATTERN {pat.index}")
        for note in pat.notes:
            out.append(f"N {note.dimple} {note.onset_ms}")
    return "\n".join(out) + "\n"


def load_chart(path: str | Path) -> Chart:
    return parse_chart(Path(path).read_text(encoding="utf-8"))


def save_chart(path: str | Path, chart: Chart) -> None:
    Path(path).write_text(serialize_chart(chart), encoding="utf-8", newline="")


def _build_chart(title: str, sizes: list[int], dimple_cycle: list[int],
                 step_ms: int = BUILTIN_STEP_MS, gap_ms: int = BUILTIN_GAP_MS) -> Chart:
    patterns = []
    t = 0
    next_id = 0
    for pat_no, size in enumerate(sizes, 1):
        if pat_no > 1:
            t += gap_ms - step_ms
        cycle = itertools.cycle(dimple_cycle)
        notes = []
        for _ in range(size):
            notes.append(Note(next(cycle), t, next_id))
            next_id += 1
            t += step_ms
        patterns.append(Pattern(pat_no, tuple(notes)))
    return Chart(title, "D-Integral", tuple(patterns))


def builtin_charts() -> list[Chart]:
    """The bundled study material: two songs plus a scale warmup.

    song_a: 80 notes, 10 patterns of 8.  song_b: 49 notes, patterns
    12/12/12/12/1.  Melodies are synthesized dimple cycles so counts and
    timing are stable; the original recordings are not distributable.
    """
    song_a = _build_chart("Song A", [8] * 10, list(range(8)))
    song_b = _build_chart("Song B", [12, 12, 12, 12, 1], list(range(8)) + [0, 1, 2, 3])
    warmup = _build_chart("Scale Warmup", [8], list(range(8)), step_ms=1000)
    return [song_a, song_b, warmup]


BUILTIN_NAMES = ("song_a", "song_b", "scale_warmup")


def builtin_chart(name: str) -> Chart:
    try:
        return builtin_charts()[BUILTIN_NAMES.index(name)]
    except ValueError:
        raise KeyError(f"unknown builtin chart {name!r}") from None


def builtin_chart_text(name: str) -> str:
    """Raw text of a bundled .chart asset (includes comment header)."""
    if name not in BUILTIN_NAMES:
        raise KeyError(f"unknown builtin chart {name!r}")
    return resources.files("pantrainer.data").joinpath(f"{name}.chart").read_text("utf-8")
