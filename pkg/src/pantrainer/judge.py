"""Score a strike log against a chart.

The score is the number of correct hits: the maximum number of note/strike
pairs such that each pair shares a dimple and the strike lands within the
hit window of the note onset (|t_strike - onset| <= window_ms, inclusive).
Each note and each strike is used at most once.

The reported pairing is canonical: per dimple, strikes are taken in time
order (input order breaks timestamp ties) and each is paired with the
earliest unmatched in-window note, so the result does not depend on the
order the strike log arrived in.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

from .chart import DIMPLE_COUNT, Chart

try:
    from ._matchcore import match_sorted as _match_sorted
    MATCH_BACKEND = "compiled"
except ImportError:  # extension not built; pure-Python kernel
    from ._matchpy import match_sorted as _match_sorted
    MATCH_BACKEND = "python"

DEFAULT_WINDOW_MS = 150


class Source(enum.Enum):
    UI = "UI"
    SIMULATED = "SIMULATED"


@dataclass(frozen=True)
class Strike:
    dimple: int
    t_ms: int
    source: Source = Source.UI

    def __post_init__(self):
        if not 0 <= self.dimple < DIMPLE_COUNT:
            raise ValueError(f"dimple {self.dimple} out of range")


@dataclass(frozen=True)
class JudgmentReport:
    pairs: tuple[tuple[int, int, int], ...]  # (note_id, strike_index, delta_ms)
    misses: tuple[int, ...]                  # unmatched note ids
    extraneous: tuple[int, ...]              # unmatched strike indices
    score: int
    max_score: int
    window_ms: int


def match_dimple(note_onsets: Sequence[int], strike_times: Sequence[int],
                 window_ms: int) -> list[tuple[int, int]]:
    """Maximum matching for a single dimple; both inputs must be ascending."""
    if any(a > b for a, b in zip(note_onsets, note_onsets[1:])):
        raise ValueError("note_onsets must be ascending")
    if any(a > b for a, b in zip(strike_times, strike_times[1:])):
        raise ValueError("strike_times must be ascending")
    return _match_sorted(list(note_onsets), list(strike_times), window_ms)


def judge_session(chart: Chart, strikes: Sequence[Strike],
                  window_ms: int = DEFAULT_WINDOW_MS) -> JudgmentReport:
    """Judge a full strike log against a chart."""
    if window_ms <= 0:
        raise ValueError("window_ms must be positive")

    notes_by_dimple: list[list[tuple[int, int]]] = [[] for _ in range(DIMPLE_COUNT)]
    for note in chart.notes:  # chart order is already time-sorted
        notes_by_dimple[note.dimple].append((note.onset_ms, note.id))

    strikes_by_dimple: list[list[tuple[int, int]]] = [[] for _ in range(DIMPLE_COUNT)]
    for idx, strike in enumerate(strikes):
        strikes_by_dimple[strike.dimple].append((strike.t_ms, idx))
    for lane in strikes_by_dimple:
        lane.sort()  # (t_ms, input index): canonical order

    pairs: list[tuple[int, int, int]] = []
    matched_notes: set[int] = set()
    matched_strikes: set[int] = set()
    for dimple in range(DIMPLE_COUNT):
        lane_notes = notes_by_dimple[dimple]
        lane_strikes = strikes_by_dimple[dimple]
        local = _match_sorted([t for t, _ in lane_notes],
                              [t for t, _ in lane_strikes], window_ms)
        for ni, si in local:
            onset, note_id = lane_notes[ni]
            t, strike_idx = lane_strikes[si]
            pairs.append((note_id, strike_idx, t - onset))
            matched_notes.add(note_id)
            matched_strikes.add(strike_idx)

    pairs.sort()
    misses = tuple(n.id for n in chart.notes if n.id not in matched_notes)
    extraneous = tuple(i for i in range(len(strikes)) if i not in matched_strikes)
    return JudgmentReport(tuple(pairs), misses, extraneous,
                          score=len(pairs), max_score=chart.note_count,
                          window_ms=window_ms)


@dataclass(frozen=True)
class ScoreSummary:
    hits: int
    misses: int
    extraneous: int
    mean_abs_delta_ms: float
    sd_delta_ms: float


def score_summary(report: JudgmentReport) -> ScoreSummary:
    """Aggregate a report: hit/miss counts plus timing-error statistics.

    Mean and sd are over matched pairs only; the sd is the sample standard
    deviation (n-1) and defined as 0 for fewer than two pairs.
    """
    deltas = [d for _, _, d in report.pairs]
    n = len(deltas)
    mean_abs = sum(abs(d) for d in deltas) / n if n else 0.0
    if n > 1:
        mean = sum(deltas) / n
        sd = math.sqrt(sum((d - mean) ** 2 for d in deltas) / (n - 1))
    else:
        sd = 0.0
    return ScoreSummary(report.score, len(report.misses), len(report.extraneous),
                        mean_abs, sd)
