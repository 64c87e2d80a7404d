"""Study planning, headless execution, and result logging.

A study session crosses guidance interfaces with songs (the full design is
6 interfaces x 2 songs per participant).  Interface order is
counterbalanced with a Williams balanced Latin square so every condition
appears once per row and column and every ordered adjacent pair occurs
exactly once; rows are assigned to participants cyclically.

Headless runs replace the human with a simulated player profile and use a
simulated wall clock, so identical seeds give byte-identical results.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Mapping, Sequence

from .chart import Chart
from .judge import DEFAULT_WINDOW_MS, Source, Strike, judge_session

RESULTS_HEADER = ["participant", "order_index", "interface", "song",
                  "score", "max_score", "window_ms", "timestamp"]

# fixed epoch for simulated timestamps (headless runs must be reproducible)
_SIM_EPOCH = datetime(2024, 1, 5, 12, 0, 0, tzinfo=timezone.utc)


class OddOrderUnsupportedError(ValueError):
    """Single-square Williams construction needs an even order."""


class SchemaError(ValueError):
    """Results file header does not match the expected schema."""


def balanced_latin_square(k: int) -> list[list[int]]:
    """Order-k Williams balanced Latin square (k even).

    Every condition appears once per row and per column, and every ordered
    pair of conditions is adjacent exactly once across rows.
    """
    if k <= 0:
        raise ValueError("order must be positive")
    if k % 2:
        raise OddOrderUnsupportedError(
            f"order {k} is odd; use balanced_latin_square_odd")
    walk = [0]
    for j in range(1, k):
        walk.append((j + 1) // 2 if j % 2 else k - j // 2)
    return [[(r + w) % k for w in walk] for r in range(k)]


def balanced_latin_square_odd(k: int) -> list[list[int]]:
    """Odd-order variant: each Williams row plus its mirror (2k rows).

    Every ordered adjacent pair then appears exactly twice.
    """
    if k <= 0 or k % 2 == 0:
        raise ValueError("order must be odd and positive")
    walk = [0]
    for j in range(1, k):
        walk.append((j + 1) // 2 if j % 2 else k - j // 2)
    rows = [[(r + w) % k for w in walk] for r in range(k)]
    return rows + [list(reversed(row)) for row in rows]


@dataclass(frozen=True)
class SessionPlan:
    participants: tuple[str, ...]
    conditions: tuple[tuple[str, str], ...]   # (interface_kind, song_id)
    orders: tuple[tuple[int, ...], ...]       # per participant, condition indices


@dataclass(frozen=True)
class TrialResult:
    participant: str
    order_index: int
    interface_kind: str
    song_id: str
    score: int
    max_score: int
    window_ms: int
    timestamp_iso8601: str


@dataclass(frozen=True)
class PlayerProfile:
    """Simulated participant for headless runs."""
    hit_prob: float = 1.0
    jitter_sd_ms: float = 0.0
    bias_ms: float = 0.0
    wrong_dimple_prob: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.hit_prob <= 1.0:
            raise ValueError("hit_prob must be in [0, 1]")
        if not 0.0 <= self.wrong_dimple_prob <= 1.0:
            raise ValueError("wrong_dimple_prob must be in [0, 1]")
        if self.jitter_sd_ms < 0:
            raise ValueError("jitter sd must be >= 0")


def plan_session(participant_ids: Sequence[str],
                 interfaces: Sequence[str],
                 songs: Sequence[str]) -> SessionPlan:
    """Cross interfaces x songs and counterbalance interface order.

    Interface order comes from the balanced square (rows cycled across
    participants); within an interface both songs are played, with song
    order alternating by participant parity.
    """
    if not participant_ids:
        raise ValueError("at least one participant required")
    k = len(interfaces)
    square = balanced_latin_square(k) if k % 2 == 0 else balanced_latin_square_odd(k)
    n_songs = len(songs)
    conditions = tuple((i, s) for i in interfaces for s in songs)

    orders = []
    for p_idx, _ in enumerate(participant_ids):
        row = square[p_idx % len(square)]
        song_order = range(n_songs) if p_idx % 2 == 0 else reversed(range(n_songs))
        song_order = list(song_order)
        order = [iface_idx * n_songs + s for iface_idx in row for s in song_order]
        orders.append(tuple(order))
    return SessionPlan(tuple(participant_ids), conditions, tuple(orders))


def serialize_plan(plan: SessionPlan) -> str:
    lines = [f"{pid}: " + " ".join(str(i) for i in order)
             for pid, order in zip(plan.participants, plan.orders)]
    return "\n".join(lines) + "\n"


def _simulate_strikes(chart: Chart, profile: PlayerProfile,
                      rng: random.Random) -> list[Strike]:
    strikes = []
    for note in chart.notes:
        if rng.random() >= profile.hit_prob:
            continue
        t = note.onset_ms + profile.bias_ms + rng.gauss(0.0, profile.jitter_sd_ms)
        dimple = note.dimple
        if profile.wrong_dimple_prob and rng.random() < profile.wrong_dimple_prob:
            dimple = rng.choice([d for d in range(8) if d != note.dimple])
        strikes.append(Strike(dimple, int(round(t)), Source.SIMULATED))
    return strikes


def run_headless(plan: SessionPlan, charts: Mapping[str, Chart],
                 profile: PlayerProfile,
                 window_ms: int = DEFAULT_WINDOW_MS,
                 seed: int = 0) -> list[TrialResult]:
    """Run every planned trial with a simulated player.

    Each trial draws from its own (seed, participant, trial) random stream,
    so results do not depend on execution order.  Timestamps advance a
    simulated clock from a fixed epoch.
    """
    results = []
    for p_idx, pid in enumerate(plan.participants):
        for order_index, cond_idx in enumerate(plan.orders[p_idx]):
            interface_kind, song_id = plan.conditions[cond_idx]
            chart = charts[song_id]
            rng = random.Random(f"headless:{seed}:{pid}:{order_index}")
            strikes = _simulate_strikes(chart, profile, rng)
            report = judge_session(chart, strikes, window_ms)
            stamp = _SIM_EPOCH + timedelta(hours=p_idx, minutes=5 * order_index)
            results.append(TrialResult(
                participant=pid,
                order_index=order_index,
                interface_kind=interface_kind,
                song_id=song_id,
                score=report.score,
                max_score=report.max_score,
                window_ms=window_ms,
                timestamp_iso8601=stamp.isoformat().replace("+00:00", "Z"),
            ))
    return results


def write_results(path: str | Path, results: Sequence[TrialResult]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULTS_HEADER)
        for r in results:
            writer.writerow([r.participant, r.order_index, r.interface_kind,
                             r.song_id, r.score, r.max_score, r.window_ms,
                             r.timestamp_iso8601])


def read_results(path: str | Path) -> list[TrialResult]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("empty results file") from None
        if header != RESULTS_HEADER:
            raise SchemaError(f"unexpected header {header!r}")
        out = []
        for row in reader:
            if len(row) != len(RESULTS_HEADER):
                raise SchemaError(f"row has {len(row)} fields: {row!r}")
            out.append(TrialResult(row[0], int(row[1]), row[2], row[3],
                                   int(row[4]), int(row[5]), int(row[6]), row[7]))
        return out
