import random

import pytest

from pantrainer.chart import Chart, Note, Pattern, builtin_charts
from pantrainer.layouts import handpan_model


@pytest.fixture(scope="session")
def model():
    return handpan_model()


@pytest.fixture(scope="session")
def songs():
    song_a, song_b, warmup = builtin_charts()
    return {"song_a": song_a, "song_b": song_b, "scale_warmup": warmup}


def mk_chart(note_specs, title="test", scale="D-Integral"):
    """Single-pattern chart from [(dimple, onset_ms), ...] (any order)."""
    ordered = sorted(note_specs, key=lambda s: (s[1], s[0]))
    notes = tuple(Note(d, t, i) for i, (d, t) in enumerate(ordered))
    return Chart(title, scale, (Pattern(1, notes),))


def random_judge_instance(rng: random.Random, max_notes=12, max_strikes_per_dimple=12):
    """Random (chart, strikes, window) for matcher oracle checks.

    Onsets are distinct so the chart is always valid; strikes cluster in
    the same time range so windows overlap heavily.
    """
    active = rng.sample(range(8), rng.randint(1, 3))
    total_notes = rng.randint(1, max_notes)
    onsets = rng.sample(range(0, 600), total_notes)
    note_specs = [(rng.choice(active), t) for t in onsets]
    strikes = []
    for d in active:
        for _ in range(rng.randint(0, max_strikes_per_dimple)):
            strikes.append((d, rng.randint(-50, 650)))
    rng.shuffle(strikes)
    window = rng.randint(1, 300)
    return mk_chart(note_specs), note_specs, strikes, window
