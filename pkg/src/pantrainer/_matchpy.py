"""Pure-Python strike-matching kernel.

Fallback for pantrainer._matchcore; both implement the same single-dimple
greedy: scan strikes in time order and pair each with the earliest
unmatched note whose onset lies within the hit window.  For in-window
compatibility (an interval per strike) this greedy attains the maximum
matching; the test suite checks it against exhaustive search.
"""

from __future__ import annotations


def match_sorted(note_onsets, strike_times, window_ms):
    """Maximum matching between ascending onsets and ascending strike times.

    Returns a list of (note_index, strike_index) pairs, both into the given
    lists.  A pair is admissible when |strike - onset| <= window_ms.
    """
    pairs = []
    i = 0
    n = len(note_onsets)
    for j, t in enumerate(strike_times):
        lo = t - window_ms
        while i < n and note_onsets[i] < lo:
            i += 1  # too old for this and every later strike
        if i < n and note_onsets[i] <= t + window_ms:
            pairs.append((i, j))
            i += 1
    return pairs
