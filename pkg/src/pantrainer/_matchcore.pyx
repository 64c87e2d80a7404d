# cython: boundscheck=False, wraparound=False
"""Compiled strike-matching kernel.

Same contract as pantrainer._matchpy.match_sorted; selected at import by
pantrainer.judge when built.  Worth compiling because every trial of a
headless study run funnels through this loop.
"""

from libc.stdlib cimport free, malloc


def match_sorted(note_onsets, strike_times, window_ms):
    cdef Py_ssize_t n = len(note_onsets)
    cdef Py_ssize_t m = len(strike_times)
    cdef long long w = window_ms
    cdef long long *onsets = <long long *> malloc(n * sizeof(long long)) if n else NULL
    cdef long long *times = <long long *> malloc(m * sizeof(long long)) if m else NULL
    cdef Py_ssize_t i = 0, j = 0
    cdef long long t
    pairs = []
    if (n and onsets == NULL) or (m and times == NULL):
        free(onsets)
        free(times)
        raise MemoryError()
    try:
        for i in range(n):
            onsets[i] = note_onsets[i]
        for j in range(m):
            times[j] = strike_times[j]
        i = 0
        for j in range(m):
            t = times[j]
            while i < n and onsets[i] < t - w:
                i += 1
            if i < n and onsets[i] <= t + w:
                pairs.append((i, j))
                i += 1
        return pairs
    finally:
        free(onsets)
        free(times)
