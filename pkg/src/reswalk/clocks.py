"""One realization of the product probability space driving every process.

Label 0 carries the reservoir clock: Poisson events at rate 2*j/N whose
fair +/-1 marks decide birth (at site 0) versus death (at the edge).
Labels 1, 2, ... carry unit-rate walk clocks with fair direction marks.

Streams are counter-based: label i is generated by Philox keyed on
(seed, i), so any label can be materialized lazily and reproducibly no
matter in which order other labels were consumed.  This is what lets the
true, free and block-batched processes run on literally the same noise.

Ties between float event times are broken by (time, label, index within
label); exact ties have probability zero but the rule makes runs
deterministic if one ever occurs.
"""

from __future__ import annotations

import numpy as np

__all__ = ["ClockBundle"]

_CHUNK = 2048


class _LabelStream:
    """Lazily extended (times, marks) pair for one label."""

    __slots__ = ("gen", "rate", "times", "marks", "_last")

    def __init__(self, seed: int, label: int, rate: float):
        key = np.array([seed & 0xFFFFFFFFFFFFFFFF, label & 0xFFFFFFFFFFFFFFFF],
                       dtype=np.uint64)
        self.gen = np.random.Generator(np.random.Philox(key=key))
        self.rate = rate
        self.times = np.empty(0)
        self.marks = np.empty(0, dtype=np.int8)
        self._last = 0.0

    def extend_to(self, horizon: float):
        while self._last <= horizon:
            gaps = self.gen.exponential(1.0 / self.rate, _CHUNK)
            new_times = self._last + np.cumsum(gaps)
            new_marks = (self.gen.integers(0, 2, _CHUNK) * 2 - 1).astype(np.int8)
            self.times = np.concatenate([self.times, new_times])
            self.marks = np.concatenate([self.marks, new_marks])
            self._last = float(self.times[-1])

    def window(self, t0: float, t1: float):
        """Events with time in [t0, t1)."""
        self.extend_to(t1)
        lo = np.searchsorted(self.times, t0, side="left")
        hi = np.searchsorted(self.times, t1, side="left")
        return self.times[lo:hi], self.marks[lo:hi]


class ClockBundle:
    """Per-label Poisson event streams with fair +/-1 marks.

    ``n_sites`` is N (the lattice is {0..N}); the reservoir label fires at
    rate 2*j/N and the walk labels at rate 1.
    """

    def __init__(self, seed: int, n_sites: int, j: float):
        if n_sites < 2:
            raise ValueError("need at least 2 sites")
        if not j > 0:
            raise ValueError("j must be positive")
        self.seed = int(seed)
        self.n_sites = int(n_sites)
        self.j = float(j)
        self.reservoir_rate = 2.0 * j / n_sites
        self._streams: dict[int, _LabelStream] = {}

    @property
    def eps(self) -> float:
        return 1.0 / self.n_sites

    def _stream(self, label: int) -> _LabelStream:
        st = self._streams.get(label)
        if st is None:
            rate = self.reservoir_rate if label == 0 else 1.0
            st = _LabelStream(self.seed, label, rate)
            self._streams[label] = st
        return st

    def label_events(self, label: int, t0: float, t1: float):
        """(times, marks) of one label in [t0, t1)."""
        return self._stream(label).window(t0, t1)

    def plus_count(self, t: float) -> int:
        """Number of reservoir '+' marks up to time t (the birth budget)."""
        times, marks = self.label_events(0, 0.0, t)
        return int(np.sum(marks == 1))

    def reservoir_window_counts(self, k: int, window: float):
        """(+ count, - count) of reservoir marks in window k of given length."""
        _, marks = self.label_events(0, k * window, (k + 1) * window)
        return int(np.sum(marks == 1)), int(np.sum(marks == -1))

    def merged(self, n_labels: int, t0: float, t1: float):
        """All events of labels 0..n_labels in [t0, t1), time-ordered.

        Returns (times, labels, marks); ties resolved by label then by the
        event's index inside its label stream.
        """
        all_t, all_l, all_m, all_i = [], [], [], []
        for label in range(n_labels + 1):
            times, marks = self.label_events(label, t0, t1)
            all_t.append(times)
            all_m.append(marks)
            all_l.append(np.full(times.size, label, dtype=np.int64))
            all_i.append(np.arange(times.size, dtype=np.int64))
        times = np.concatenate(all_t)
        labels = np.concatenate(all_l)
        marks = np.concatenate(all_m)
        idx = np.concatenate(all_i)
        order = np.lexsort((idx, labels, times))
        return times[order], labels[order], marks[order]
