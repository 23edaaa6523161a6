"""A hand-scripted stand-in for ClockBundle used in deterministic tests."""

import numpy as np


class ScriptedClocks:
    """Same query interface as ClockBundle, with prescribed events.

    ``events_by_label`` maps label -> list of (time, mark) pairs.
    """

    def __init__(self, n_sites, events_by_label, j=1.0):
        self.n_sites = n_sites
        self.j = j
        self.reservoir_rate = 2.0 * j / n_sites
        self._events = {
            label: sorted(evs) for label, evs in events_by_label.items()
        }

    @property
    def eps(self):
        return 1.0 / self.n_sites

    def label_events(self, label, t0, t1):
        evs = [(t, m) for (t, m) in self._events.get(label, []) if t0 <= t < t1]
        times = np.array([t for t, _ in evs], dtype=float)
        marks = np.array([m for _, m in evs], dtype=np.int8)
        return times, marks

    def plus_count(self, t):
        _, marks = self.label_events(0, 0.0, t)
        return int(np.sum(marks == 1))

    def reservoir_window_counts(self, k, window):
        _, marks = self.label_events(0, k * window, (k + 1) * window)
        return int(np.sum(marks == 1)), int(np.sum(marks == -1))

    def merged(self, n_labels, t0, t1):
        all_t, all_l, all_m, all_i = [], [], [], []
        for label in range(n_labels + 1):
            times, marks = self.label_events(label, t0, t1)
            all_t.append(times)
            all_m.append(marks)
            all_l.append(np.full(times.size, label, dtype=np.int64))
            all_i.append(np.arange(times.size, dtype=np.int64))
        times = np.concatenate(all_t) if all_t else np.empty(0)
        labels = np.concatenate(all_l) if all_l else np.empty(0, dtype=np.int64)
        marks = np.concatenate(all_m) if all_m else np.empty(0, dtype=np.int8)
        idx = np.concatenate(all_i) if all_i else np.empty(0, dtype=np.int64)
        order = np.lexsort((idx, labels, times))
        return times[order], labels[order], marks[order]
