"""Bookkeeping of the bytes a backward pass keeps alive."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ComparabilityError


def _walk(obj, seen):
    if isinstance(obj, np.ndarray):
        if id(obj) in seen:
            return 0
        seen.add(id(obj))
        return obj.nbytes
    if hasattr(obj, "activations"):
        return sum(_walk(a, seen) for a in obj.activations())
    if isinstance(obj, (list, tuple)):
        return sum(_walk(a, seen) for a in obj)
    return 0


def retained_nbytes(*caches):
    """Bytes of distinct arrays reachable from forward caches."""
    return _walk(caches, set())


class MemoryMeter:
    """Per-iteration retained-for-gradient bytes with per-epoch peaks.

    Activation caches are de-duplicated by array identity; explicit
    buffers (e.g. the frozen prefix output of PF) are counted as given.
    """

    def __init__(self):
        self.iterations = []
        self.epoch_peaks = []
        self.supplementary_bytes = 0
        self._seen = None
        self._bytes = 0
        self._delta = None
        self._batch = 0
        self._epoch_peak = 0

    def start_iteration(self, delta=1, batch=1):
        self._seen = set()
        self._bytes = 0
        self._delta = delta
        self._batch = batch

    def retain(self, cache):
        self._bytes += _walk(cache, self._seen)

    def retain_buffer(self, arr):
        self._bytes += int(np.asarray(arr).nbytes)

    @property
    def current(self):
        return self._bytes

    def end_iteration(self):
        self.iterations.append((self._delta, self._bytes, self._batch))
        self._epoch_peak = max(self._epoch_peak, self._bytes)
        self._seen = None

    def end_epoch(self):
        self.epoch_peaks.append(self._epoch_peak)
        self._epoch_peak = 0

    def record_supplementary(self, nbytes):
        self.supplementary_bytes = max(self.supplementary_bytes, int(nbytes))

    @property
    def peak(self):
        vals = [b for _, b, _ in self.iterations]
        return max(vals) if vals else 0

    def peak_for_batch(self, batch):
        vals = [b for _, b, bs in self.iterations if bs == batch]
        return max(vals) if vals else 0


@dataclass
class MemoryRow:
    framework: str
    delta: int
    peak_bytes: int
    supplementary_bytes: int = 0


@dataclass
class MemoryReport:
    rows: list
    checks: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(self.checks.values())


def retained_memory_report(runs):
    """Compare peak retained bytes of runs on one model/dataset.

    ``runs`` is a list of ``(framework, delta, meter, parameter_count)``.
    Rows are sorted by peak bytes; ``checks`` records the expected
    orderings (missing comparisons are omitted).
    """
    counts = {r[3] for r in runs}
    if len(counts) > 1:
        raise ComparabilityError(f"runs use different model sizes: {sorted(counts)}")
    rows = [MemoryRow(fw, int(d), int(m.peak), int(m.supplementary_bytes)) for fw, d, m, _ in runs]
    by = {(r.framework, r.delta): r.peak_bytes for r in rows}
    checks = {}
    spf = sorted(d for fw, d in by if fw == "spf")
    if len(spf) > 1:
        checks["spf_constant_in_delta"] = len({by[("spf", d)] for d in spf}) == 1
    atf = sorted(d for fw, d in by if fw == "atf")
    if len(atf) > 1:
        checks["atf_increasing_in_delta"] = all(by[("atf", a)] < by[("atf", b)] for a, b in zip(atf, atf[1:]))
    for d in atf:
        if ("pf", d) in by:
            checks[f"pf_below_atf_delta{d}"] = by[("pf", d)] < by[("atf", d)]
    base = [b for (fw, _), b in by.items() if fw == "one_step"]
    if base:
        others = [b for (fw, _), b in by.items() if fw != "one_step"]
        checks["one_step_smallest"] = all(min(base) <= b for b in others)
    rows.sort(key=lambda r: (r.peak_bytes, r.framework, r.delta))
    return MemoryReport(rows, checks)
