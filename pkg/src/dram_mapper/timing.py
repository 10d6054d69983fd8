"""Latency calibration and conflict classification.

Calibration samples random address pairs, splits the latency distribution at
its widest gap, and derives a cutoff plus a separation score. Classification
then reduces one timed pair to a same-bank-different-row verdict, with
re-measurement near the cutoff and optional sequential voting on top.
"""
from __future__ import annotations

import random
import statistics
from dataclasses import dataclass, field

from .backend import MemoryBackend
from .errors import BimodalityNotFound

DEFAULT_CALIBRATION_SAMPLES = 4000
MIN_SEPARATION = 2.0


@dataclass(frozen=True)
class Calibration:
    cutoff: float
    separation: float
    gap: float
    fast_mean: float
    conflict_mean: float
    fast_std: float
    conflict_std: float
    pooled_std: float
    sample_count: int
    fast_count: int
    conflict_count: int
    # raw sorted latencies, kept for plotting; not part of the JSON summary
    samples: tuple[float, ...] = field(default=(), compare=False, repr=False)

    def as_dict(self) -> dict:
        return {
            "cutoff": round(self.cutoff, 3),
            "separation": round(self.separation, 3),
            "gap": round(self.gap, 3),
            "fast_mean": round(self.fast_mean, 3),
            "conflict_mean": round(self.conflict_mean, 3),
            "fast_std": round(self.fast_std, 3),
            "conflict_std": round(self.conflict_std, 3),
            "pooled_std": round(self.pooled_std, 3),
            "sample_count": self.sample_count,
            "fast_count": self.fast_count,
            "conflict_count": self.conflict_count,
        }


def _sample_region(backend: MemoryBackend) -> tuple[int, int]:
    """Largest leading run of owned pages, as (base, length)."""
    base = None
    end = None
    for page in backend.iter_pages():
        if base is None:
            base = end = page
        elif page == end + backend.page_size:
            end = page
        else:
            break
    if base is None:
        raise BimodalityNotFound("backend owns no pages")
    return base, end + backend.page_size - base


def calibrate(
    backend: MemoryBackend,
    samples: int = DEFAULT_CALIBRATION_SAMPLES,
    rng: random.Random | None = None,
    min_separation: float = MIN_SEPARATION,
) -> Calibration:
    """Find the latency cutoff between row hits and row conflicts.

    Raises BimodalityNotFound when the sampled latencies do not split into
    two clusters separated by at least ``min_separation`` pooled standard
    deviations.
    """
    rng = rng or random.Random(0)
    if samples < 40:
        raise ValueError("too few calibration samples")
    base, length = _sample_region(backend)
    lines = length // 64
    lats = []
    for _ in range(samples):
        a = base + 64 * rng.randrange(lines)
        b = base + 64 * rng.randrange(lines)
        lats.append(backend.access_pair(a, b))
    lats.sort()

    # widest gap with at least min_side samples on each side
    min_side = max(5, samples // 200)
    split, gap = None, -1.0
    for i in range(min_side, samples - min_side + 1):
        g = lats[i] - lats[i - 1]
        if g > gap:
            split, gap = i, g
    if split is None:
        raise BimodalityNotFound("latency samples cannot be split")
    low, high = lats[:split], lats[split:]
    fast_mean, conflict_mean = statistics.fmean(low), statistics.fmean(high)
    fast_std, conflict_std = statistics.stdev(low), statistics.stdev(high)
    nl, nh = len(low), len(high)
    pooled = (
        (fast_std**2 * (nl - 1) + conflict_std**2 * (nh - 1)) / (nl + nh - 2)
    ) ** 0.5
    separation = gap / max(pooled, 1e-9)
    if separation <= min_separation:
        raise BimodalityNotFound(
            f"latency split at {gap:.1f} cycles is only {separation:.2f} "
            f"pooled standard deviations wide (need > {min_separation})"
        )
    return Calibration(
        cutoff=(fast_mean + conflict_mean) / 2,
        separation=separation,
        gap=gap,
        fast_mean=fast_mean,
        conflict_mean=conflict_mean,
        fast_std=fast_std,
        conflict_std=conflict_std,
        pooled_std=pooled,
        sample_count=samples,
        fast_count=nl,
        conflict_count=nh,
        samples=tuple(lats),
    )


def is_sbdr(
    backend: MemoryBackend,
    a: int,
    b: int,
    calib: Calibration,
    rounds: int | None = None,
) -> bool:
    """One same-bank-different-row verdict for the pair.

    A latency within half a pooled standard deviation of the cutoff is
    re-measured twice and the majority of the three verdicts wins.
    """
    lat = backend.measure(a, b, rounds)
    verdict = lat > calib.cutoff
    band = 0.5 * calib.pooled_std
    if band and abs(lat - calib.cutoff) <= band:
        votes = int(verdict)
        votes += sum(backend.measure(a, b, rounds) > calib.cutoff for _ in range(2))
        verdict = votes >= 2
    return verdict


def vote_sbdr(
    backend: MemoryBackend,
    a: int,
    b: int,
    calib: Calibration,
    votes: int = 3,
    rounds: int | None = None,
) -> bool:
    """Sequential majority: first side to reach ``votes`` verdicts wins."""
    if votes < 1:
        raise ValueError("votes must be positive")
    yes = no = 0
    while yes < votes and no < votes:
        if is_sbdr(backend, a, b, calib, rounds):
            yes += 1
        else:
            no += 1
    return yes >= votes
