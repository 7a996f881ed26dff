"""Single-photon detection and time-correlated coincidence counting.

Detectors are inhomogeneous Poisson processes driven by the optical
intensity on the simulation grid; non-paralyzable dead time and Gaussian
timing jitter are applied to the resulting click times.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import NormalizationError, PreconditionError

MAX_CLICKS_PER_STEP = 0.1


@dataclass(frozen=True)
class DetectorSpec:
    """SNSPD model parameters (rates in Hz, times in s)."""

    efficiency: float = 0.8
    dark_rate: float = 100.0
    dead_time: float = 50e-9
    jitter_sigma: float = 50e-12

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in [0, 1]")
        for name in ("dark_rate", "dead_time", "jitter_sigma"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")


IDEAL_DETECTOR = DetectorSpec(efficiency=1.0, dark_rate=0.0, dead_time=0.0, jitter_sigma=0.0)


@dataclass(frozen=True, eq=False)
class ClickStream:
    timestamps: np.ndarray
    span: float

    def __len__(self):
        return self.timestamps.size

    @property
    def rate(self) -> float:
        return self.timestamps.size / self.span


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    key = list(seed) if isinstance(seed, (tuple, list)) else [seed]
    return np.random.default_rng(np.random.SeedSequence([int(k) & (2**64 - 1) for k in key]))


@numba.njit(cache=True)
def _dead_time_keep(times, dead_time):
    keep = np.zeros(times.size, dtype=np.bool_)
    last = -np.inf
    for i in range(times.size):
        if times[i] - last >= dead_time:
            keep[i] = True
            last = times[i]
    return keep


def clicks_from_intensity(intensity, dt: float, det: DetectorSpec, rate_per_watt: float, seed,
                          valid_from: int = 0) -> ClickStream:
    """Sample detector clicks from an intensity trace (W) on a grid of step ``dt``.

    Each sample draws a Poisson number of candidate photons at rate
    ``efficiency*rate_per_watt*I + dark_rate``, placed uniformly inside the
    sample. Dead time is pruned in time order, then jitter is added and the
    stream re-sorted. Timestamps are measured from sample ``valid_from``.
    """
    intensity = np.asarray(intensity, dtype=float)[valid_from:]
    rate = intensity * (det.efficiency * rate_per_watt)
    rate += det.dark_rate
    peak = float(rate.max()) if rate.size else 0.0
    if peak * dt > MAX_CLICKS_PER_STEP:
        raise PreconditionError(
            f"click probability per sample {peak * dt:.3g} exceeds {MAX_CLICKS_PER_STEP}; "
            "lower rate_per_watt or dt"
        )
    rng = _rng(seed)
    rate *= dt
    counts = rng.poisson(rate)
    del rate
    hit = np.flatnonzero(counts)
    idx = np.repeat(hit, counts[hit])
    times = (idx + rng.random(idx.size)) * dt
    times.sort()
    if det.dead_time > 0:
        times = times[_dead_time_keep(times, det.dead_time)]
    span = intensity.size * dt
    if det.jitter_sigma > 0:
        times = times + rng.normal(0.0, det.jitter_sigma, times.size)
        times.sort()
        times = times[(times >= 0) & (times <= span)]
    return ClickStream(times, span)


@dataclass(frozen=True, eq=False)
class CoincidenceHistogram:
    bin_width: float
    tau: np.ndarray
    raw: np.ndarray
    normalized: np.ndarray
    accumulation_time: float
    empty: bool = False

    @property
    def baseline_count(self) -> float:
        return float(np.mean(self.raw[outer_bins(self.tau)]))

    @property
    def total_pairs(self) -> int:
        return int(self.raw.sum())


def outer_bins(tau) -> np.ndarray:
    """Mask of bins in the outer 25% of the delay range (normalization region)."""
    tau = np.asarray(tau)
    return np.abs(tau) >= 0.75 * np.max(np.abs(tau))


@numba.njit(cache=True)
def _cross_counts(t1, t2, lo, hi, reach, bin_width, nbins):
    counts = np.zeros(nbins, dtype=np.int64)
    j0 = 0
    for i in range(t1.size):
        a = t1[i]
        if a < lo or a > hi:
            continue
        while j0 < t2.size and t2[j0] < a - reach:
            j0 += 1
        j = j0
        while j < t2.size and t2[j] < a + reach:
            k = int((t2[j] - a + reach) / bin_width)
            if 0 <= k < nbins:
                counts[k] += 1
            j += 1
    return counts


def _bin_layout(bin_width: float, max_tau: float):
    if not bin_width > 0:
        raise ValueError("bin_width must be > 0")
    half = int(round(max_tau / bin_width))
    if half < 1:
        raise ValueError("max_tau must span at least one bin")
    tau = np.arange(-half, half + 1) * bin_width
    return tau, (half + 0.5) * bin_width


def normalize_counts(tau, raw) -> np.ndarray:
    base = float(np.mean(np.asarray(raw)[outer_bins(tau)]))
    if not base > 0:
        raise NormalizationError("coincidence baseline is zero; accumulate longer or raise click rates")
    return np.asarray(raw) / base


def coincidence_histogram(s1: ClickStream, s2: ClickStream, bin_width: float = 0.5e-9,
                          max_tau: float = 50e-9) -> CoincidenceHistogram:
    """Full cross-correlation histogram of ``tau = t2 - t1``.

    Only start clicks at least one window away from either end of the run
    are used, so every delay bin sees the same exposure and raw counts from
    independent runs add. Bins are centred on multiples of ``bin_width``.
    """
    tau, reach = _bin_layout(bin_width, max_tau)
    span = min(s1.span, s2.span)
    exposure = max(span - 2 * reach, 0.0)
    if len(s1) == 0 or len(s2) == 0 or exposure == 0:
        raw = np.zeros(tau.size, dtype=np.int64)
        return CoincidenceHistogram(bin_width, tau, raw, np.zeros(tau.size), exposure, empty=True)
    raw = _cross_counts(s1.timestamps, s2.timestamps, reach, span - reach, reach, bin_width, tau.size)
    return CoincidenceHistogram(bin_width, tau, raw, normalize_counts(tau, raw), exposure)


def merge_histograms(hists) -> CoincidenceHistogram:
    """Sum raw counts of histograms with identical binning, then renormalize."""
    hists = list(hists)
    if not hists:
        raise ValueError("nothing to merge")
    first = hists[0]
    for h in hists[1:]:
        if h.tau.shape != first.tau.shape or not math.isclose(h.bin_width, first.bin_width):
            raise PreconditionError("histograms have different binning")
    raw = np.sum([h.raw for h in hists], axis=0)
    acc = sum(h.accumulation_time for h in hists)
    if raw.sum() == 0:
        return CoincidenceHistogram(first.bin_width, first.tau, raw, np.zeros(raw.size), acc, empty=True)
    return CoincidenceHistogram(first.bin_width, first.tau, raw, normalize_counts(first.tau, raw), acc)


def write_histogram_csv(path, hist: CoincidenceHistogram) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau_s", "raw_count", "normalized"])
        for t, r, n in zip(hist.tau, hist.raw, hist.normalized):
            w.writerow([f"{t:.6e}", f"{float(r):.6e}", f"{n:.6e}"])


def read_histogram_csv(path, accumulation_time: float = float("nan")) -> CoincidenceHistogram:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    tau = data[:, 0]
    bw = float(np.median(np.diff(tau)))
    return CoincidenceHistogram(bw, tau, np.rint(data[:, 1]).astype(np.int64), data[:, 2], accumulation_time)
