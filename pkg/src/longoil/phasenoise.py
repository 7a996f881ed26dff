"""Laser phase noise: Wiener phase diffusion, slow frequency drift, CW fields.

Optical carriers are represented as baseband offsets from a shared
reference frequency, so a field sample is

    E_k = sqrt(P) * exp(i * (2*pi*nu_offset*t_k + phi_k))

with ``phi`` a Wiener process whose increment variance ``2*pi*dnu*dt``
produces a Lorentzian line of FWHM ``dnu``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError

SPEED_OF_LIGHT = 2.99792458e8  # m/s
SECONDS_PER_HOUR = 3600.0

# Phase diffusion per sample must stay small for the Euler/Wiener grid.
MAX_LINEWIDTH_CYCLES_PER_STEP = 0.01

DRIFT_KINDS = ("none", "linear", "random-walk")


@dataclass(frozen=True)
class DriftModel:
    """Slow drift of the free-running centre frequency.

    ``magnitude`` is in Hz per hour. For ``linear`` it is the ramp slope;
    for ``random-walk`` it is the RMS frequency excursion after one hour.
    """

    kind: str = "none"
    magnitude: float = 0.0

    def __post_init__(self):
        if self.kind not in DRIFT_KINDS:
            raise ValueError(f"unknown drift kind {self.kind!r}; expected one of {DRIFT_KINDS}")
        if not self.magnitude >= 0:
            raise ValueError("drift magnitude must be >= 0")


@dataclass(frozen=True)
class LaserSpec:
    """One CW laser: offset from the shared reference, linewidth, power."""

    nu_offset: float = 0.0
    linewidth_fwhm: float = 5e6
    power: float = 1e-3
    drift: DriftModel = field(default_factory=DriftModel)

    def __post_init__(self):
        if not math.isfinite(self.nu_offset):
            raise ValueError("nu_offset must be finite")
        if not self.linewidth_fwhm >= 0:
            raise ValueError("linewidth_fwhm must be >= 0")
        if not self.power > 0:
            raise ValueError("power must be > 0")


@dataclass(frozen=True)
class SimGrid:
    """Uniform time grid ``t_k = k * dt`` shared by every field in a run."""

    dt: float
    n_samples: int
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if int(self.n_samples) != self.n_samples or self.n_samples < 2:
            raise ValueError("n_samples must be an integer >= 2")

    @property
    def span(self) -> float:
        return self.n_samples * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.dt

    def rng(self, *stream: int) -> np.random.Generator:
        """Independent generator for substream ``(seed, *stream)``."""
        return np.random.default_rng(np.random.SeedSequence([int(self.seed) & (2**64 - 1), *map(int, stream)]))


@dataclass(frozen=True, eq=False)
class FieldTrajectory:
    """Complex baseband envelope on a :class:`SimGrid`.

    ``|samples|**2`` is the instantaneous power in W. Samples before
    ``valid_from`` are padding (e.g. the zero region ahead of a fiber delay)
    and carry no physical light.
    """

    grid: SimGrid
    samples: np.ndarray
    nu_offset: float = 0.0
    valid_from: int = 0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.shape != (self.grid.n_samples,):
            raise PreconditionError(
                f"field has {samples.shape} samples, grid expects ({self.grid.n_samples},)"
            )
        if not np.all(np.isfinite(samples)):
            raise PreconditionError("field samples must be finite")
        if not 0 <= self.valid_from < self.grid.n_samples:
            raise PreconditionError("valid_from outside the grid")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @property
    def intensity(self) -> np.ndarray:
        return self.samples.real**2 + self.samples.imag**2

    @property
    def valid(self) -> np.ndarray:
        return self.samples[self.valid_from:]


def max_stable_dt(linewidth: float = 0.0, freq_diff: float = 0.0, kappa: float = 0.0) -> float:
    """Largest step resolving the fastest dynamics with 50 samples per scale."""
    fastest = max(abs(linewidth), abs(freq_diff), abs(kappa))
    if fastest == 0:
        raise ValueError("at least one rate must be nonzero")
    return 1.0 / (50.0 * fastest)


def _drift_frequency(drift: DriftModel, grid: SimGrid, rng: np.random.Generator) -> np.ndarray | None:
    if drift.kind == "none" or drift.magnitude == 0:
        return None
    if drift.kind == "linear":
        return drift.magnitude / SECONDS_PER_HOUR * grid.times
    steps = rng.normal(0.0, drift.magnitude * math.sqrt(grid.dt / SECONDS_PER_HOUR), grid.n_samples - 1)
    return np.concatenate(([0.0], np.cumsum(steps)))


def gen_phase_trajectory(spec: LaserSpec, grid: SimGrid, stream: int = 0) -> np.ndarray:
    """Wiener phase trajectory of one laser on ``grid``.

    Parameters
    ----------
    spec : LaserSpec
        Linewidth sets the increment variance ``2*pi*linewidth*dt``;
        ``spec.drift`` adds a deterministic or random-walk frequency ramp.
    grid : SimGrid
        Time grid; ``grid.seed`` together with ``stream`` selects the
        random substream, so two lasers on one grid need distinct streams.
    stream : int
        Substream index.

    Returns
    -------
    numpy.ndarray
        Phase in rad, ``grid.n_samples`` long. ``phase[0]`` is uniform on
        ``[0, 2*pi)``. The carrier term ``2*pi*nu_offset*t`` is *not*
        included; :func:`field_from_phase` adds it.
    """
    if spec.linewidth_fwhm * grid.dt > MAX_LINEWIDTH_CYCLES_PER_STEP:
        raise PreconditionError(
            f"grid too coarse: linewidth*dt = {spec.linewidth_fwhm * grid.dt:.3g} cycles "
            f"exceeds {MAX_LINEWIDTH_CYCLES_PER_STEP}"
        )
    rng = grid.rng(stream)
    phi0 = rng.uniform(0.0, 2 * np.pi)
    phase = np.empty(grid.n_samples)
    phase[0] = 0.0
    if spec.linewidth_fwhm > 0:
        sigma = math.sqrt(2 * np.pi * spec.linewidth_fwhm * grid.dt)
        np.cumsum(rng.normal(0.0, sigma, grid.n_samples - 1), out=phase[1:])
    else:
        phase[1:] = 0.0
    phase += phi0

    freq = _drift_frequency(spec.drift, grid, rng)
    if freq is not None:
        # Trapezoidal integral of the drift frequency.
        inc = np.pi * grid.dt * (freq[1:] + freq[:-1])
        phase[1:] += np.cumsum(inc)
    return phase


def field_from_phase(spec: LaserSpec, phases, grid: SimGrid) -> FieldTrajectory:
    """CW field ``sqrt(P) * exp(i*(2*pi*nu_offset*t + phi))`` on ``grid``."""
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (grid.n_samples,):
        raise PreconditionError(f"got {phases.size} phases for a grid of {grid.n_samples} samples")
    total = 2 * np.pi * spec.nu_offset * grid.times
    total += phases
    samples = np.exp(1j * total)
    samples *= math.sqrt(spec.power)
    return FieldTrajectory(grid=grid, samples=samples, nu_offset=spec.nu_offset)


def generate_field(spec: LaserSpec, grid: SimGrid, stream: int = 0) -> FieldTrajectory:
    """Shortcut for ``field_from_phase(spec, gen_phase_trajectory(...))``."""
    return field_from_phase(spec, gen_phase_trajectory(spec, grid, stream), grid)


def coherence_length(linewidth_fwhm: float) -> float:
    """Coherence length ``c / linewidth`` in metres (60 m at 5 MHz)."""
    if not linewidth_fwhm > 0:
        raise ValueError("coherence length needs a positive linewidth")
    return SPEED_OF_LIGHT / linewidth_fwhm
