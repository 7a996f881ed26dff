"""Passive optics: fiber links, AOM frequency shifter and the 50:50 splitter."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .phasenoise import SPEED_OF_LIGHT, FieldTrajectory

MAX_AOM_CYCLES_PER_STEP = 0.02


@dataclass(frozen=True)
class FiberSpec:
    """Single-mode fiber link. ``length`` in km, ``attenuation`` in dB/km."""

    length: float = 0.0
    attenuation: float = 0.2
    group_index: float = 1.468

    def __post_init__(self):
        if not self.length >= 0:
            raise ValueError("fiber length must be >= 0")
        if not self.attenuation >= 0:
            raise ValueError("attenuation must be >= 0")
        if not self.group_index >= 1:
            raise ValueError("group_index must be >= 1")

    @property
    def delay(self) -> float:
        """Group delay in s."""
        return self.length * 1e3 * self.group_index / SPEED_OF_LIGHT

    @property
    def power_transmission(self) -> float:
        return 10.0 ** (-self.attenuation * self.length / 10.0)


def delay_samples(fiber: FiberSpec, dt: float) -> int:
    return int(round(fiber.delay / dt))


def propagate(field: FieldTrajectory, fiber: FiberSpec) -> FieldTrajectory:
    """Delay ``field`` by the fiber group delay and apply the fiber loss.

    The delay is rounded to a whole number of samples. The leading region
    is zero-filled and excluded through ``valid_from``.
    """
    grid = field.grid
    shift = delay_samples(fiber, grid.dt)
    if shift >= grid.n_samples - field.valid_from:
        raise PreconditionError(
            f"fiber delay {fiber.delay:.4g} s ({shift} samples) exceeds the valid "
            f"trajectory span ({grid.n_samples - field.valid_from} samples)"
        )
    amp = math.sqrt(fiber.power_transmission)
    out = np.zeros(grid.n_samples, dtype=np.complex128)
    if shift:
        out[shift:] = field.samples[:-shift]
    else:
        out[:] = field.samples
    out *= amp
    return FieldTrajectory(grid, out, field.nu_offset, field.valid_from + shift)


def attenuate(field: FieldTrajectory, power_factor: float) -> FieldTrajectory:
    """Variable optical attenuator: scale power by ``power_factor``."""
    if not 0 <= power_factor:
        raise ValueError("power_factor must be >= 0")
    return FieldTrajectory(field.grid, field.samples * math.sqrt(power_factor), field.nu_offset, field.valid_from)


def aom_shift(field: FieldTrajectory, f_shift: float) -> FieldTrajectory:
    """Shift the optical frequency by ``f_shift`` Hz (acousto-optic modulator)."""
    grid = field.grid
    if abs(f_shift) * grid.dt >= MAX_AOM_CYCLES_PER_STEP:
        raise PreconditionError(
            f"AOM shift {f_shift:.4g} Hz aliases on dt={grid.dt:.4g} s "
            f"(|f|*dt must be < {MAX_AOM_CYCLES_PER_STEP})"
        )
    if f_shift == 0:
        return field
    rot = np.exp(1j * (2 * np.pi * f_shift) * grid.times)
    rot *= field.samples
    return FieldTrajectory(grid, rot, field.nu_offset + f_shift, field.valid_from)


@dataclass(frozen=True, eq=False)
class BsPorts:
    """Outputs of the 50:50 splitter.

    ``out1``/``out2`` hold the co-polarized (interfering) field. The
    orthogonally polarized part of input ``b`` cannot interfere and is
    carried as the per-sample intensity ``incoherent``, which lands in
    both ports.
    """

    out1: FieldTrajectory
    out2: FieldTrajectory
    incoherent: np.ndarray | None = None

    def intensity(self, port: int) -> np.ndarray:
        out = (self.out1 if port == 1 else self.out2).intensity
        if self.incoherent is not None:
            out = out + self.incoherent
        return out

    @property
    def valid_from(self) -> int:
        return self.out1.valid_from


def beamsplitter(a: FieldTrajectory, b: FieldTrajectory, pol_overlap: float = 1.0) -> BsPorts:
    """Lossless 50:50 splitter with a scalar polarization overlap ``s``.

    ``b`` splits into ``s*b`` (parallel to ``a``) and an orthogonal part of
    intensity ``(1 - s**2)*|b|**2``. Parallel parts combine as
    ``(a +/- s*b)/sqrt(2)``; the orthogonal intensity is divided evenly
    between the ports.
    """
    if a.grid != b.grid:
        raise PreconditionError("beamsplitter inputs live on different grids")
    if not 0.0 <= pol_overlap <= 1.0:
        raise ValueError("pol_overlap must lie in [0, 1]")
    grid = a.grid
    valid_from = max(a.valid_from, b.valid_from)
    inv = 1 / math.sqrt(2)
    sb = b.samples * pol_overlap if pol_overlap != 1.0 else b.samples
    out1 = FieldTrajectory(grid, (a.samples + sb) * inv, a.nu_offset, valid_from)
    out2 = FieldTrajectory(grid, (a.samples - sb) * inv, a.nu_offset, valid_from)
    incoherent = None
    if pol_overlap != 1.0:
        incoherent = b.intensity * ((1.0 - pol_overlap**2) / 2)
    return BsPorts(out1, out2, incoherent)
