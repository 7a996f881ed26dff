"""Long-distance optical injection locking (Adler phase dynamics).

The slave phase ``psi`` (carrier included) obeys

    d psi/dt = 2*pi*nu_slave(t) + 2*pi*K/sqrt(P_slave) * |E_inj| * sin(arg E_inj - psi) + xi(t)

which, for a steady injected power ``P_inj``, is the Adler equation with
locking bandwidth ``kappa = K * sqrt(P_inj / P_slave)``. ``xi`` is the
slave's own Wiener phase noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numba
import numpy as np

from .errors import ConfigError, PreconditionError
from .phasenoise import FieldTrajectory, LaserSpec, SimGrid, gen_phase_trajectory

MAX_KAPPA_CYCLES_PER_STEP = 0.02
LOCK_TOLERANCE = 0.01  # |mean frequency error| / kappa
REPORT_FRACTION = 0.8  # lock report uses the final 80% of the injected span
SLAVE_NOISE_STREAM = 7


@dataclass(frozen=True)
class InjectionConfig:
    """Injection-locking parameters.

    ``kappa_coeff`` is ``K`` in ``kappa = K*sqrt(injection_power/slave_power)``
    (Hz). ``noise_factor`` scales the slave's intrinsic Wiener variance.
    """

    injection_power: float = 4e-6
    slave_power: float = 10e-3
    kappa_coeff: float = 2.194e10
    slave_spec: LaserSpec = field(default_factory=LaserSpec)
    noise_factor: float = 1.0

    def __post_init__(self):
        if not self.injection_power >= 0:
            raise ValueError("injection_power must be >= 0")
        if not self.slave_power > 0:
            raise ValueError("slave_power must be > 0")
        if not self.kappa_coeff > 0:
            raise ValueError("kappa_coeff must be > 0")
        if not self.noise_factor >= 0:
            raise ValueError("noise_factor must be >= 0")


@dataclass(frozen=True)
class LockReport:
    locked: bool
    detuning: float
    locking_bandwidth: float
    mean_freq_error: float


def locking_bandwidth(cfg: InjectionConfig) -> float:
    """Maximum free-running detuning (Hz) that still locks."""
    return float(cfg.kappa_coeff * math.sqrt(cfg.injection_power / cfg.slave_power))


def calibrate_kappa(points) -> float:
    """Least-squares ``K`` from ``(injection_power, slave_power, bandwidth)`` triples.

    The model is linear in ``K`` (``bandwidth = K*sqrt(P_inj/P_slave)``), so
    the fit is the closed-form projection; one point is solved exactly.
    """
    pts = [tuple(map(float, p)) for p in points]
    if not pts:
        raise ConfigError("calibrate_kappa needs at least one (P_inj, P_slave, bandwidth) point")
    arr = np.array(pts)
    if arr.shape[1] != 3:
        raise ConfigError("calibration points must be (injection_power, slave_power, bandwidth)")
    if np.any(arr[:, :2] <= 0):
        raise ConfigError("calibration powers must be > 0")
    x = np.sqrt(arr[:, 0] / arr[:, 1])
    return float(np.dot(x, arr[:, 2]) / np.dot(x, x))


@numba.njit(cache=True)
def _adler_heun(inj_re, inj_im, free_inc, psi0, coupling, dt):
    # Free-running increments (carrier, drift, noise) are additive and exact;
    # the injection term is integrated with Heun's predictor-corrector.
    n = free_inc.size + 1
    psi = np.empty(n)
    psi[0] = psi0
    c_now = coupling * (inj_im[0] * math.cos(psi0) - inj_re[0] * math.sin(psi0))
    for k in range(n - 1):
        pred = psi[k] + free_inc[k] + c_now * dt
        c_pred = coupling * (inj_im[k + 1] * math.cos(pred) - inj_re[k + 1] * math.sin(pred))
        nxt = psi[k] + free_inc[k] + 0.5 * (c_now + c_pred) * dt
        psi[k + 1] = nxt
        c_now = coupling * (inj_im[k + 1] * math.cos(nxt) - inj_re[k + 1] * math.sin(nxt))
    return psi


@numba.njit(cache=True)
def _phase_advance(re, im, start, stop):
    # Unwrapped phase accumulated by a complex signal between two samples.
    total = 0.0
    for k in range(start, stop):
        a_re = re[k + 1] * re[k] + im[k + 1] * im[k]
        a_im = im[k + 1] * re[k] - re[k + 1] * im[k]
        total += math.atan2(a_im, a_re)
    return total


def simulate_slave(injected: FieldTrajectory, cfg: InjectionConfig, grid: SimGrid,
                   stream: int = SLAVE_NOISE_STREAM):
    """Integrate the injected slave laser over ``grid``.

    Returns the slave output field (amplitude ``sqrt(slave_power)``) and a
    :class:`LockReport` built from the mean instantaneous-frequency error
    over the final 80% of the injected (valid) span.
    """
    if injected.grid != grid:
        raise PreconditionError("injected field lives on a different grid")
    kappa = locking_bandwidth(cfg)
    coupling_hz = cfg.kappa_coeff / math.sqrt(cfg.slave_power)
    peak_kappa = coupling_hz * float(np.sqrt(injected.intensity.max()))
    if max(kappa, peak_kappa) * grid.dt > MAX_KAPPA_CYCLES_PER_STEP * (1 + 1e-9):
        raise PreconditionError(
            f"step too large for injection dynamics: kappa*dt = {max(kappa, peak_kappa) * grid.dt:.3g} "
            f"> {MAX_KAPPA_CYCLES_PER_STEP}; reduce dt below {MAX_KAPPA_CYCLES_PER_STEP / max(kappa, peak_kappa):.3g} s"
        )

    spec = cfg.slave_spec
    noisy = replace(spec, linewidth_fwhm=spec.linewidth_fwhm * cfg.noise_factor)
    free = gen_phase_trajectory(noisy, grid, stream)
    free_inc = np.diff(free)
    free_inc += 2 * np.pi * spec.nu_offset * grid.dt
    del free

    samples = injected.samples
    psi = _adler_heun(np.ascontiguousarray(samples.real), np.ascontiguousarray(samples.imag),
                      free_inc, grid.rng(stream, 1).uniform(0, 2 * np.pi),
                      2 * np.pi * coupling_hz, grid.dt)
    del free_inc

    v0 = injected.valid_from
    start = v0 + int((1 - REPORT_FRACTION) * (grid.n_samples - 1 - v0))
    stop = grid.n_samples - 1
    span = (stop - start) * grid.dt
    slave_freq = (psi[stop] - psi[start]) / (2 * np.pi * span)
    inj_freq = _phase_advance(np.ascontiguousarray(samples.real), np.ascontiguousarray(samples.imag),
                              start, stop) / (2 * np.pi * span)
    error = slave_freq - inj_freq
    locked = bool(kappa > 0 and abs(error) <= LOCK_TOLERANCE * kappa)
    report = LockReport(locked=locked, detuning=spec.nu_offset - injected.nu_offset,
                        locking_bandwidth=kappa, mean_freq_error=float(error))

    out = np.exp(1j * psi)
    del psi
    out *= math.sqrt(cfg.slave_power)
    settle = int(math.ceil(1e3 / (2 * np.pi * kappa * grid.dt))) if kappa > 0 else 0
    valid_from = min(v0 + settle, start)
    carrier = injected.nu_offset if locked else spec.nu_offset
    return FieldTrajectory(grid, out, carrier, valid_from), report


def beat_linewidth_check(master: FieldTrajectory, slave: FieldTrajectory, delay: float,
                         linewidth: float | None = None, expected_fwhm: float | None = None) -> float:
    """FWHM (Hz) of the beat note between ``master`` and ``slave``.

    ``delay`` is the injection-path delay. When the master ``linewidth`` is
    given, the long-delay regime ``delay >> 1/(pi*linewidth)`` is enforced
    (a factor of 10). A noiseless self-beat has no line at all and returns 0.
    """
    from .analysis import beat_psd, fwhm

    if linewidth:
        if delay < 10.0 / (np.pi * linewidth):
            raise PreconditionError(
                f"delay {delay:.3g} s is not long compared with the coherence time "
                f"1/(pi*linewidth) = {1 / (np.pi * linewidth):.3g} s"
            )
    spectrum = beat_psd(master, slave, expected_fwhm=expected_fwhm)
    ac_power = spectrum.psd[1:].max() * spectrum.resolution_bw
    if ac_power <= 1e-20 * spectrum.mean_level**2:
        return 0.0
    return fwhm(spectrum)
