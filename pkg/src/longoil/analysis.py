"""Coincidence-fringe model and fitting, beat-note spectra, cavity scans.

The normalized coincidence probability of two CW coherent fields at a
50:50 splitter is

    P(tau) = baseline * (1 - V * Gamma(tau) * cos(omega_diff * tau))

with ``Gamma(tau) = exp(-gamma_rate * |tau|)`` for Lorentzian lines.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, signal

from .errors import PreconditionError
from .phasenoise import FieldTrajectory

HANN_3DB_BINS = 1.44  # -3 dB width of the Hann window's main lobe, in FFT bins
FIT_BOUNDS_V = (0.0, 0.6)
FIT_BOUNDS_GAMMA = (1e4, 1e10)


@dataclass(frozen=True)
class HomModel:
    V: float = 0.5
    gamma_rate: float = math.pi * 1e7
    omega_diff: float = 0.0
    baseline: float = 1.0

    def __post_init__(self):
        if not self.V >= 0:
            raise ValueError("V must be >= 0")
        if not self.gamma_rate > 0:
            raise ValueError("gamma_rate must be > 0")
        if not self.baseline > 0:
            raise ValueError("baseline must be > 0")


@dataclass(frozen=True)
class HomFitResult:
    model: HomModel
    std_errors: dict
    residual_rms: float
    converged: bool
    chi2_reduced: float = float("nan")


@dataclass(frozen=True, eq=False)
class Spectrum:
    freqs: np.ndarray
    psd: np.ndarray
    resolution_bw: float
    mean_level: float = 0.0


def analytic_pcoin(tau, model: HomModel):
    """Coincidence probability at delay ``tau`` (s) for ``model``."""
    tau = np.asarray(tau, dtype=float)
    val = model.baseline * (1.0 - model.V * np.exp(-model.gamma_rate * np.abs(tau)) * np.cos(model.omega_diff * tau))
    return val if val.ndim else float(val)


def binned_pcoin(centers, bin_width: float, model: HomModel, n_sub: int = 8) -> np.ndarray:
    """:func:`analytic_pcoin` averaged over each histogram bin (midpoint rule)."""
    centers = np.asarray(centers, dtype=float)
    offsets = ((np.arange(n_sub) + 0.5) / n_sub - 0.5) * bin_width
    return analytic_pcoin(centers[:, None] + offsets[None, :], model).mean(axis=1)


def gamma_from_linewidths(dnu_a: float, dnu_b: float) -> float:
    """Decay rate (1/s) of the mutual coherence of two Lorentzian lines."""
    if dnu_a < 0 or dnu_b < 0 or dnu_a + dnu_b <= 0:
        raise ValueError("linewidths must be >= 0 and not both zero")
    return math.pi * (dnu_a + dnu_b)


def locked_mutual_coherence(tau, dnu_master: float, dnu_slave: float, kappa: float,
                            detuning: float = 0.0):
    """Mutual coherence of an injection-locked slave and an independent copy of its master.

    Linearizing the Adler equation around its fixed point, the slave phase
    follows the injected phase through a first-order low-pass of corner
    rate ``k = 2*pi*kappa*cos(asin(detuning/kappa))`` and keeps its own
    noise above it. When the injection delay exceeds the coherence time
    the two master copies are independent and

        Gamma(tau) = exp(-D_m*|tau| - (D_s - D_m) * (1 - exp(-k*|tau|)) / (2k))

    with ``D = 2*pi*linewidth``. For equal linewidths this is
    ``exp(-2*pi*dnu_master*|tau|)``.
    """
    if abs(detuning) >= kappa:
        raise ValueError("slave is not locked (|detuning| >= kappa)")
    tau = np.abs(np.asarray(tau, dtype=float))
    k = 2 * math.pi * kappa * math.sqrt(1 - (detuning / kappa) ** 2)
    dm = 2 * math.pi * dnu_master
    ds = 2 * math.pi * dnu_slave
    return np.exp(-dm * tau - (ds - dm) * (1 - np.exp(-k * tau)) / (2 * k))


def hom_visibility_factor(pol_overlap: float = 1.0, power_ratio: float = 1.0) -> float:
    """Ideal visibility ``0.5 * s**2 * 4r/(1+r)**2`` for overlap ``s`` and arm power ratio ``r``."""
    return 0.5 * pol_overlap**2 * 4 * power_ratio / (1 + power_ratio) ** 2


def predicted_beat_fwhm(dnu_master: float, dnu_slave: float, locked: bool) -> float:
    """Lorentzian beat width expected from the configured noise model.

    A locked slave inherits the (delayed, decorrelated) master phase noise,
    so the beat is the master's delayed self-heterodyne: ``2*dnu_master``.
    Free-running lasers give the plain sum of linewidths.
    """
    return 2 * dnu_master if locked else dnu_master + dnu_slave


# --- beat-note spectra -------------------------------------------------------

def _next_pow2(n: float) -> int:
    return 1 << max(int(math.ceil(math.log2(max(n, 2)))), 1)


def _segment_count(n: int, nperseg: int) -> int:
    step = nperseg // 2
    return (n - nperseg) // step + 1


def _welch(x: np.ndarray, fs: float, nperseg: int, return_onesided: bool, block: int = 32):
    # scipy's welch materializes every segment at once; feed it blocks of
    # segments so long trajectories stay within memory.
    step = nperseg // 2
    nseg = _segment_count(x.size, nperseg)
    acc = None
    for first in range(0, nseg, block):
        count = min(block, nseg - first)
        chunk = x[first * step: (first + count - 1) * step + nperseg]
        freqs, pxx = signal.welch(chunk, fs=fs, window="hann", nperseg=nperseg, noverlap=nperseg - step,
                                  detrend="constant", scaling="density", return_onesided=return_onesided)
        acc = pxx * count if acc is None else acc + pxx * count
    return freqs, acc / nseg


def _choose_nperseg(n: int, fs: float, expected_fwhm: float | None, nperseg: int | None) -> int:
    if nperseg is None:
        if expected_fwhm:
            nperseg = _next_pow2(20.0 * fs / expected_fwhm)
        else:
            nperseg = min(1 << 16, _next_pow2(n) // 8)
    if n < 2 * nperseg:
        raise PreconditionError(
            f"span of {n} samples is too short for segments of {nperseg} samples "
            "(need at least two segments); lengthen the run or relax the resolution"
        )
    return int(nperseg)


def beat_psd(a: FieldTrajectory, b: FieldTrajectory, expected_fwhm: float | None = None,
             nperseg: int | None = None) -> Spectrum:
    """One-sided PSD of the photocurrent ``|a + b|**2`` (Hann, 50% overlap)."""
    if a.grid != b.grid:
        raise PreconditionError("beat_psd inputs live on different grids")
    start = max(a.valid_from, b.valid_from)
    current = np.abs(a.samples[start:] + b.samples[start:]) ** 2
    fs = 1.0 / a.grid.dt
    nperseg = _choose_nperseg(current.size, fs, expected_fwhm, nperseg)
    freqs, psd = _welch(current, fs, nperseg, return_onesided=True)
    return Spectrum(freqs, psd, HANN_3DB_BINS * fs / nperseg, float(current.mean()))


def field_psd(f: FieldTrajectory, expected_fwhm: float | None = None, nperseg: int | None = None) -> Spectrum:
    """Two-sided PSD of the complex envelope itself (optical line shape)."""
    x = f.valid
    fs = 1.0 / f.grid.dt
    nperseg = _choose_nperseg(x.size, fs, expected_fwhm, nperseg)
    step = nperseg // 2
    nseg = _segment_count(x.size, nperseg)
    win = signal.get_window("hann", nperseg)
    scale = 1.0 / (fs * np.sum(win**2))
    acc = np.zeros(nperseg)
    for first in range(0, nseg, 32):
        idx = np.arange(first, min(first + 32, nseg))[:, None] * step + np.arange(nperseg)[None, :]
        acc += (np.abs(np.fft.fft(x[idx] * win, axis=1)) ** 2).sum(axis=0)
    psd = np.fft.fftshift(acc * scale / nseg)
    freqs = np.fft.fftshift(np.fft.fftfreq(nperseg, 1 / fs))
    return Spectrum(freqs, psd, HANN_3DB_BINS * fs / nperseg, float(np.mean(np.abs(x) ** 2)))


def peak_frequency(spec: Spectrum, exclude_dc: bool = True) -> float:
    """Centre of the highest (non-DC) peak: midpoint of its half-maximum crossings.

    On a flat-topped noisy line this is far steadier than the argmax bin.
    """
    left, right = _half_max_crossings(spec, exclude_dc)
    return float(0.5 * (left + right))


def fwhm(spec: Spectrum, exclude_dc: bool = True) -> float:
    """Full width at half maximum of the highest (non-DC) peak, in Hz.

    Half-maximum crossings are linearly interpolated on both flanks.
    """
    left, right = _half_max_crossings(spec, exclude_dc)
    return float(right - left)


def _half_max_crossings(spec: Spectrum, exclude_dc: bool = True):
    psd = np.asarray(spec.psd, dtype=float)
    freqs = np.asarray(spec.freqs, dtype=float)
    mask = np.ones(psd.size, dtype=bool)
    if exclude_dc:
        mask[np.argmin(np.abs(freqs))] = False
    search = np.where(mask, psd, -np.inf)
    peak = int(np.argmax(search))
    floor = float(np.median(psd[mask]))
    if not psd[peak] > 3 * floor or psd[peak] <= 0:
        raise PreconditionError("no spectral peak above 3x the median floor")
    half = psd[peak] / 2

    i = peak
    while i > 0 and mask[i - 1] and psd[i - 1] > half:
        i -= 1
    if i == 0 or not mask[i - 1]:
        left = freqs[i]
    else:
        left = freqs[i - 1] + (half - psd[i - 1]) / (psd[i] - psd[i - 1]) * (freqs[i] - freqs[i - 1])

    j = peak
    while j < psd.size - 1 and mask[j + 1] and psd[j + 1] > half:
        j += 1
    if j == psd.size - 1 or not mask[j + 1]:
        right = freqs[j]
    else:
        right = freqs[j] + (psd[j] - half) / (psd[j] - psd[j + 1]) * (freqs[j + 1] - freqs[j])
    return left, right


# --- Fabry-Perot scan ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FpTrace:
    freqs: np.ndarray
    transmission: np.ndarray

    @property
    def step(self) -> float:
        return float(self.freqs[1] - self.freqs[0])


def fp_scan(lines, fsr: float = 1.5e9, finesse: float = 100.0, scan_range: float = 4.5e9,
            n_points: int = 9001, scan_start: float = 0.0) -> FpTrace:
    """Transmission of a scanned Fabry-Perot cavity probed by Lorentzian lines.

    ``lines`` holds ``(nu_offset, power, linewidth)`` triples. Each cavity
    order contributes a Lorentzian of FWHM ``fsr/finesse + linewidth``; a
    zero-linewidth line of power P peaks at P.
    """
    if not fsr > 0:
        raise ValueError("fsr must be > 0")
    if not finesse > 1:
        raise ValueError("finesse must be > 1")
    if not scan_range > 0:
        raise ValueError("scan_range must be > 0")
    x = scan_start + np.linspace(0.0, scan_range, int(n_points))
    trace = np.zeros_like(x)
    w_cav = fsr / finesse
    for nu, power, lw in lines:
        w = w_cav + lw
        height = power * w_cav / w
        m_lo = math.floor((x[0] - nu) / fsr) - 2
        m_hi = math.ceil((x[-1] - nu) / fsr) + 2
        for m in range(m_lo, m_hi + 1):
            d = x - (nu + m * fsr)
            trace += height * (w / 2) ** 2 / (d**2 + (w / 2) ** 2)
    return FpTrace(x, trace)


def scan_peaks(trace: FpTrace, rel_height: float = 0.3) -> np.ndarray:
    """Scan positions (Hz) of transmission peaks; uncertainty is half a scan step."""
    idx, _ = signal.find_peaks(trace.transmission, height=rel_height * trace.transmission.max())
    return trace.freqs[idx]


# --- fringe fitting -----------------------------------------------------------

def _fringe_arrays(hist):
    tau = np.asarray(hist.tau, dtype=float)
    y = np.asarray(hist.normalized, dtype=float)
    raw = np.asarray(hist.raw, dtype=float)
    sigma = y / np.sqrt(np.maximum(raw, 1.0))
    sigma = np.where(raw > 0, sigma, np.max(sigma))
    return tau, y, raw, sigma


def _outer_mask(tau):
    m = np.max(np.abs(tau))
    return np.abs(tau) >= 0.75 * m


def _fft_omega(tau, y, baseline, bin_width):
    dev = 1.0 - y / baseline
    spec = np.abs(np.fft.rfft(dev * np.hanning(dev.size), n=8 * dev.size))
    freqs = np.fft.rfftfreq(8 * dev.size, bin_width)
    return 2 * np.pi * freqs[int(np.argmax(spec))]


def fit_hom(hist, dnu_defaults=(5e6, 5e6), max_nfev: int = 200) -> HomFitResult:
    """Weighted least-squares fit of the bin-averaged fringe model.

    Parameters are ``(V, gamma_rate, omega_diff, baseline)``. Starting values
    come from the outer-bin baseline, the FFT peak of ``1 - normalized``, the
    central-bin deficit and ``gamma_from_linewidths(*dnu_defaults)``.
    """
    tau, y, raw, sigma = _fringe_arrays(hist)
    if tau.size < 50:
        raise PreconditionError(f"fit_hom needs at least 50 bins, got {tau.size}")
    bw = float(hist.bin_width)
    base0 = float(np.mean(y[_outer_mask(tau)]))
    if not base0 > 0:
        raise PreconditionError("histogram baseline is zero")
    centre = int(np.argmin(np.abs(tau)))
    v0 = float(np.clip(1 - y[centre] / base0, 0.01, 0.59))
    g0 = gamma_from_linewidths(*dnu_defaults) if sum(dnu_defaults) > 0 else FIT_BOUNDS_GAMMA[0]
    w_max = np.pi / bw
    w0 = float(min(_fft_omega(tau, y, base0, bw), 0.99 * w_max))

    def residual(p):
        m = HomModel(V=p[0], gamma_rate=p[1], omega_diff=p[2], baseline=p[3])
        return (binned_pcoin(tau, bw, m) - y) / sigma

    lo = [FIT_BOUNDS_V[0], FIT_BOUNDS_GAMMA[0], 0.0, 1e-6]
    hi = [FIT_BOUNDS_V[1], FIT_BOUNDS_GAMMA[1], w_max, np.inf]
    scale = [0.1, g0, max(w0, g0), 0.1]
    best = None
    for w_start in sorted({w0, 0.0}):
        x0 = [v0, g0, w_start, base0]
        try:
            res = optimize.least_squares(residual, x0, bounds=(lo, hi), x_scale=scale, max_nfev=max_nfev,
                                         method="trf")
        except (ValueError, np.linalg.LinAlgError):
            continue
        if best is None or res.cost < best.cost:
            best = res
    if best is None:
        model = HomModel(V=v0, gamma_rate=g0, omega_diff=w0, baseline=base0)
        return HomFitResult(model, {k: float("nan") for k in ("V", "gamma_rate", "omega_diff", "baseline")},
                            float("nan"), False)

    p = best.x
    model = HomModel(V=p[0], gamma_rate=p[1], omega_diff=p[2], baseline=p[3])
    dof = max(tau.size - 4, 1)
    chi2_red = float(2 * best.cost / dof)
    # Covariance in scaled coordinates; the raw columns span ~15 decades.
    s = np.asarray(scale, dtype=float)
    Js = best.jac * s[None, :]
    try:
        cov = np.linalg.pinv(Js.T @ Js) * max(chi2_red, 1e-12)
        se = s * np.sqrt(np.clip(np.diag(cov), 0, None))
    except np.linalg.LinAlgError:
        se = np.full(4, np.nan)
    resid = binned_pcoin(tau, bw, model) - y
    rms = float(np.sqrt(np.mean(resid**2)))
    converged = bool(best.success and rms < 5 * float(np.median(sigma)))
    names = ("V", "gamma_rate", "omega_diff", "baseline")
    return HomFitResult(model, dict(zip(names, map(float, se))), rms, converged, chi2_red)


def visibility(hist, gamma_estimate: float | None = None) -> float:
    """Dip depth ``1 - min(central)/baseline`` with central ``|tau| <= 3/gamma``."""
    tau = np.asarray(hist.tau, dtype=float)
    y = np.asarray(hist.normalized, dtype=float)
    if tau.size == 0:
        raise PreconditionError("empty histogram")
    baseline = float(np.mean(y[_outer_mask(tau)]))
    if not baseline > 0:
        raise PreconditionError("histogram baseline is zero")
    gamma = gamma_estimate or gamma_from_linewidths(5e6, 5e6)
    central = np.abs(tau) <= 3.0 / gamma
    if not central.any():
        central = np.abs(tau) == np.min(np.abs(tau))
    return max(0.0, 1.0 - float(np.min(y[central])) / baseline)


# --- CSV artifacts ------------------------------------------------------------

def write_fit_csv(path, result: HomFitResult) -> None:
    m = result.model
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["parameter", "value", "std_error"])
        for name in ("V", "gamma_rate", "omega_diff", "baseline"):
            w.writerow([name, f"{getattr(m, name):.6e}", f"{result.std_errors[name]:.6e}"])
        w.writerow(["residual_rms", f"{result.residual_rms:.6e}", f"{0.0:.6e}"])


def read_fit_csv(path) -> dict:
    with open(path, newline="") as fh:
        return {row["parameter"]: (float(row["value"]), float(row["std_error"])) for row in csv.DictReader(fh)}


def write_spectrum_csv(path, spec: Spectrum) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["freq_hz", "psd"])
        for f, p in zip(spec.freqs, spec.psd):
            w.writerow([f"{f:.6e}", f"{p:.6e}"])


def read_spectrum_csv(path) -> Spectrum:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    freqs = data[:, 0]
    return Spectrum(freqs, data[:, 1], HANN_3DB_BINS * float(freqs[1] - freqs[0]))
