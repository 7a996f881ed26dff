"""Acceptance checks for the simulator, one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines, or
directly with ``python3 tests/test_acceptance.py``.
"""
import functools
import math
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from longoil.analysis import HomModel, fwhm as spectrum_fwhm
from longoil.channel import FiberSpec, beamsplitter, propagate
from longoil.config import parse_text
from longoil.detect import DetectorSpec, clicks_from_intensity, outer_bins
from longoil.injection import InjectionConfig, simulate_slave
from longoil.phasenoise import LaserSpec, SimGrid, gen_phase_trajectory, generate_field
from longoil.scenarios import run_scenario

HOM_BUDGET_S = 300.0
FAST_BUDGET_S = 120.0

_TMP = Path(tempfile.mkdtemp(prefix="acceptance-"))


@functools.lru_cache(maxsize=None)
def _run(name: str, text: str):
    return run_scenario(parse_text(text), _TMP / name)


def hom_locked():
    return _run("hom_locked", "scenario = hom-locked\n")


def hom_locked_ideal():
    return _run("hom_locked_ideal", "scenario = hom-locked\nbs.pol_overlap = 1.0\ndetector.efficiency = 1.0\n"
                "detector.dark_rate = 0 Hz\ndetector.dead_time = 0 s\ndetector.jitter = 0 s\n")


def hom_unlocked():
    return _run("hom_unlocked", "scenario = hom-unlocked\nbob.offset = 153 MHz\n")


def _line(number, title, ok, detail):
    return f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} | {detail}"


# --- criteria --------------------------------------------------------------

def criterion_1():
    s = hom_locked()
    m = s.metrics
    ok_default = 0.46 <= m["V"] <= 0.50 and m["coincidence_pairs"] >= 1e7 and s.wall_time <= HOM_BUDGET_S
    i = hom_locked_ideal()
    mi = i.metrics
    ok_ideal = abs(mi["V"] - 0.50) <= 0.02 and mi["coincidence_pairs"] >= 1e7 and i.wall_time <= HOM_BUDGET_S
    detail = (f"s=0.98: V={m['V']:.4f}+/-{m['V_std_error']:.4f}, pairs={m['coincidence_pairs']:.3g}, "
              f"{s.wall_time:.0f}s; s=1 ideal: V={mi['V']:.4f}, pairs={mi['coincidence_pairs']:.3g}, "
              f"{i.wall_time:.0f}s")
    return ok_default and ok_ideal, detail


def criterion_2():
    s = hom_unlocked()
    m = s.metrics
    period = 2 * np.pi / m["omega_diff_rad_s"]
    hist = s.details["hist"]
    # Peaks above the baseline at odd half-periods of the 153 MHz beat.
    half = 1 / (2 * 153e6)
    peaks_ok = True
    for k in (1, 3, 5):
        for sign in (-1, 1):
            idx = int(np.argmin(np.abs(hist.tau - sign * k * half)))
            peaks_ok &= bool(hist.normalized[idx] > 1.0)
    ok = abs(period - 6.54e-9) <= 0.02 * 6.54e-9 and peaks_ok and s.wall_time <= HOM_BUDGET_S
    centre = hist.normalized[np.argmin(np.abs(hist.tau))]
    return ok, (f"period={period * 1e9:.4f} ns (6.54 +/- 2%), peaks>1 at +/-1,3,5 half-periods={peaks_ok}, "
                f"P(0)={centre:.3f}, {s.wall_time:.0f}s")


def criterion_3():
    s = _run("lockband", "scenario = lockband\n")
    m = s.metrics
    ok_bw = abs(m["locking_bandwidth_hz"] - 760e6) <= m["sweep_step_hz"]
    ok_check = bool(m["check_locked"]) and abs(m["fp_injected_separation_hz"]) <= m["fp_scan_step_hz"]
    ok_free = abs(abs(m["fp_free_separation_hz"]) - 267e6) <= m["fp_scan_step_hz"]
    ok = ok_bw and ok_check and ok_free and s.wall_time <= FAST_BUDGET_S
    return ok, (f"bandwidth={m['locking_bandwidth_hz'] / 1e6:.0f} MHz (760 +/- {m['sweep_step_hz'] / 1e6:.0f}), "
                f"267 MHz @ 4 uW locked={bool(m['check_locked'])}, FP slave-master="
                f"{m['fp_injected_separation_hz'] / 1e6:.3f} MHz (step {m['fp_scan_step_hz'] / 1e6:.3f}), "
                f"free={m['fp_free_separation_hz'] / 1e6:.1f} MHz, {s.wall_time:.0f}s")


def criterion_4():
    s = _run("beat", "scenario = beat\n")
    m = s.metrics
    ok_centre = abs(m["beat_center_hz"] - 80e6) <= m["resolution_bw_hz"]
    ok_width = abs(m["beat_fwhm_hz"] - m["predicted_fwhm_hz"]) <= 0.15 * m["predicted_fwhm_hz"]
    # Narrow-line calibration: a locked slave tracks the master, so the beat width
    # is set by the master line; 2.25 MHz targets a 4.5 MHz beat.
    c = _run("beat_calibrated", "scenario = beat\nalice.linewidth = 2.25 MHz\n")
    mc = c.metrics
    ok_cal = (abs(mc["beat_fwhm_hz"] - mc["predicted_fwhm_hz"]) <= 0.15 * mc["predicted_fwhm_hz"]
              and abs(mc["beat_center_hz"] - 80e6) <= mc["resolution_bw_hz"] and c.wall_time <= FAST_BUDGET_S)
    ok = ok_centre and ok_width and ok_cal and bool(m["locked"]) and s.wall_time <= FAST_BUDGET_S
    return ok, (f"centre={m['beat_center_hz'] / 1e6:.3f} MHz (80 +/- {m['resolution_bw_hz'] / 1e6:.3f}), "
                f"FWHM={m['beat_fwhm_hz'] / 1e6:.2f} MHz vs model {m['predicted_fwhm_hz'] / 1e6:.2f} MHz "
                f"(15%), {s.wall_time:.0f}s; 2.25 MHz master: FWHM={mc['beat_fwhm_hz'] / 1e6:.2f} MHz vs "
                f"{mc['predicted_fwhm_hz'] / 1e6:.2f} MHz, {c.wall_time:.0f}s")


def _oracle_check(summary):
    hist = summary.details["hist"]
    expected = summary.details["oracle"]
    base = float(np.mean(hist.raw[outer_bins(hist.tau)]))
    sigma = np.sqrt(np.maximum(expected * base, 1.0)) / base
    z = (hist.normalized - expected) / sigma
    rms = float(np.sqrt(np.mean((hist.normalized - expected) ** 2)))
    window = np.abs(hist.tau) <= 50e-9 + 1e-15
    zmax = float(np.max(np.abs(z[window])))
    # Across the full range, the count of >3 sigma bins must be consistent with chance.
    n_out = int(np.sum(np.abs(z) > 3))
    p_tail = 2 * stats.norm.sf(3)
    p_value = float(stats.binom.sf(n_out - 1, z.size, p_tail))
    ok = rms < 0.03 and zmax < 3 and p_value > 1e-3 and hist.total_pairs >= 1e7
    return ok, (f"rms={rms:.4f}, max|z| (|tau|<=50 ns)={zmax:.2f}, >3sigma bins {n_out}/{z.size} "
                f"(p={p_value:.2g}), chi2/bin={np.mean(z**2):.3f}")


def criterion_5():
    ok_l, d_l = _oracle_check(hom_locked())
    ok_u, d_u = _oracle_check(hom_unlocked())
    return ok_l and ok_u, f"locked: {d_l}; unlocked: {d_u}"


def _adler(detuning, kappa=100e6, n=100_000, dt=20e-12):
    grid = SimGrid(dt, n, seed=11)
    master = generate_field(LaserSpec(linewidth_fwhm=0.0, power=1e-6), grid)
    cfg = InjectionConfig(1e-6, 1e-2, kappa / math.sqrt(1e-4),
                          LaserSpec(nu_offset=detuning, linewidth_fwhm=0.0, power=1e-2))
    slave, report = simulate_slave(master, cfg, grid)
    return master, slave, report


def criterion_6():
    kappa, step = 100e6, 1e6
    dets = np.arange(0.9 * kappa, 1.1 * kappa + step / 2, step)
    locked = np.array([_adler(d, n=60_000)[2].locked for d in dets])
    edge = float(dets[locked].max())
    iff = bool(np.all(locked[dets <= kappa]) and not np.any(locked[dets > kappa + step]))
    ok_sweep = iff and abs(edge - kappa) <= step
    errs = []
    for r in (0.25, 0.5, 0.9):
        master, slave, _ = _adler(r * kappa)
        offset = float(np.angle(slave.samples[-1] * np.conj(master.samples[-1])))
        errs.append(abs(offset - math.asin(r)))
    ok_fixed = max(errs) <= 1e-3
    _, _, rep = _adler(1.5 * kappa, n=200_000)
    pull = rep.mean_freq_error / math.sqrt((1.5 * kappa) ** 2 - kappa**2)
    ok_pull = abs(pull - 1) <= 0.01 and not rep.locked
    return ok_sweep and ok_fixed and ok_pull, (f"lock edge={edge / kappa:.3f} kappa (step 0.01), "
                                               f"max fixed-point error={max(errs):.2e} rad, "
                                               f"pulling ratio={pull:.5f}")


def criterion_7():
    inside = _run("drift_inside", "scenario = drift\n").metrics
    cross = _run("drift_cross", "scenario = drift\nbob.offset = 700 MHz\nbob.drift_rate = 120 MHz/hour\n")
    detail = cross.details
    dets = np.abs(detail["detunings"])
    locked = np.array([r.locked for r in detail["reports"]])
    kappa = cross.metrics["locking_bandwidth_hz"]
    ok_inside = inside["lock_retention"] == 1.0 and inside["max_abs_detuning_hz"] < 760e6
    ok_cross = (np.all(locked[dets <= kappa]) and not np.any(locked[dets > kappa])
                and 0 < locked.sum() < locked.size)
    return ok_inside and ok_cross, (f"100 MHz/h drift: retention={inside['lock_retention']:.2f}; "
                                    f"crossing drift: retention={locked.mean():.2f}, unlocked windows are "
                                    f"exactly those past {kappa / 1e6:.0f} MHz={ok_cross}")


def criterion_8():
    checks = {}
    # Phase increments: mean within 3 sigma, variance within 5%.
    grid = SimGrid(1e-10, 200_001, seed=2)
    inc = np.diff(gen_phase_trajectory(LaserSpec(linewidth_fwhm=5e6), grid))
    var = 2 * np.pi * 5e6 * 1e-10
    checks["phase increments"] = abs(inc.mean()) < 3 * math.sqrt(var / inc.size) and abs(inc.var() / var - 1) < 0.05
    # Beam splitter energy conservation for several overlaps.
    g = SimGrid(1e-10, 10_000, seed=3)
    a, b = generate_field(LaserSpec(), g, 0), generate_field(LaserSpec(power=3e-3), g, 1)
    worst = 0.0
    for s in (0.0, 0.3, 0.98, 1.0):
        p = beamsplitter(a, b, s)
        tot = a.intensity + b.intensity
        worst = max(worst, float(np.max(np.abs(p.intensity(1) + p.intensity(2) - tot) / tot)))
    checks["BS energy"] = worst <= 1e-12
    # Poisson and dead-time oracles.
    det = DetectorSpec(efficiency=1.0, dark_rate=0.0, dead_time=0.0, jitter_sigma=0.0)
    s1 = clicks_from_intensity(np.ones(5_000_000), 1e-9, det, 1e7, seed=5)
    checks["Poisson KS"] = stats.kstest(np.diff(s1.timestamps), "expon", args=(0, 1e-7)).pvalue > 0.01
    dead = DetectorSpec(efficiency=1.0, dark_rate=0.0, dead_time=50e-9, jitter_sigma=0.0)
    s2 = clicks_from_intensity(np.ones(10_000_000), 1e-9, dead, 2e7, seed=6)
    checks["dead time"] = abs(s2.rate / (2e7 / (1 + 2e7 * 50e-9)) - 1) < 0.02
    # Attenuation of 25 km at 0.2 dB/km.
    f = generate_field(LaserSpec(linewidth_fwhm=0.0), SimGrid(1e-7, 2000))
    out = propagate(f, FiberSpec(25.0))
    checks["attenuation"] = np.allclose(out.intensity[out.valid_from:], 1e-3 * 10**-0.5, rtol=1e-12)
    # Byte-identical reruns of a full scenario.
    text = "scenario = hom-unlocked\ntrials = 2\nhistogram.pairs = 1e6\ngrid.valid_span = 100 us\n"
    with tempfile.TemporaryDirectory() as tmp:
        r1 = run_scenario(parse_text(text), Path(tmp) / "a")
        r2 = run_scenario(parse_text(text), Path(tmp) / "b")
        same = all((Path(tmp) / "a" / p.name).read_bytes() == (Path(tmp) / "b" / p.name).read_bytes()
                   for p in r1.files if p.suffix == ".csv")
        checks["determinism"] = same and len(r1.files) == len(r2.files)
    failed = [k for k, v in checks.items() if not v]
    return not failed, ("all sub-checks pass: " + ", ".join(checks)) if not failed else f"failed: {failed}"


CRITERIA = [
    (1, "locked HOM visibility", criterion_1),
    (2, "unlocked beating fringe", criterion_2),
    (3, "locking bandwidth", criterion_3),
    (4, "beat note", criterion_4),
    (5, "oracle equivalence", criterion_5),
    (6, "Adler properties", criterion_6),
    (7, "drift retention", criterion_7),
    (8, "statistical and unit suites", criterion_8),
]


@pytest.mark.slow
@pytest.mark.parametrize("number,title,func", CRITERIA, ids=[f"criterion_{n}" for n, _, _ in CRITERIA])
def test_criterion(number, title, func, capsys):
    ok, detail = func()
    with capsys.disabled():
        print("\n" + _line(number, title, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    t0 = time.perf_counter()
    results = []
    for number, title, func in CRITERIA:
        ok, detail = func()
        results.append(ok)
        print(_line(number, title, ok, detail), flush=True)
    print(f"{sum(results)}/{len(results)} criteria passed in {time.perf_counter() - t0:.0f}s")
