"""Scenario pipelines: beat note, locking bandwidth, drift, HOM fringes, sweeps."""
from __future__ import annotations

import csv
import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import analysis
from .analysis import HomModel
from .channel import attenuate, aom_shift, beamsplitter, propagate
from .config import ScenarioConfig, echo_config, expand_alias
from .detect import clicks_from_intensity, coincidence_histogram, merge_histograms, write_histogram_csv
from .errors import PreconditionError
from .injection import InjectionConfig, locking_bandwidth, simulate_slave
from .phasenoise import LaserSpec, SimGrid, generate_field, max_stable_dt

# Substream indices under (seed, trial, ...).
ALICE, BOB, SLAVE, DET1, DET2 = 0, 1, 2, 3, 4


@dataclass
class RunSummary:
    scenario: str
    metrics: dict
    seed: int
    wall_time: float
    files: list
    config: ScenarioConfig
    details: dict = field(default_factory=dict, repr=False)


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return f"{float(v):.6e}"


def write_summary_csv(path, scenario: str, seed: int, metrics: dict) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["key", "value"])
        w.writerow(["scenario", scenario])
        w.writerow(["seed", str(seed)])
        for k, v in metrics.items():
            w.writerow([k, _fmt(v)])


def read_summary_csv(path) -> dict:
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            try:
                out[row["key"]] = float(row["value"])
            except ValueError:
                out[row["key"]] = row["value"]
    return out


def _write_table(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


# --- helpers -------------------------------------------------------------------

def _kappa(cfg: ScenarioConfig, power: float | None = None) -> float:
    return locking_bandwidth(cfg.injection(power))


def _auto_dt(cfg: ScenarioConfig, kappa: float, detuning: float) -> float:
    if cfg["grid.dt"] is not None:
        return cfg["grid.dt"]
    if max(cfg["alice.linewidth"], cfg["bob.linewidth"], abs(detuning), kappa) == 0:
        # Fully static fields: only the histogram binning sets the scale.
        return cfg["histogram.bin_width"] / 10
    return max_stable_dt(max(cfg["alice.linewidth"], cfg["bob.linewidth"]), detuning, kappa)


def _master_spec(cfg: ScenarioConfig, launch_power: float) -> LaserSpec:
    return replace(cfg.laser("alice"), power=launch_power)


def _launch_power(cfg: ScenarioConfig) -> float:
    # Alice's launch power is set so that injection.power arrives at Bob.
    t = cfg.fiber("oil").power_transmission
    p = cfg["injection.power"]
    return p / t if p > 0 else 1e-3


# --- beat ----------------------------------------------------------------------

def _run_beat(cfg: ScenarioConfig, out: Path):
    inj = cfg.injection()
    kappa = locking_bandwidth(inj)
    alice, bob = cfg.laser("alice"), cfg.laser("bob")
    detuning = bob.nu_offset - alice.nu_offset
    shift = cfg["aom.shift"]
    dt = _auto_dt(cfg, kappa, max(abs(detuning), abs(shift)))
    oil = cfg.fiber("oil")
    n = int(math.ceil((oil.delay + cfg["grid.valid_span"]) / dt))
    expected = cfg["beat.expected_fwhm"] or analysis.predicted_beat_fwhm(
        alice.linewidth_fwhm, bob.linewidth_fwhm * cfg["injection.noise_factor"], locked=abs(detuning) < kappa)
    master = _master_spec(cfg, _launch_power(cfg))

    psd_sum, reports, spec0 = None, [], None
    for trial in range(cfg["trials"]):
        grid = SimGrid(dt=dt, n_samples=n, seed=cfg["seed"])
        grid_t = _trial_grid(grid, trial)
        a = generate_field(master, grid_t, ALICE)
        slave, report = simulate_slave(propagate(a, oil), inj, grid_t, stream=SLAVE)
        reports.append(report)
        spec = analysis.beat_psd(aom_shift(a, shift), slave, expected_fwhm=expected)
        del a, slave
        psd_sum = spec.psd if psd_sum is None else psd_sum + spec.psd
        spec0 = spec
    keep = spec0.freqs <= cfg["beat.max_freq"]
    spectrum = analysis.Spectrum(spec0.freqs[keep], (psd_sum / cfg["trials"])[keep], spec0.resolution_bw,
                                 spec0.mean_level)
    path = out / "spectrum.csv"
    analysis.write_spectrum_csv(path, spectrum)
    # Metrics are taken from the rounded values that were written.
    written = analysis.read_spectrum_csv(path)
    written = analysis.Spectrum(written.freqs, written.psd, spectrum.resolution_bw)
    locked = all(r.locked for r in reports)
    metrics = {
        "locked": float(locked),
        "detuning_hz": detuning,
        "locking_bandwidth_hz": kappa,
        "mean_freq_error_hz": float(np.mean([r.mean_freq_error for r in reports])),
        "beat_center_hz": analysis.peak_frequency(written),
        "beat_fwhm_hz": analysis.fwhm(written),
        "predicted_fwhm_hz": analysis.predicted_beat_fwhm(
            alice.linewidth_fwhm, bob.linewidth_fwhm * cfg["injection.noise_factor"], locked),
        "resolution_bw_hz": spectrum.resolution_bw,
        "dt_s": dt,
    }
    return metrics, [path], {"spectrum": spectrum, "reports": reports}


def _trial_grid(grid: SimGrid, trial: int) -> SimGrid:
    # Per-trial substream: the grid seed becomes (seed, trial) hashed into one integer.
    ss = np.random.SeedSequence([grid.seed, trial])
    return SimGrid(grid.dt, grid.n_samples, int(ss.generate_state(1, np.uint64)[0]))


# --- locking bandwidth ------------------------------------------------------------

def lock_window(cfg: ScenarioConfig, injection_power: float, detuning: float, window: float,
                seed_key: tuple, dt: float | None = None):
    """Short fine-grained run at one detuning; returns the :class:`LockReport`.

    Unless ``lock.noise = on`` both lasers are noise-free here, so the lock
    edge sits at kappa itself rather than being eroded by noise-driven slips.
    """
    noisy = cfg["lock.noise"] == "on"
    inj = cfg.injection(injection_power)
    if not noisy:
        inj = replace(inj, noise_factor=0.0)
    kappa = locking_bandwidth(inj)
    alice = cfg.laser("alice")
    lw = max(alice.linewidth_fwhm, inj.slave_spec.linewidth_fwhm) if noisy else 0.0
    dt = dt or max_stable_dt(lw, abs(detuning), max(kappa, 1.0))
    n = max(int(math.ceil(window / dt)), 16)
    seed = int(np.random.SeedSequence([cfg["seed"], *seed_key]).generate_state(1, np.uint64)[0])
    grid = SimGrid(dt, n, seed)
    master = LaserSpec(alice.nu_offset, alice.linewidth_fwhm if noisy else 0.0,
                       injection_power if injection_power > 0 else 1e-12)
    slave_spec = replace(inj.slave_spec, nu_offset=alice.nu_offset + detuning,
                         drift=replace(inj.slave_spec.drift, kind="none"))
    _, report = simulate_slave(generate_field(master, grid, ALICE), replace(inj, slave_spec=slave_spec), grid,
                               stream=SLAVE)
    return report


def detuning_sweep(cfg: ScenarioConfig, injection_power: float, tag: int = 0):
    step, top, window = cfg["lockband.step"], cfg["lockband.max_detuning"], cfg["lockband.window"]
    dets = np.arange(0.0, top + step / 2, step)
    reports = [lock_window(cfg, injection_power, d, window, (tag, i)) for i, d in enumerate(dets)]
    return dets, reports


def measured_bandwidth(cfg: ScenarioConfig, injection_power: float, tag: int = 0) -> float:
    """Largest locked detuning on the sweep grid, found by bisection.

    Assumes locking is monotone in |detuning| (true for the Adler model).
    """
    step, top, window = cfg["lockband.step"], cfg["lockband.max_detuning"], cfg["lockband.window"]
    n = int(round(top / step))
    cache = {}

    def locked(i):
        if i not in cache:
            cache[i] = lock_window(cfg, injection_power, i * step, window, (tag, i)).locked
        return cache[i]

    if not locked(0):
        return 0.0
    if locked(n):
        return n * step
    lo, hi = 0, n
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if locked(mid):
            lo = mid
        else:
            hi = mid
    return lo * step


def _run_lockband(cfg: ScenarioConfig, out: Path):
    power = cfg["injection.power"]
    kappa = _kappa(cfg, power)
    dets, reports = detuning_sweep(cfg, power, tag=0)
    locked = np.array([r.locked for r in reports])
    bandwidth = float(dets[locked].max()) if locked.any() else 0.0
    sweep_path = out / "lockband_sweep.csv"
    _write_table(sweep_path, ["detuning_hz", "locked", "mean_freq_error_hz"],
                 [(d, float(r.locked), r.mean_freq_error) for d, r in zip(dets, reports)])

    rows = []
    for i, p in enumerate(cfg["lockband.powers"]):
        rows.append((p, measured_bandwidth(cfg, p, tag=i + 1), _kappa(cfg, p)))
    power_path = out / "lockband_power.csv"
    _write_table(power_path, ["injection_power_w", "measured_bandwidth_hz", "model_bandwidth_hz"], rows)

    # Cavity readout at the check power.
    check = cfg["lockband.check_power"]
    alice, bob = cfg.laser("alice"), cfg.laser("bob")
    detuning = bob.nu_offset - alice.nu_offset
    report = lock_window(cfg, check, detuning, max(cfg["lockband.window"], 20e-6), (99,))
    # Mean slave frequency: the master's plus the residual error (pulled, if unlocked).
    slave_nu = alice.nu_offset + report.mean_freq_error
    fsr, fin, npts = cfg["fp.fsr"], cfg["fp.finesse"], cfg["fp.points"]
    start = alice.nu_offset - fsr / 2
    lines_m = [(alice.nu_offset, 1.0, alice.linewidth_fwhm)]
    lines_free = [(bob.nu_offset, 1.0, bob.linewidth_fwhm)]
    lines_lock = [(slave_nu, 1.0, bob.linewidth_fwhm)]
    tr_m = analysis.fp_scan(lines_m, fsr, fin, 2 * fsr, npts, start)
    tr_f = analysis.fp_scan(lines_free, fsr, fin, 2 * fsr, npts, start)
    tr_l = analysis.fp_scan(lines_lock, fsr, fin, 2 * fsr, npts, start)
    fp_path = out / "fp_scan.csv"
    _write_table(fp_path, ["scan_hz", "master", "slave_free", "slave_injected"],
                 zip(tr_m.freqs, tr_m.transmission, tr_f.transmission, tr_l.transmission))
    pm, pf, pl = (analysis.scan_peaks(t) for t in (tr_m, tr_f, tr_l))

    def sep(a, b):
        d = (b[:, None] - a[None, :]).ravel()
        d = (d + fsr / 2) % fsr - fsr / 2
        return float(d[np.argmin(np.abs(d))])

    metrics = {
        "injection_power_w": power,
        "locking_bandwidth_hz": bandwidth,
        "model_bandwidth_hz": kappa,
        "sweep_step_hz": cfg["lockband.step"],
        "kappa_coeff_hz": cfg.kappa_coeff(),
        "check_power_w": check,
        "check_detuning_hz": detuning,
        "check_locked": float(report.locked),
        "check_mean_freq_error_hz": report.mean_freq_error,
        "fp_free_separation_hz": sep(pm, pf),
        "fp_injected_separation_hz": sep(pm, pl),
        "fp_scan_step_hz": tr_m.step,
    }
    return metrics, [sweep_path, power_path, fp_path], {"reports": reports, "power_table": rows}


# --- drift ---------------------------------------------------------------------------

def drift_detunings(cfg: ScenarioConfig, times: np.ndarray) -> np.ndarray:
    """Free-running detuning at coarse times from both lasers' drift models."""
    rng = np.random.default_rng(np.random.SeedSequence([cfg["seed"], 1000]))
    out = np.full(times.size, cfg["bob.offset"] - cfg["alice.offset"], dtype=float)
    for who, sign in (("bob", 1.0), ("alice", -1.0)):
        kind, rate = cfg[f"{who}.drift"], cfg[f"{who}.drift_rate"]
        if kind == "linear":
            out += sign * rate * times / 3600.0
        elif kind == "random-walk" and rate > 0:
            dts = np.diff(np.concatenate(([0.0], times)))
            out += sign * np.cumsum(rng.normal(0.0, rate * np.sqrt(dts / 3600.0)))
    return out


def _run_drift(cfg: ScenarioConfig, out: Path):
    power = cfg["injection.power"]
    kappa = _kappa(cfg, power)
    nwin = cfg["drift.windows"]
    times = (np.arange(nwin) + 0.5) * cfg["drift.duration"] / nwin
    dets = drift_detunings(cfg, times)
    reports = [lock_window(cfg, power, d, cfg["drift.window"], (2000, i)) for i, d in enumerate(dets)]
    locked = np.array([r.locked for r in reports])
    expected = np.abs(dets) <= kappa
    path = out / "drift.csv"
    _write_table(path, ["time_s", "detuning_hz", "locked", "expected_locked", "mean_freq_error_hz"],
                 [(t, d, float(r.locked), float(e), r.mean_freq_error)
                  for t, d, r, e in zip(times, dets, reports, expected)])
    metrics = {
        "injection_power_w": power,
        "locking_bandwidth_hz": kappa,
        "windows": float(nwin),
        "lock_retention": float(locked.mean()),
        "expected_retention": float(expected.mean()),
        "mismatched_windows": float(np.sum(locked != expected)),
        "max_abs_detuning_hz": float(np.max(np.abs(dets))),
    }
    return metrics, [path], {"reports": reports, "times": times, "detunings": dets}


# --- HOM -----------------------------------------------------------------------------

@dataclass(frozen=True)
class HomPlan:
    """Everything a single HOM trial needs (picklable for worker processes)."""

    locked_mode: bool
    dt: float
    n: int
    seed: int
    alice: LaserSpec
    bob: LaserSpec
    injection: InjectionConfig | None
    oil: object
    alice_charlie: object
    bob_charlie: object
    pol_overlap: float
    power_ratio: float
    bs_power: float
    det1: object
    det2: object
    rate_per_watt: float
    bin_width: float
    max_tau: float


def hom_plan(cfg: ScenarioConfig) -> tuple[HomPlan, dict]:
    locked_mode = cfg.scenario == "hom-locked" or (cfg.scenario == "sweep" and cfg["sweep.base"] == "hom-locked")
    alice, bob = cfg.laser("alice"), cfg.laser("bob")
    inj = cfg.injection() if locked_mode else None
    kappa = locking_bandwidth(inj) if inj else 0.0
    detuning = bob.nu_offset - alice.nu_offset
    dt = _auto_dt(cfg, kappa, detuning)
    oil, ac, bc = cfg.fiber("oil"), cfg.fiber("alice_charlie"), cfg.fiber("bob_charlie")
    lead = max(ac.delay, (oil.delay if locked_mode else 0.0) + bc.delay)
    settle = 1e3 / (2 * np.pi * kappa) if kappa > 0 else 0.0
    n = int(math.ceil((lead + settle + cfg["grid.valid_span"]) / dt)) + 2

    if locked_mode and abs(detuning) < kappa:
        dnu_b_eff = bob.linewidth_fwhm * cfg["injection.noise_factor"]
        gamma = analysis.gamma_from_linewidths(alice.linewidth_fwhm, alice.linewidth_fwhm)
        omega = 0.0
    else:
        dnu_b_eff = bob.linewidth_fwhm
        static = alice.linewidth_fwhm + bob.linewidth_fwhm == 0
        gamma = 0.0 if static else analysis.gamma_from_linewidths(alice.linewidth_fwhm, bob.linewidth_fwhm)
        omega = 2 * np.pi * abs(detuning) if not locked_mode else 0.0
    bw = cfg["histogram.bin_width"]
    max_tau = cfg["histogram.max_tau"]
    if max_tau is None:
        max_tau = math.ceil(20.0 / gamma / 10e-9) * 10e-9 if gamma > 0 else 50e-9
    half = int(round(max_tau / bw))
    reach = (half + 0.5) * bw
    exposure = cfg["grid.valid_span"] - 2 * reach
    if exposure <= 0:
        raise PreconditionError("grid.valid_span must exceed twice histogram.max_tau")

    # Mean port intensity is (P_a + P_b)/2 at the splitter.
    pa = cfg["bs.power"]
    pb = pa * cfg["bs.power_ratio"]
    mean_port = (pa + pb) / 2
    rate = cfg["detector.click_rate"]
    if rate is None:
        rate = math.sqrt(cfg["histogram.pairs"] / (cfg["trials"] * (2 * half + 1) * bw * exposure))
    eff = max(min(cfg["detector1.efficiency"], cfg["detector2.efficiency"]), 1e-12)
    rate_per_watt = rate / (eff * mean_port) if mean_port > 0 else 0.0

    plan = HomPlan(locked_mode, dt, n, cfg["seed"], alice, bob, inj, oil, ac, bc, cfg["bs.pol_overlap"],
                   cfg["bs.power_ratio"], cfg["bs.power"], cfg.detector(1), cfg.detector(2), rate_per_watt, bw,
                   half * bw)
    info = {"kappa": kappa, "detuning": detuning, "gamma": gamma, "omega": omega, "click_rate": rate,
            "dnu_b_eff": dnu_b_eff}
    return plan, info


def hom_trial(plan: HomPlan, trial: int):
    """One independent realization of the full HOM chain; returns raw counts and diagnostics."""
    grid = _trial_grid(SimGrid(plan.dt, plan.n, plan.seed), trial)
    a = generate_field(replace(plan.alice, power=1e-3), grid, ALICE)
    report = None
    if plan.locked_mode:
        launch = plan.injection.injection_power / plan.oil.power_transmission if plan.injection.injection_power > 0 else 0.0
        injected = propagate(attenuate(a, launch / 1e-3), plan.oil)
        b, report = simulate_slave(injected, plan.injection, grid, stream=SLAVE)
        del injected
    else:
        b = generate_field(plan.bob, grid, BOB)
    a_c = propagate(a, plan.alice_charlie)
    del a
    b_c = propagate(b, plan.bob_charlie)
    del b
    # VOAs balance the arms at the splitter.
    pa, pb = plan.bs_power, plan.bs_power * plan.power_ratio
    a_c = attenuate(a_c, pa / float(np.mean(a_c.intensity[a_c.valid_from:])))
    b_c = attenuate(b_c, pb / float(np.mean(b_c.intensity[b_c.valid_from:])))
    ports = beamsplitter(a_c, b_c, plan.pol_overlap)
    del a_c, b_c
    v0 = ports.valid_from
    s1 = clicks_from_intensity(ports.intensity(1), plan.dt, plan.det1, plan.rate_per_watt, (grid.seed, DET1), v0)
    s2 = clicks_from_intensity(ports.intensity(2), plan.dt, plan.det2, plan.rate_per_watt, (grid.seed, DET2), v0)
    del ports
    hist = coincidence_histogram(s1, s2, plan.bin_width, plan.max_tau)
    return hist, report, (len(s1), len(s2), s1.span)


def expected_model(cfg: ScenarioConfig, info: dict):
    """Oracle fringe for the configuration: (HomModel, coherence function of tau)."""
    V = analysis.hom_visibility_factor(cfg["bs.pol_overlap"], cfg["bs.power_ratio"])
    # Noiseless sources never decorrelate; the model still needs a positive rate.
    model = HomModel(V=V, gamma_rate=info["gamma"] or np.finfo(float).tiny, omega_diff=info["omega"], baseline=1.0)
    if info["kappa"] > 0 and abs(info["detuning"]) < info["kappa"]:
        def coherence(tau):
            return analysis.locked_mutual_coherence(tau, cfg["alice.linewidth"], info["dnu_b_eff"],
                                                    info["kappa"], info["detuning"])
    else:
        def coherence(tau):
            return np.exp(-info["gamma"] * np.abs(tau))
    return model, coherence


def expected_histogram(tau, bin_width, V, omega, coherence, n_sub: int = 8) -> np.ndarray:
    """Bin-averaged ``1 - V*Gamma(tau)*cos(omega*tau)`` with a general coherence function."""
    offsets = ((np.arange(n_sub) + 0.5) / n_sub - 0.5) * bin_width
    t = np.asarray(tau)[:, None] + offsets[None, :]
    return (1.0 - V * coherence(t) * np.cos(omega * t)).mean(axis=1)


def _run_hom(cfg: ScenarioConfig, out: Path):
    plan, info = hom_plan(cfg)
    trials = cfg["trials"]
    workers = cfg["workers"]
    if workers > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(hom_trial, [plan] * trials, range(trials)))
    else:
        results = [hom_trial(plan, t) for t in range(trials)]
    hists = [r[0] for r in results]
    reports = [r[1] for r in results if r[1] is not None]
    hist = merge_histograms(hists)
    hist_path = out / "histogram.csv"
    write_histogram_csv(hist_path, hist)

    from .detect import read_histogram_csv
    written = read_histogram_csv(hist_path, hist.accumulation_time)
    fit = analysis.fit_hom(written, dnu_defaults=(cfg["alice.linewidth"], cfg["bob.linewidth"]))
    fit_path = out / "fit.csv"
    analysis.write_fit_csv(fit_path, fit)

    model, coherence = expected_model(cfg, info)
    oracle = expected_histogram(hist.tau, hist.bin_width, model.V, model.omega_diff, coherence)
    oracle_path = out / "oracle.csv"
    _write_table(oracle_path, ["tau_s", "expected"], zip(hist.tau, oracle))

    clicks = np.array([r[2] for r in results])
    m = fit.model
    metrics = {
        "locked": float(all(r.locked for r in reports)) if reports else 0.0,
        "locking_bandwidth_hz": info["kappa"],
        "detuning_hz": info["detuning"],
        "V": m.V,
        "V_std_error": fit.std_errors["V"],
        "omega_diff_rad_s": m.omega_diff,
        "omega_diff_std_error": fit.std_errors["omega_diff"],
        "freq_diff_hz": m.omega_diff / (2 * np.pi),
        "gamma_rate_per_s": m.gamma_rate,
        "gamma_rate_std_error": fit.std_errors["gamma_rate"],
        "baseline": m.baseline,
        "fit_converged": float(fit.converged),
        "visibility_dip": analysis.visibility(written, m.gamma_rate),
        "expected_V": model.V,
        "expected_gamma_rate_per_s": model.gamma_rate,
        "expected_omega_diff_rad_s": model.omega_diff,
        "coincidence_pairs": float(hist.total_pairs),
        "accumulation_time_s": hist.accumulation_time,
        "mean_click_rate_hz": float(np.mean(clicks[:, :2].sum(axis=0) / clicks[:, 2].sum())),
        "trials": float(trials),
        "dt_s": plan.dt,
    }
    details = {"hist": hist, "trial_hists": hists, "singles": clicks, "fit": fit, "oracle": oracle, "reports": reports,
               "plan": plan, "info": info, "model": model}
    return metrics, [hist_path, fit_path, oracle_path], details


# --- sweep -----------------------------------------------------------------------------

def _run_sweep(cfg: ScenarioConfig, out: Path):
    if not cfg.sweeps:
        raise PreconditionError("sweep scenario needs at least one 'sweep.<key> = v1, v2' axis")
    axes = list(cfg.sweeps)
    base = cfg["sweep.base"]
    rows, files, runs = [], [], []
    metric_names = None
    for i, combo in enumerate(itertools.product(*(cfg.sweeps[a] for a in axes))):
        overrides = {"scenario": base}
        for axis, value in zip(axes, combo):
            for key in expand_alias(axis):
                overrides[key] = value
        sub_cfg = cfg.with_overrides(overrides)
        sub_out = out / f"sweep_{i:03d}"
        summary = run_scenario(sub_cfg, sub_out, echo=False)
        runs.append(summary)
        files.extend(summary.files)
        if metric_names is None:
            metric_names = list(summary.metrics)
        rows.append([i, *combo, *(summary.metrics[k] for k in metric_names)])
    path = out / "sweep.csv"
    _write_table(path, ["run", *axes, *metric_names], rows)
    metrics = {"runs": float(len(rows))}
    return metrics, [path, *files], {"runs": runs}


RUNNERS = {
    "beat": _run_beat,
    "lockband": _run_lockband,
    "drift": _run_drift,
    "hom-locked": _run_hom,
    "hom-unlocked": _run_hom,
    "sweep": _run_sweep,
}


def run_scenario(cfg: ScenarioConfig, out=None, echo: bool = True) -> RunSummary:
    """Run the configured scenario and write its CSV artifacts into ``out``."""
    out = Path(out if out is not None else cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    metrics, files, details = RUNNERS[cfg.scenario](cfg, out)
    summary_path = out / "summary.csv"
    write_summary_csv(summary_path, cfg.scenario, cfg["seed"], metrics)
    config_path = out / "config.txt"
    config_path.write_text(echo_config(cfg), encoding="utf-8")
    files = [Path(f) for f in files] + [summary_path, config_path]
    return RunSummary(cfg.scenario, metrics, cfg["seed"], time.perf_counter() - t0, files, cfg, details)
