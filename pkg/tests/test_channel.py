import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from longoil.analysis import beat_psd, peak_frequency
from longoil.channel import FiberSpec, aom_shift, attenuate, beamsplitter, delay_samples, propagate
from longoil.errors import PreconditionError
from longoil.phasenoise import FieldTrajectory, LaserSpec, SimGrid, generate_field


def _field(n=4096, seed=0, lw=5e6, power=1e-3, dt=1e-10, stream=0):
    return generate_field(LaserSpec(linewidth_fwhm=lw, power=power), SimGrid(dt, n, seed), stream)


def test_zero_length_is_identity():
    f = _field()
    g = propagate(f, FiberSpec(0.0))
    assert np.array_equal(f.samples, g.samples)
    assert g.valid_from == f.valid_from


def test_attenuation_formula():
    fib = FiberSpec(25.0, 0.2)
    assert fib.power_transmission == pytest.approx(10**-0.5)
    f = _field(dt=1e-7, lw=0.0, n=2000)
    g = propagate(f, fib)
    k = delay_samples(fib, f.grid.dt)
    assert np.allclose(g.intensity[k:], f.intensity[:-k] * 10**-0.5, rtol=1e-12)
    assert np.all(g.samples[:k] == 0)
    assert g.valid_from == k


def test_delay_50km():
    assert FiberSpec(50.0, group_index=1.468).delay == pytest.approx(244.8e-6, rel=1e-3)


def test_delay_beyond_span():
    with pytest.raises(PreconditionError):
        propagate(_field(n=100), FiberSpec(1.0))


def test_propagate_composes():
    f = _field(n=30_000, dt=1e-9, lw=0)
    a, b = FiberSpec(1.0), FiberSpec(2.0)
    two = propagate(propagate(f, a), b)
    one = propagate(f, FiberSpec(3.0))
    assert abs(two.valid_from - one.valid_from) <= 1
    assert two.intensity[two.valid_from + 5] == pytest.approx(one.intensity[one.valid_from + 5], rel=1e-12)


def test_aom_identity_and_inverse():
    f = _field()
    assert aom_shift(f, 0.0) is f
    back = aom_shift(aom_shift(f, -80e6), 80e6)
    assert np.allclose(back.samples, f.samples, rtol=1e-12, atol=1e-12 * np.abs(f.samples).max())
    assert back.nu_offset == f.nu_offset


def test_aom_aliasing_rejected():
    with pytest.raises(PreconditionError):
        aom_shift(_field(dt=1e-9, lw=0), 80e6)


def test_aom_beat_at_80mhz():
    f = _field(n=2**18, lw=0.0)
    spec = beat_psd(f, aom_shift(f, 80e6), nperseg=2**14)
    assert peak_frequency(spec) == pytest.approx(80e6, abs=spec.resolution_bw)


@settings(max_examples=30, deadline=None)
@given(shift=st.floats(-1.9e8, 1.9e8), seed=st.integers(0, 1000))
def test_aom_unitary(shift, seed):
    f = _field(n=256, seed=seed)
    assert np.array_equal(np.abs(aom_shift(f, shift).samples), np.abs(f.samples)) or np.allclose(
        np.abs(aom_shift(f, shift).samples), np.abs(f.samples), rtol=1e-15, atol=0)


@settings(max_examples=40, deadline=None)
@given(s=st.floats(0.0, 1.0), seed=st.integers(0, 10_000), ratio=st.floats(0.01, 100.0))
def test_beamsplitter_energy_conservation(s, seed, ratio):
    a = _field(n=512, seed=seed, stream=0)
    b = _field(n=512, seed=seed, stream=1, power=1e-3 * ratio)
    ports = beamsplitter(a, b, s)
    total = ports.intensity(1) + ports.intensity(2)
    assert np.allclose(total, a.intensity + b.intensity, rtol=1e-12, atol=0)


def test_beamsplitter_examples():
    a = _field(n=1000, seed=1)
    zero = FieldTrajectory(a.grid, np.zeros(1000))
    p = beamsplitter(a, zero, 1.0)
    assert np.allclose(p.intensity(1), a.intensity / 2)
    assert np.allclose(p.intensity(2), a.intensity / 2)

    same = beamsplitter(a, a, 1.0)
    assert np.all(same.intensity(2) == 0)
    assert np.allclose(same.intensity(1), 2 * a.intensity)

    b = _field(n=200_000, seed=2, stream=1)
    a2 = _field(n=200_000, seed=2, stream=0)
    q = beamsplitter(a2, b, 1.0)
    assert q.intensity(1).mean() == pytest.approx(1e-3, rel=0.05)
    assert q.intensity(2).mean() == pytest.approx(1e-3, rel=0.05)


def test_orthogonal_polarization_splits_evenly():
    a = _field(n=1000, seed=1, lw=0)
    b = _field(n=1000, seed=1, stream=1, lw=0)
    p = beamsplitter(a, b, 0.0)
    assert np.allclose(p.intensity(1), (a.intensity + b.intensity) / 2)
    assert np.allclose(p.intensity(2), p.intensity(1))


def test_beamsplitter_grid_mismatch():
    with pytest.raises(PreconditionError):
        beamsplitter(_field(n=100), _field(n=101), 1.0)


def test_attenuate():
    f = _field(n=100)
    assert np.allclose(attenuate(f, 0.25).intensity, f.intensity * 0.25)
    with pytest.raises(ValueError):
        attenuate(f, -1.0)
