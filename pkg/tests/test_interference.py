import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jsa_factory import grid, random_dense_jsa, random_mode_jsa
from photon_reshape import biphoton, gridkit, interference
from photon_reshape.biphoton import JointSpectralAmplitude
from photon_reshape.errors import GridError, NumericalConsistencyError
from photon_reshape.interference import BUMP, DIP, FLAT, HomFringe

DELAYS = np.linspace(-6e-12, 6e-12, 241)


def separable(f, h, g):
    return JointSpectralAmplitude(g, g, np.outer(f, h)).normalized()


def gaussian(g, center=0.0, width=2 * np.pi * 0.6e12):
    return np.exp(-((g.relative - center) ** 2) / (4 * width**2))


def brute_force_coincidence(jsa, delay):
    """Coincidence probability behind a 50/50 splitter, computed in the time domain.

    The signal (first index) is delayed by ``delay``.  Creation operators
    transform as a -> (c + d)/sqrt2, b -> (c - d)/sqrt2, so the amplitude
    for one photon at time t in port c and one at t' in port d is
    (S(t', t) - S(t, t')) / 2.
    """
    s = jsa.amplitude * np.exp(1j * jsa.grid_s.relative * delay)[:, None]
    dt = jsa.grid_s.conjugate().spacing
    st_ = gridkit.field_of(gridkit.field_of(s, dt, axis=0), dt, axis=1)
    a = 0.5 * (st_.T - st_)
    return float(np.sum(np.abs(a) ** 2) / np.sum(np.abs(st_) ** 2))


class TestFringe:
    def test_symmetric_perfect_dip(self):
        g = grid(64)
        jsa = separable(gaussian(g), gaussian(g), g)
        fr = interference.hom_fringe(jsa, DELAYS)
        assert fr.rates[120] == pytest.approx(0.0, abs=1e-12)
        v = interference.visibility(fr)
        assert v.kind == DIP and v.value == pytest.approx(1.0, abs=1e-9)

    def test_antisymmetric_perfect_bump(self):
        g = grid(64)
        f = gaussian(g)
        h = g.relative * f
        jsa = JointSpectralAmplitude(g, g, np.outer(f, h) - np.outer(h, f)).normalized()
        fr = interference.hom_fringe(jsa, DELAYS)
        assert fr.rates[120] == pytest.approx(2.0 * fr.r_classical, rel=1e-9)
        v = interference.visibility(fr)
        assert v.kind == BUMP and v.value == pytest.approx(1.0, abs=1e-9)

    def test_distinguishable_photons_flat(self):
        g = grid(64)
        w = 2 * np.pi * 0.3e12
        jsa = separable(gaussian(g, -2 * np.pi * 2e12, w), gaussian(g, 2 * np.pi * 2e12, w), g)
        fr = interference.hom_fringe(jsa, DELAYS)
        v = interference.visibility(fr)
        assert v.kind == FLAT and v.value == 0.0

    def test_triangular_dip(self):
        # sinc ridge across the anti-diagonal: rates = 1 - tri(tau / 2a)
        a = 0.5e-12
        g = biphoton.default_jsa_grid(biphoton.SpdcSpec(), n=1024, span_hz=80e12)
        n1, n2 = np.meshgrid(g.relative, g.relative, indexing="ij")
        sigma = 2 * np.pi * 0.2e12
        amp = np.exp(-((n1 + n2) ** 2) / (4 * sigma**2)) * np.sinc(a * (n1 - n2) / np.pi)
        jsa = JointSpectralAmplitude(g, g, amp).normalized()
        delays = np.linspace(-3e-12, 3e-12, 121)
        fr = interference.hom_fringe(jsa, delays)
        expected = 1.0 - np.clip(1.0 - np.abs(delays) / (2 * a), 0.0, None)
        assert np.max(np.abs(fr.rates - expected)) < 0.01

    @given(seed=st.integers(0, 10**6), delay_steps=st.integers(-8, 8))
    def test_brute_force_beam_splitter(self, seed, delay_steps):
        jsa = random_mode_jsa(np.random.default_rng(seed))
        delay = delay_steps * 0.1e-12
        w = interference.interference_term(jsa, [delay])[0]
        p = brute_force_coincidence(jsa, delay)
        assert 2 * p == pytest.approx(1.0 - w.real, abs=1e-8)

    def test_grid_mismatch(self):
        g = grid(32)
        other = biphoton.default_jsa_grid(biphoton.SpdcSpec(), n=32, span_hz=4e12)
        jsa = JointSpectralAmplitude(g, other, np.ones((32, 32)))
        with pytest.raises(GridError):
            interference.hom_fringe(jsa, DELAYS)

    def test_w_above_one_raises(self, monkeypatch):
        jsa = random_dense_jsa(np.random.default_rng(0))
        real = interference._difference_sums
        monkeypatch.setattr(interference, "_difference_sums", lambda j: 3.0 * real(j))
        sym = separable(np.ones(32), np.ones(32), grid(32))
        with pytest.raises(NumericalConsistencyError):
            interference.interference_term(sym, [0.0])

    def test_needs_three_delays(self):
        with pytest.raises(ValueError):
            interference.hom_fringe(random_dense_jsa(np.random.default_rng(0)), [0.0, 1.0])


class TestIdentities:
    @given(seed=st.integers(0, 10**6))
    def test_w0_is_sym_minus_anti(self, seed):
        jsa = random_dense_jsa(np.random.default_rng(seed))
        parts = biphoton.exchange_decompose(jsa)
        w0 = interference.interference_term(jsa, [0.0])[0]
        assert w0.real == pytest.approx(parts.symmetric.norm - parts.antisymmetric.norm, abs=1e-9)
        assert abs(w0.imag) < 1e-12

    @given(seed=st.integers(0, 10**6))
    def test_w_bounded(self, seed):
        jsa = random_dense_jsa(np.random.default_rng(seed))
        w = interference.interference_term(jsa, np.linspace(-5e-12, 5e-12, 21))
        assert np.all(np.abs(w) <= 1.0 + 1e-12)

    @given(seed=st.integers(0, 10**6))
    def test_bound_dominance(self, seed):
        jsa = random_mode_jsa(np.random.default_rng(seed))
        v = interference.visibility(interference.hom_fringe(jsa, DELAYS))
        assert v.value <= interference.jsi_visibility_bound(biphoton.jsi(jsa)) + 1e-9


class TestBound:
    def test_symmetric_jsi(self):
        j = np.random.default_rng(2).random((16, 16))
        assert interference.jsi_visibility_bound(j + j.T) == pytest.approx(1.0)

    def test_disjoint_from_transpose(self):
        j = np.triu(np.ones((16, 16)), k=1)
        assert interference.jsi_visibility_bound(j) == 0.0

    @pytest.mark.parametrize("bad", [np.ones((3, 4)), -np.ones((3, 3)), np.zeros((3, 3))])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            interference.jsi_visibility_bound(bad)


def dip_fringe(depth):
    rates = 1.0 - depth * np.exp(-(DELAYS / 1e-12) ** 2)
    return HomFringe(DELAYS, rates, 1.0, float(rates.min()), DIP)


class TestAccidentals:
    def test_zero_background(self):
        fr = dip_fringe(0.9)
        assert np.array_equal(interference.add_accidentals(fr, 0.0).rates, fr.rates)

    @given(f=st.floats(0, 2), depth=st.floats(0.05, 1.0))
    def test_add_remove_inverse(self, f, depth):
        fr = dip_fringe(depth)
        back = interference.remove_accidentals(interference.add_accidentals(fr, f), f)
        assert np.allclose(back.rates, fr.rates, atol=1e-12)

    def test_visibility_monotone(self):
        fr = dip_fringe(0.87)
        vs = [interference.visibility(interference.add_accidentals(fr, b)).value
              for b in np.linspace(0, 1, 11)]
        assert np.all(np.diff(vs) < 0)

    def test_reference_background(self):
        # visibility 0.87 after accidental removal, 0.84 raw
        b = interference.background_for_visibility(0.87, 0.84)
        assert b == pytest.approx(0.0357, abs=5e-4)
        fr = dip_fringe(0.87)
        raw = interference.add_accidentals(fr, b)
        assert interference.visibility(raw).value == pytest.approx(0.84, rel=1e-9)

    def test_invalid(self):
        with pytest.raises(ValueError):
            interference.add_accidentals(dip_fringe(0.5), -0.1)
        with pytest.raises(ValueError):
            interference.background_for_visibility(0.5, 0.6)


class TestHomFringeType:
    def test_validation(self):
        with pytest.raises(ValueError):
            HomFringe(DELAYS[::-1], np.ones(241), 1.0, 1.0)
        with pytest.raises(ValueError):
            HomFringe(DELAYS, -np.ones(241), 1.0, 1.0)
        with pytest.raises(ValueError):
            HomFringe(DELAYS, np.ones(241), 0.0, 1.0)

    def test_csv(self, tmp_path):
        p = tmp_path / "fringe.csv"
        interference.export_fringe_csv(p, dip_fringe(0.5))
        lines = p.read_bytes().split(b"\n")
        assert lines[0] == b"delay_ps,rate_normalized"
        assert lines[1].startswith(b"-6.0000000000e+00,")
        assert len(lines) == 243 and lines[-1] == b""
