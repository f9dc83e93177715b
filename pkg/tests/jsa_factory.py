"""Seeded random joint spectra used by property tests.

Mixtures of a few Gaussian modes with random complex weights, delays and
chirps.  They are smooth and sit well inside the grid, so the fringe
plateau at large delays is exactly 1.
"""

import numpy as np

from photon_reshape import biphoton
from photon_reshape.biphoton import JointSpectralAmplitude, SpdcSpec

SPAN_HZ = 8e12


def grid(n=64):
    return biphoton.default_jsa_grid(SpdcSpec(), n=n, span_hz=SPAN_HZ)


def random_mode_jsa(rng, n=64, max_modes=4, max_delay=1.5e-12):
    g = grid(n)
    nu = g.relative
    n1, n2 = np.meshgrid(nu, nu, indexing="ij")
    width = 2 * np.pi * SPAN_HZ
    amp = np.zeros((n, n), complex)
    for _ in range(rng.integers(1, max_modes + 1)):
        c1, c2 = rng.uniform(-0.2, 0.2, 2) * width
        w1, w2 = rng.uniform(0.04, 0.08, 2) * width
        rho = rng.uniform(-0.8, 0.8)
        d1, d2 = rng.uniform(-max_delay, max_delay, 2)
        chirp = rng.uniform(-0.3, 0.3) * 1e-24
        x, y = (n1 - c1) / w1, (n2 - c2) / w2
        env = np.exp(-(x**2 + y**2 - 2 * rho * x * y) / (2 * (1 - rho**2)))
        phase = d1 * (n1 - c1) + d2 * (n2 - c2) + chirp * (n1 - c1) ** 2
        weight = rng.normal() + 1j * rng.normal()
        amp += weight * env * np.exp(1j * phase)
    return JointSpectralAmplitude(g, g, amp).normalized()


def random_dense_jsa(rng, n=32):
    """Unstructured complex samples (for algebraic identities only)."""
    g = grid(n)
    amp = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return JointSpectralAmplitude(g, g, amp).normalized()
