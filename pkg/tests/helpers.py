"""Random input generators shared by the tests."""

import math

import numpy as np

from stransport import TensorFieldAlongPath, TransportLaw


def smooth_tabulated_law(rng, n, samples=11, domain=(0.0, 1.0), interpolation="linear", terms=3):
    """Random sum of sines tabulated on an even grid (entries of order one)."""
    lo, hi = domain
    amp = rng.uniform(-1, 1, (terms, n, n))
    freq = rng.uniform(0.5, 3.0, (terms, n, n))
    phase = rng.uniform(0, 2 * math.pi, (terms, n, n))
    s = np.linspace(lo, hi, samples)
    x = 2 * (s - lo) / (hi - lo)
    gamma = np.sum(amp[None] * np.sin(freq[None] * x[:, None, None, None] + phase[None]), axis=1)
    return TransportLaw.tabulated(s, gamma, interpolation)


def smooth_basis_change(rng, n, scale=0.5):
    """Invertible A(s) = I + M0 sin(w s) + M1 s^2 and its analytic derivative."""
    M0, M1 = rng.uniform(-scale, scale, (2, n, n))
    w = rng.uniform(0.5, 2.0)
    A = lambda s: np.eye(n) + M0 * math.sin(w * s) + M1 * s * s
    dA = lambda s: M0 * w * math.cos(w * s) + 2 * M1 * s
    return A, dA


def random_analytic_field(rng, p, q, n, domain=(0.0, 1.0)):
    """Field with components C0 + C1 sin(w s) and its exact derivative."""
    shape = (n,) * (p + q)
    C0, C1 = rng.uniform(-1, 1, (2,) + shape)
    w = rng.uniform(0.5, 2.0)
    return TensorFieldAlongPath(
        tuple(domain), p, q, n, lambda s: C0 + C1 * math.sin(w * s), lambda s: C1 * w * math.cos(w * s)
    )
