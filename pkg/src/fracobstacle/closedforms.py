"""Closed-form solutions of the weighted cylinder equation.

Separation of variables on a single sine mode reduces the degenerate
equation div(y**alpha grad w) = 0 to a modified Bessel equation in y; the
truncated profile vanishing at y = Y combines both Bessel branches.  Its
conormal flux at y = 0 gives exact energies of the extension, which the
interpolation study uses to evaluate gradient errors without 2-D quadrature.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import iv, kv

from .spectral import gamma_fn


@dataclass(frozen=True)
class ExtensionProfile:
    """Profile g with w(x,y) = phi_mode(x) g(y), g(0) = 1, g(Y) = 0."""

    s: float
    sqrt_lam: float
    Y: float
    A: float
    B: float
    kappa: float  # conormal flux constant: -lim y**alpha g'(y)

    def g(self, y):
        y = np.asarray(y, dtype=float)
        z = self.sqrt_lam * np.maximum(y, 1e-300)
        val = self.A * z ** self.s * kv(self.s, z) + self.B * z ** self.s * iv(
            self.s, z
        )
        return np.where(y == 0.0, 1.0, val)

    def dg(self, y):
        y = np.asarray(y, dtype=float)
        z = self.sqrt_lam * np.maximum(y, 1e-300)
        sq = self.sqrt_lam
        return -self.A * sq * z ** self.s * kv(1.0 - self.s, z) \
            + self.B * sq * z ** self.s * iv(self.s - 1.0, z)


def extension_profile(s, lam, Y):
    """Truncated harmonic-extension profile for eigenvalue lam and height Y.

    kappa approaches d_s * lam**s from above as Y grows (the truncation
    stiffens the Dirichlet-to-Neumann response).
    """
    sq = np.sqrt(lam)
    A = 2.0 ** (1.0 - s) / gamma_fn(s)
    B = -A * kv(s, sq * Y) / iv(s, sq * Y)
    kappa = sq ** (2.0 * s) * (
        A * gamma_fn(1.0 - s) * 2.0 ** (-s) - B * 2.0 ** (1.0 - s) / gamma_fn(s)
    )
    return ExtensionProfile(s=s, sqrt_lam=sq, Y=Y, A=A, B=B, kappa=kappa)


def harmonic_target(s, Y, length=1.0, mode=1):
    """Callable bundle (w, wx, wy, profile) for the mode-`mode` extension.

    w(x, y) = sin(mode*pi*x/length) * g(y); exact gradients included.
    """
    lam = (mode * np.pi / length) ** 2
    prof = extension_profile(s, lam, Y)
    freq = mode * np.pi / length

    def w(x, y):
        return np.sin(freq * np.asarray(x)) * prof.g(y)

    def wx(x, y):
        return freq * np.cos(freq * np.asarray(x)) * prof.g(y)

    def wy(x, y):
        return np.sin(freq * np.asarray(x)) * prof.dg(y)

    return w, wx, wy, prof


def sinh_extension(Y, length=1.0, mode=1):
    """Half-order special case: the sinh profile for s = 1/2 (alpha = 0)."""
    freq = mode * np.pi / length

    def w(x, y):
        return np.sin(freq * np.asarray(x)) * np.sinh(
            freq * (Y - np.asarray(y))
        ) / np.sinh(freq * Y)

    return w
