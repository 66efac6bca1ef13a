"""Shipped benchmark problems.

P1  unconstrained smooth decay: the obstacle sits at -1e6, the dynamics are
    the pure fractional heat equation started from the first eigenmode.
P2  touching obstacle: a tent obstacle with the initial datum resting on it
    over a region, no forcing; the coincidence set evolves.
P3  jump forcing: constant-in-space-profile forcing whose amplitude jumps at
    T/2 (bounded variation in time); drives the solution onto a flat
    obstacle and releases it.
"""

import numpy as np

from .timestep import ProblemData

OBSTACLE_SENTINEL = -1.0e6


def preset_p1(s=0.5, T=0.5, length=1.0):
    amp = np.sqrt(2.0 / length)

    def u0(x):
        return amp * np.sin(np.pi * np.asarray(x) / length)

    def psi(x):
        return np.full_like(np.asarray(x, dtype=float), OBSTACLE_SENTINEL)

    return ProblemData(psi=psi, u0=u0, f=None, T=T, s=s, length=length)


def preset_p2(s=0.5, T=0.5, length=1.0):
    def psi(x):
        x = np.asarray(x, dtype=float)
        return 0.3 - np.abs(x - 0.5 * length)

    def u0(x):
        x = np.asarray(x, dtype=float)
        return np.maximum(psi(x), 0.1 * np.sin(np.pi * x / length))

    return ProblemData(psi=psi, u0=u0, f=None, T=T, s=s, length=length)


def preset_p3(s=0.5, T=0.5, length=1.0):
    amp = np.sqrt(2.0 / length)

    def psi(x):
        return np.full_like(np.asarray(x, dtype=float), -0.15)

    def u0(x):
        return 0.3 * amp * np.sin(np.pi * np.asarray(x) / length)

    def f(x, t):
        # right-continuous amplitude jump at T/2 (bounded variation in time)
        a = -3.0 if t < T / 2.0 else 2.0
        return a * amp * np.sin(np.pi * np.asarray(x) / length)

    return ProblemData(psi=psi, u0=u0, f=f, T=T, s=s, length=length)


_PRESETS = {"P1": preset_p1, "P2": preset_p2, "P3": preset_p3}


def get_preset(name, s=None, T=None, length=None):
    """Instantiate a preset by id with optional overrides."""
    key = name.upper()
    if key not in _PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(_PRESETS)}")
    kwargs = {}
    if s is not None:
        kwargs["s"] = s
    if T is not None:
        kwargs["T"] = T
    if length is not None:
        kwargs["length"] = length
    return _PRESETS[key](**kwargs)


def is_sentinel_obstacle(problem, threshold=-1.0e5):
    """True when the preset's obstacle is the inactive sentinel."""
    xs = np.linspace(0.0, problem.length, 17)
    return bool(np.all(np.asarray(problem.psi(xs)) <= threshold))
