"""Trusted spectral reference solver for the trace evolution inequality.

Works directly on Omega (no cylinder): the fractional operator is the exact
mode-wise power on a band-limited sine expansion, collocated on a uniform
physical grid where the obstacle constraint is enforced.  Each implicit Euler
step solves the bound-constrained system by projected SOR.  Nothing here
touches the finite element solver, which keeps the cross-validation honest.
"""

from dataclasses import dataclass

import numpy as np

from .assembly import ConvergenceError
from .spectral import SpectralField

try:
    from numba import njit

    _HAVE_NUMBA = True
except Exception:  # pragma: no cover - numba is optional
    _HAVE_NUMBA = False


@dataclass(frozen=True)
class OracleConfig:
    """Resolution of the reference solver.

    n_phys >= 2*n_modes keeps the collocated constraint from aliasing into
    the resolved band.  tau_ref should be at least 4x smaller than any
    compared time step.
    """

    n_modes: int = 256
    n_phys: int = 1024
    tau_ref: float = None
    psor_tol: float = 1e-9
    psor_max_iter: int = 500
    omega: float = 1.3
    length: float = 1.0

    def __post_init__(self):
        if self.n_phys < 2 * self.n_modes:
            raise ValueError("need n_phys >= 2*n_modes to avoid aliasing")


def _grid(config):
    return np.linspace(0.0, config.length, config.n_phys + 1)[1:-1]


def fractional_stiffness(n_modes, s, length=1.0, n_phys=None):
    """Dense symmetric PSD matrix acting as the fractional operator on the grid.

    F = D Lambda^s D^T / n_phys with D the orthonormal sine synthesis on the
    interior grid points; the eigenrelation F phi_l = lambda_l^s phi_l holds
    for every resolved mode l <= n_modes.
    """
    if n_phys is None:
        n_phys = 2 * n_modes
    x = np.linspace(0.0, length, n_phys + 1)[1:-1]
    l = np.arange(1, n_modes + 1)
    D = np.sqrt(2.0 / length) * np.sin(np.pi * np.outer(x, l) / length)
    lam = (l * np.pi / length) ** 2.0
    # D^T D = (n_phys / length) I for the orthonormal basis on this grid
    return (D * lam ** s) @ D.T * (length / n_phys)


def _psor_sweep_py(S, diag, b, lb, v, omega):
    n = len(v)
    for i in range(n):
        r = b[i] - S[i] @ v
        vi = v[i] + omega * r / diag[i]
        v[i] = vi if vi > lb[i] else lb[i]


if _HAVE_NUMBA:

    @njit(cache=True)
    def _psor_sweep_nb(S, diag, b, lb, v, omega):  # pragma: no cover - jit
        n = v.shape[0]
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += S[i, j] * v[j]
            vi = v[i] + omega * (b[i] - acc) / diag[i]
            v[i] = vi if vi > lb[i] else lb[i]

    _psor_sweep = _psor_sweep_nb
else:
    _psor_sweep = _psor_sweep_py


@dataclass
class OracleTrajectory:
    """Reference trajectory as sine coefficients over a uniform time grid."""

    times: np.ndarray
    coeffs: np.ndarray          # shape (K+1, n_modes)
    n_phys: int
    domain_length: float = 1.0
    residuals: np.ndarray = None

    @property
    def n_modes(self):
        return self.coeffs.shape[1]

    @property
    def tau(self):
        return self.times[1] - self.times[0]

    def field(self, k):
        return SpectralField(self.coeffs[k], self.domain_length)

    def _clip_time(self, t):
        T = self.times[-1]
        if t < -1e-14 or t > T + 1e-14:
            raise ValueError(f"time {t} outside [0, {T}]")
        return min(max(t, 0.0), T)

    def hat_coeffs(self, t):
        """Piecewise-linear-in-time coefficients at time t."""
        t = self._clip_time(t)
        k = min(int(t / self.tau), len(self.times) - 2)
        theta = (t - self.times[k]) / self.tau
        return (1 - theta) * self.coeffs[k] + theta * self.coeffs[k + 1]

    def bar_coeffs(self, t):
        """Right-continuous piecewise-constant coefficients at time t."""
        t = self._clip_time(t)
        if t == 0.0:
            return self.coeffs[0]
        k = int(np.ceil(t / self.tau - 1e-12))
        return self.coeffs[min(k, len(self.times) - 1)]

    def l2_max(self):
        return float(np.max(np.linalg.norm(self.coeffs, axis=1)))

    def to_csv(self, path):
        with open(path, "w") as fh:
            cols = ",".join(f"c{l}" for l in range(1, self.n_modes + 1))
            fh.write(f"t,{cols}\n")
            for t, row in zip(self.times, self.coeffs):
                fh.write("%.17g,%s\n" % (t, ",".join("%.17g" % c for c in row)))


def spectral_vi_solve(problem, config, n_steps=None):
    """Implicit Euler for the trace inequality with the dense spectral operator.

    The constraint u >= psi is enforced at the physical grid points; each
    step's system is solved by projected SOR to config.psor_tol, warm-started
    from the previous state.  Returns an OracleTrajectory; the per-step
    complementarity residuals are recorded.
    """
    T = problem.T
    if n_steps is None:
        if config.tau_ref is None:
            raise ValueError("give n_steps or set tau_ref")
        n_steps = int(round(T / config.tau_ref))
    tau = T / n_steps
    x = _grid(config)
    n = len(x)
    l = np.arange(1, config.n_modes + 1)
    D = np.sqrt(2.0 / config.length) * np.sin(
        np.pi * np.outer(x, l) / config.length
    )
    analysis = D.T * (config.length / config.n_phys)
    F = fractional_stiffness(
        config.n_modes, problem.s, config.length, n_phys=config.n_phys
    )
    S = np.ascontiguousarray(np.eye(n) / tau + F)
    diag = np.ascontiguousarray(np.diag(S).copy())
    psi = np.asarray(problem.psi(x), dtype=float)
    u = np.maximum(psi, np.asarray(problem.u0(x), dtype=float))

    times = np.linspace(0.0, T, n_steps + 1)
    coeffs = np.zeros((n_steps + 1, config.n_modes))
    residuals = np.zeros(n_steps + 1)
    coeffs[0] = analysis @ u
    omega = config.omega
    u_prev = u.copy()
    for k in range(n_steps):
        # midpoint forcing sample: second-order proxy for the interval average
        b = u / tau
        if problem.f is not None:
            b = b + problem.forcing(x, (k + 0.5) * tau)
        # extrapolation predictor (projected) cuts the sweep count
        guess = np.maximum(psi, 2.0 * u - u_prev)
        u_prev = u.copy()
        u = guess
        res = np.inf
        for sweep in range(config.psor_max_iter):
            _psor_sweep(S, diag, b, psi, u, omega)
            lam = S @ u - b
            res = float(np.max(np.abs(np.minimum(lam, u - psi))))
            if res <= config.psor_tol:
                break
        else:
            raise ConvergenceError(
                f"oracle PSOR stalled at step {k + 1} (residual {res:.3e})"
            )
        coeffs[k + 1] = analysis @ u
        residuals[k + 1] = res
    return OracleTrajectory(
        times=times,
        coeffs=coeffs,
        n_phys=config.n_phys,
        domain_length=config.length,
        residuals=residuals,
    )
