"""Backward-Euler evolution of the cylinder variational inequality.

Each step solves the bound-constrained SPD system produced by
vi.build_step_system; the scheme starts from the interpolated harmonic
extension of the initial datum, so the discrete obstacle and the initial
trace pass through the same positive operators and feasibility holds by
construction.  Also provides the time interpolants, energy diagnostics and
the two error functionals used by the convergence studies.
"""

from dataclasses import dataclass, field

import numpy as np

from .assembly import assemble_stiffness, assemble_trace_mass
from .fields import (
    BilinearField,
    gl_rule,
    trace_l2_diff_sq,
    weighted_grad_err_sq_fields,
)
from .interp import harmonic_extension, make_mollifier, pi_interp, r_interp
from .spectral import hs_norm, project_to_spectral
from .vi import build_step_system, pdas_solve


class InfeasibleDataError(ValueError):
    """Problem data violate an admissibility requirement."""


@dataclass
class ProblemData:
    """Obstacle-problem data on Omega = (0, length).

    psi and u0 are vectorized callables of x; f is a callable (x, t) or None.
    The obstacle must be nonpositive at the boundary and u0 >= psi.
    """

    psi: object
    u0: object
    f: object
    T: float
    s: float
    length: float = 1.0

    def validate(self, n_check=257):
        xs = np.linspace(0.0, self.length, n_check)
        psi_v = np.asarray(self.psi(xs), dtype=float)
        u0_v = np.asarray(self.u0(xs), dtype=float)
        if psi_v[0] > 0.0 or psi_v[-1] > 0.0:
            raise InfeasibleDataError("obstacle must satisfy psi <= 0 on the boundary")
        if np.any(u0_v < psi_v - 1e-12):
            raise InfeasibleDataError("initial datum must satisfy u0 >= psi")

    def forcing(self, x, t):
        if self.f is None:
            return np.zeros_like(np.asarray(x, dtype=float))
        return np.asarray(self.f(x, t), dtype=float)


@dataclass
class Trajectory:
    """Time-indexed discrete states V^0..V^K as full nodal vectors."""

    mesh: object
    params: object
    tau: float
    states: np.ndarray
    obstacle: np.ndarray
    active_sets: list = field(default_factory=list)
    residuals: np.ndarray = None

    @property
    def n_steps(self):
        return len(self.states) - 1

    @property
    def T(self):
        return self.tau * self.n_steps

    @property
    def traces(self):
        """Trace rows (y = 0) including the boundary zeros."""
        return self.states[:, : self.mesh.nx]

    def trace_interior(self, k):
        return self.states[k][self.mesh.trace_set]

    def feasibility_violation(self):
        """Worst obstacle violation over all steps (positive = violated)."""
        gaps = self.states[:, self.mesh.trace_set] - self.obstacle[None, :]
        return float(max(0.0, -gaps.min()))

    def state_field(self, k):
        return BilinearField(self.mesh, self.states[k])

    def to_csv(self, path):
        """Per-step rows: t_k, residual, active-set size, trace nodal values."""
        ntr = self.mesh.n_trace
        with open(path, "w") as fh:
            cols = ",".join(f"trace_{i}" for i in range(ntr))
            fh.write(f"t,residual,active_size,{cols}\n")
            for k in range(self.n_steps + 1):
                res = self.residuals[k] if self.residuals is not None else 0.0
                nact = len(self.active_sets[k]) if k < len(self.active_sets) else 0
                vals = ",".join(
                    "%.17g" % v for v in self.states[k][self.mesh.trace_set]
                )
                fh.write("%.17g,%.17g,%d,%s\n" % (k * self.tau, res, nact, vals))


def time_average_f(problem, k, tau, mode="averaged", x_nodes=None, n_quad=20):
    """Forcing sample for one step: interval average over [t_k, t_{k+1}]
    (mode 'averaged') or the right-limit value f(., t_k) (mode 'right_limit').
    """
    if x_nodes is None:
        raise ValueError("x_nodes required")
    if mode == "right_limit":
        return problem.forcing(x_nodes, k * tau)
    if mode != "averaged":
        raise ValueError(f"unknown forcing mode {mode!r}")
    tq, tw = gl_rule(k * tau, (k + 1) * tau, n_quad)
    acc = np.zeros(len(x_nodes))
    for t, w in zip(tq, tw):
        acc += w * problem.forcing(x_nodes, t)
    return acc / tau


def discrete_obstacle(psi, mesh, moll, params=None):
    """Nodal trace lower bound tr Pi H(psi).

    The discrete extension keeps its own trace data, so the bound reduces to
    the trace mollifier applied to the nodal interpolant of psi; the
    interpolant is pinned to zero at the corners like the extension's trace.
    """
    psi_nodal = np.zeros(mesh.nx)
    psi_nodal[1:-1] = np.asarray(psi(mesh.base.interior), dtype=float)
    return r_interp(psi_nodal, mesh.base, moll)


def init_state(problem, mesh, moll, params, A=None):
    """Initial state Pi H(u0) with trace clamped to the discrete obstacle.

    The clamp only absorbs rounding: u0 >= psi and both pass through the
    same monotone trace operator.
    """
    u0_nodal = np.asarray(problem.u0(mesh.base.nodes), dtype=float)
    psi_nodal = np.asarray(problem.psi(mesh.base.nodes), dtype=float)
    if np.any(u0_nodal < psi_nodal - 1e-12):
        raise InfeasibleDataError("initial datum below obstacle at trace nodes")
    w_trace = u0_nodal[1:-1]
    W = harmonic_extension(w_trace, mesh, params, A=A)
    V0 = pi_interp(BilinearField(mesh, W), mesh, moll)
    obstacle = discrete_obstacle(problem.psi, mesh, moll, params)
    V0[mesh.trace_set] = np.maximum(V0[mesh.trace_set], obstacle)
    return V0


def step(v_free, A, M_tr, tau, f_load, obstacle, mesh, warm_active=None, tol=1e-10):
    """One backward-Euler step; returns (new free vector, VISolution)."""
    sys = build_step_system(A, M_tr, tau, v_free, f_load, obstacle, mesh)
    sol = pdas_solve(sys, tol=tol, initial_active=warm_active)
    return sol.v, sol


def run(problem, mesh, n_steps, mode="averaged", moll=None, params=None, tol=1e-10):
    """Integrate the fully discrete scheme over [0, T]; deterministic.

    Every step records the active set and its complementarity residual; a
    non-converged step aborts with the step index.
    """
    from .spectral import make_params

    if params is None:
        params = make_params(problem.s)
    if moll is None:
        moll = make_mollifier(mesh.base, mesh.partition)
    problem.validate()
    tau = problem.T / n_steps
    A = assemble_stiffness(mesh, params)
    M_tr = assemble_trace_mass(mesh.base)
    obstacle = discrete_obstacle(problem.psi, mesh, moll, params)
    V0 = init_state(problem, mesh, moll, params, A=A)

    states = np.zeros((n_steps + 1, mesh.n_nodes))
    states[0] = V0
    residuals = np.zeros(n_steps + 1)
    active_sets = [np.array([], dtype=int)]
    v_free = V0[mesh.free_set].copy()
    x_trace = mesh.base.interior
    ntr = mesh.n_trace
    warm = np.zeros(ntr, dtype=bool)
    for k in range(n_steps):
        if mode == "right_limit":
            f_load = time_average_f(problem, k + 1, tau, mode, x_nodes=x_trace)
        else:
            f_load = time_average_f(problem, k, tau, mode, x_nodes=x_trace)
        v_free, sol = step(
            v_free, A, M_tr, tau, f_load, obstacle, mesh, warm_active=warm, tol=tol
        )
        if not sol.converged:
            raise RuntimeError(
                f"active-set iteration failed to settle at step {k + 1} "
                f"(residual {sol.residual:.3e})"
            )
        warm = np.zeros(ntr, dtype=bool)
        warm[sol.active_set] = True
        full = np.zeros(mesh.n_nodes)
        full[mesh.free_set] = v_free
        states[k + 1] = full
        residuals[k + 1] = sol.residual
        active_sets.append(sol.active_set)
    return Trajectory(
        mesh=mesh,
        params=params,
        tau=tau,
        states=states,
        obstacle=obstacle,
        active_sets=active_sets,
        residuals=residuals,
    )


def interp_eval(traj, t, kind="hat"):
    """Time interpolants: 'bar' is right-continuous piecewise constant,
    'hat' the piecewise linear interpolant."""
    T = traj.T
    if t < -1e-14 or t > T + 1e-14:
        raise ValueError(f"time {t} outside [0, {T}]")
    t = min(max(t, 0.0), T)
    tau = traj.tau
    if kind == "bar":
        if t == 0.0:
            return traj.states[0].copy()
        k = int(np.ceil(t / tau - 1e-12))
        return traj.states[min(k, traj.n_steps)].copy()
    if kind == "hat":
        k = min(int(t / tau), traj.n_steps - 1)
        theta = (t - k * tau) / tau
        return (1 - theta) * traj.states[k] + theta * traj.states[k + 1]
    raise ValueError(f"unknown interpolant kind {kind!r}")


def energy_diagnostics(traj, params, problem=None):
    """A priori energy quantities of the run and their data bound.

    Returns the squared sums  sum_k ||tr dV^k||^2,  tau ||grad V^K||^2,
    tau sum_k ||grad dV^k||^2  (weighted norms) and the right-hand-side
    proxy  tau [ ||f||^2_{L2(L2)} + ||grad V^0||^2 ].
    """
    mesh = traj.mesh
    A = assemble_stiffness(mesh, params)
    M_tr = assemble_trace_mass(mesh.base)
    ds = params.d_s
    free = mesh.free_set
    ti = mesh.trace_set
    sum_tr = 0.0
    sum_grad_d = 0.0
    for k in range(1, traj.n_steps + 1):
        dv = traj.states[k] - traj.states[k - 1]
        dtr = dv[ti]
        sum_tr += float(dtr @ (M_tr.mat @ dtr))
        dfree = dv[free]
        sum_grad_d += ds * float(dfree @ (A.mat @ dfree))
    vK = traj.states[-1][free]
    grad_K = ds * float(vK @ (A.mat @ vK))
    v0 = traj.states[0][free]
    grad_0 = ds * float(v0 @ (A.mat @ v0))
    f_norm_sq = 0.0
    if problem is not None and problem.f is not None:
        xs = mesh.base.interior
        for k in range(traj.n_steps):
            tq, tw = gl_rule(k * traj.tau, (k + 1) * traj.tau, 6)
            for t, w in zip(tq, tw):
                fv = problem.forcing(xs, t)
                f_norm_sq += w * float(fv @ (M_tr.mat @ fv))
    rhs_bound = traj.tau * (f_norm_sq + grad_0)
    return {
        "sum_trace_increments_sq": sum_tr,
        "tau_grad_final_sq": traj.tau * grad_K,
        "tau_sum_grad_increments_sq": traj.tau * sum_grad_d,
        "data_bound": rhs_bound,
    }


def _sample_times(traj):
    """Step points plus midpoints (documented L-inf-in-time sampling)."""
    K = traj.n_steps
    pts = [k * traj.tau for k in range(K + 1)]
    pts += [(k + 0.5) * traj.tau for k in range(K)]
    return sorted(pts)


def error_E(traj, reference, nq_space=6, nt_per_interval=4):
    """Cylinder error functional against a finer reference.

    Returns (linf_l2, l2_grad): the trace L-inf(0,T; L2) distance between the
    hat interpolants sampled at steps and midpoints, and the L2-in-time
    weighted-gradient distance of the reference to the piecewise-constant
    interpolant.  reference is a finer-resolution Trajectory.
    """
    mesh = traj.mesh
    base = mesh.base
    if isinstance(reference, Trajectory):
        if abs(reference.T - traj.T) > 1e-12:
            raise ValueError("reference horizon differs")
        ref_traj = reference
    else:
        raise TypeError("reference must be a Trajectory")

    linf = 0.0
    for t in _sample_times(traj):
        coarse = interp_eval(traj, t, "hat")[: mesh.nx]
        fine = interp_eval(ref_traj, t, "hat")[: ref_traj.mesh.nx]
        d2 = trace_l2_diff_sq(base, coarse, (ref_traj.mesh.base, fine))
        linf = max(linf, np.sqrt(d2))

    # both sides enter the integral term through their piecewise-constant
    # interpolants, so comparing a trajectory against itself gives zero
    grad_sq = 0.0
    for k in range(traj.n_steps):
        bar = BilinearField(mesh, traj.states[k + 1])
        tq, tw = gl_rule(k * traj.tau, (k + 1) * traj.tau, nt_per_interval)
        for t, w in zip(tq, tw):
            fine = BilinearField(ref_traj.mesh, interp_eval(ref_traj, t, "bar"))
            grad_sq += w * weighted_grad_err_sq_fields(
                mesh, traj.params, fine, bar, nq=nq_space
            )
    return float(linf), float(np.sqrt(grad_sq))


def trace_to_spectral(traj, k, n_modes, n_grid, hat_t=None):
    """Project a stored (or hat-interpolated) trace onto the sine basis by
    sampling its P1 interpolant on a uniform n_grid-cell grid."""
    base = traj.mesh.base
    if hat_t is None:
        vals = traj.traces[k]
    else:
        vals = interp_eval(traj, hat_t, "hat")[: traj.mesh.nx]
    xs = np.linspace(0.0, base.length, n_grid + 1)
    i = np.clip(np.searchsorted(base.nodes, xs[1:-1], side="right") - 1, 0,
                base.n_cells - 1)
    t = (xs[1:-1] - base.nodes[i]) / base.h
    samples = np.zeros(n_grid + 1)
    samples[1:-1] = (1 - t) * vals[i] + t * vals[i + 1]
    return project_to_spectral(samples, n_modes, base.length)


def error_calE(traj, reference, nt_per_interval=4):
    """Trace error functional against a spectral reference trajectory.

    Returns (linf_l2, l2_hs): both terms act on sine coefficients, the first
    comparing hat interpolants at steps and midpoints, the second integrating
    the H^s distance between the reference and the piecewise-constant
    interpolant.  reference must expose times, coeffs, n_modes, n_phys and
    hat_coeffs(t) (see oracle.OracleTrajectory).
    """
    n_modes = reference.n_modes
    if n_modes > reference.n_phys - 1:
        raise ValueError("reference mode count exceeds its grid resolution")
    s = traj.params.s
    length = traj.mesh.base.length

    def coarse_coeffs(t):
        return trace_to_spectral(traj, None, n_modes, reference.n_phys, hat_t=t).coeffs

    linf = 0.0
    for t in _sample_times(traj):
        diff = coarse_coeffs(t) - reference.hat_coeffs(t)
        linf = max(linf, float(np.linalg.norm(diff)))

    from .spectral import SpectralField

    hs_sq = 0.0
    for k in range(traj.n_steps):
        bar = trace_to_spectral(traj, k + 1, n_modes, reference.n_phys)
        tq, tw = gl_rule(k * traj.tau, (k + 1) * traj.tau, nt_per_interval)
        for t, w in zip(tq, tw):
            diff = SpectralField(reference.bar_coeffs(t) - bar.coeffs, length)
            hs_sq += w * hs_norm(diff, s) ** 2
    return float(linf), float(np.sqrt(hs_sq))
