"""Bound-constrained SPD solves for one backward-Euler step.

Each step of the discrete evolution is the variational inequality

    v >= lb on the constrained (trace) DOFs,
    (S v - rhs)_i  = 0   on unconstrained DOFs and inactive constraints,
    (S v - rhs)_i >= 0   where v_i = lb_i,

i.e. a complementarity system for an SPD quadratic program.  The production
solver is a primal-dual active set iteration; projected SOR and brute-force
active-set enumeration serve as independent cross-checks.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import ConvergenceError, SparseSym


@dataclass
class StepSystem:
    """S v - rhs complementarity data; lb applies on constrained_set only."""

    S: SparseSym
    rhs: np.ndarray
    lower_bound: np.ndarray
    constrained_set: np.ndarray

    def __post_init__(self):
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.lower_bound = np.asarray(self.lower_bound, dtype=float)
        self.constrained_set = np.asarray(self.constrained_set, dtype=int)
        if self.S.mat.shape[0] != len(self.rhs):
            raise ValueError("rhs length does not match system dimension")
        if len(self.lower_bound) != len(self.constrained_set):
            raise ValueError("bound/constrained set length mismatch")

    @property
    def n(self):
        return len(self.rhs)


@dataclass
class VISolution:
    """Solution with active set and multiplier on the constrained DOFs."""

    v: np.ndarray
    active_set: np.ndarray          # indices into constrained_set order
    multiplier: np.ndarray          # (S v - rhs) restricted to constrained DOFs
    converged: bool = True
    iterations: int = 0
    residual: float = 0.0


def build_step_system(A, M_tr, tau, prev, f_vec, obstacle, mesh):
    """Assemble one backward-Euler step system.

    S = (1/tau) E M_tr E^T + A with E the trace embedding; the right-hand
    side integrates the previous trace and the nodal forcing against the
    trace basis.  obstacle holds the nodal lower bound on the trace DOFs.
    """
    if tau <= 0:
        raise ValueError(f"time step must be positive, got {tau}")
    prev = np.asarray(prev, dtype=float)
    f_vec = np.asarray(f_vec, dtype=float)
    ti = mesh.trace_free_indices()
    ntr = len(ti)
    if len(f_vec) != ntr or len(obstacle) != ntr:
        raise ValueError("trace data length mismatch")
    if len(prev) != A.n:
        raise ValueError("previous state length mismatch")
    emb = sp.csr_matrix(
        (np.ones(ntr), (ti, np.arange(ntr))), shape=(A.n, ntr)
    )
    S = SparseSym((A.mat + (1.0 / tau) * (emb @ M_tr.mat @ emb.T)).tocsr())
    load = M_tr.mat @ ((1.0 / tau) * prev[ti] + f_vec)
    rhs = np.zeros(A.n)
    rhs[ti] = load
    return StepSystem(S=S, rhs=rhs, lower_bound=np.asarray(obstacle, float), constrained_set=ti)


def _solve_reduced(S, rhs, fixed, fixed_vals):
    """Equality-constrained solve: v = fixed_vals on fixed, S v = rhs elsewhere."""
    n = S.shape[0]
    keep = np.ones(n, dtype=bool)
    keep[fixed] = False
    ki = np.where(keep)[0]
    v = np.zeros(n)
    v[fixed] = fixed_vals
    if len(ki):
        Skk = S[ki][:, ki].tocsc()
        b = rhs[ki] - (S[ki][:, fixed] @ fixed_vals if len(fixed) else 0.0)
        v[ki] = spla.splu(Skk).solve(b)
    return v


def pdas_solve(sys, tol=1e-10, max_iter=50, initial_active=None):
    """Primal-dual active set iteration; terminates when the set repeats.

    Inner equality-constrained solves use a sparse direct factorization so
    the complementarity conditions hold to solver roundoff.
    """
    S = sys.S.mat
    cons = sys.constrained_set
    lb = sys.lower_bound
    if initial_active is None:
        active = np.zeros(len(cons), dtype=bool)
    else:
        active = np.asarray(initial_active, dtype=bool).copy()
    v = np.zeros(sys.n)
    lam_c = np.zeros(len(cons))
    for it in range(1, max_iter + 1):
        v = _solve_reduced(S, sys.rhs, cons[active], lb[active])
        lam_c = (S @ v - sys.rhs)[cons]
        # active next: primal violation or currently-active with multiplier >= 0
        new_active = (v[cons] < lb - tol) | (active & (lam_c > -tol))
        if np.array_equal(new_active, active):
            res = complementarity_residual(
                VISolution(v, np.where(active)[0], lam_c), sys
            )
            return VISolution(
                v=v,
                active_set=np.where(active)[0],
                multiplier=lam_c,
                converged=True,
                iterations=it,
                residual=res,
            )
        active = new_active
    res = complementarity_residual(VISolution(v, np.where(active)[0], lam_c), sys)
    return VISolution(
        v=v,
        active_set=np.where(active)[0],
        multiplier=lam_c,
        converged=False,
        iterations=max_iter,
        residual=res,
    )


def psor_solve(sys, omega=1.5, tol=1e-10, max_iter=20000, x0=None):
    """Projected SOR sweeps with clamping at the lower bound.

    Independent of pdas_solve; used for cross-validation.  Unconstrained
    DOFs are treated as having lower bound -inf.
    """
    if not 0.0 < omega < 2.0:
        raise ValueError(f"relaxation parameter must lie in (0,2), got {omega}")
    S = sys.S.mat.tocsr()
    n = sys.n
    lb_full = np.full(n, -np.inf)
    lb_full[sys.constrained_set] = sys.lower_bound
    diag = S.diagonal()
    v = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    indptr, indices, data = S.indptr, S.indices, S.data
    for sweep in range(1, max_iter + 1):
        for i in range(n):
            row = slice(indptr[i], indptr[i + 1])
            si = data[row] @ v[indices[row]]
            vi = v[i] + omega * (sys.rhs[i] - si) / diag[i]
            v[i] = max(lb_full[i], vi)
        lam = S @ v - sys.rhs
        lam_c = lam[sys.constrained_set]
        gap = v[sys.constrained_set] - sys.lower_bound
        free_res = np.abs(np.delete(lam, sys.constrained_set))
        res = max(
            np.max(np.abs(np.minimum(lam_c, gap))) if len(lam_c) else 0.0,
            np.max(free_res) if len(free_res) else 0.0,
        )
        if res <= tol:
            active = gap <= tol
            return VISolution(
                v=v,
                active_set=np.where(active)[0],
                multiplier=lam_c,
                converged=True,
                iterations=sweep,
                residual=float(res),
            )
    raise ConvergenceError(f"psor_solve: residual {res:.3e} after {max_iter} sweeps")


def enumerate_active_sets(sys, tol=1e-9, all_consistent=False):
    """Ground-truth solver: try every subset of the constrained set.

    Returns the KKT-consistent subset's solution (the one with smallest
    residual on ties); with all_consistent, the list of consistent subsets
    instead.  Limited to <= 12 constraints.
    """
    m = len(sys.constrained_set)
    if m > 12:
        raise ValueError(f"enumeration limited to 12 constrained DOFs, got {m}")
    S_dense = sys.S.mat.toarray()
    cons = sys.constrained_set
    lb = sys.lower_bound
    scale = max(1.0, float(np.abs(sys.rhs).max()))
    best = None
    consistent = []
    n = sys.n
    for size in range(m + 1):
        for subset in combinations(range(m), size):
            active = np.array(subset, dtype=int)
            fixed = cons[active]
            keep = np.ones(n, dtype=bool)
            keep[fixed] = False
            v = np.zeros(n)
            v[fixed] = lb[active]
            if keep.any():
                b = sys.rhs[keep] - S_dense[np.ix_(keep, ~keep)] @ lb[active]
                v[keep] = np.linalg.solve(S_dense[np.ix_(keep, keep)], b)
            lam_c = (S_dense @ v - sys.rhs)[cons]
            feasible = np.all(v[cons] >= lb - tol)
            sign_ok = np.all(lam_c[active] >= -tol * scale) if len(active) else True
            inactive = np.setdiff1d(np.arange(m), active)
            comp_ok = np.all(np.abs(lam_c[inactive]) <= tol * scale)
            if feasible and sign_ok and comp_ok:
                consistent.append(tuple(subset))
                sol = VISolution(v=v, active_set=active, multiplier=lam_c)
                sol.residual = complementarity_residual(sol, sys)
                if best is None or sol.residual < best.residual:
                    best = sol
    if all_consistent:
        return consistent
    if best is None:
        raise ConvergenceError("no KKT-consistent active set found")
    return best


def complementarity_residual(sol, sys):
    """Worst complementarity defect max|min(multiplier, v - lb)| combined
    with the worst violation of either sign condition."""
    gap = sol.v[sys.constrained_set] - sys.lower_bound
    lam = sol.multiplier
    if len(gap) == 0:
        return 0.0
    comp = float(np.max(np.abs(np.minimum(lam, gap))))
    sign_viol = max(0.0, float(np.max(-gap)), float(np.max(-lam)))
    return max(comp, sign_viol)
