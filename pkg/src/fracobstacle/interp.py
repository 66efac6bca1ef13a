"""Discrete harmonic extension and positivity-preserving interpolation.

Three operators act on cylinder functions:

  * r_interp  -- trace-level averaging against a symmetric mollifier with
                 vanishing first moment; positive, reproduces affine traces.
  * l_interp  -- quasi-interpolation by mollified first-degree Taylor
                 polynomials, suited to the anisotropic graded mesh.
  * pi_interp -- r_interp values on the trace row, l_interp elsewhere,
                 zero on the Dirichlet boundary.

The mollifier is the compactly supported exponential bump; its quadrature is
baked into discrete measures whose weights are normalized to sum exactly to
one, which makes constant and affine reproduction exact in floating point.
"""

from dataclasses import dataclass

import numpy as np

from .assembly import cg_solve
from .fields import BilinearField, _gl


def bump(t):
    """exp(-1/(1-t^2)) on (-1,1), zero outside; not normalized."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


# normalization of the unit bump; arbitrary-precision quadrature value
_BUMP_INTEGRAL = 0.44399381616807943782


@dataclass(frozen=True)
class Mollifier:
    """Scaled mollifier pair and its reference quadrature measures.

    mu1 is the symmetric bump on (-r, r); mu2 the one-sided bump supported in
    (0, r_Y).  t1/w1 (resp. t2/w2) are reference nodes in (-1,1) (resp. (0,1))
    with bump-weighted, exactly normalized quadrature weights.
    """

    r: float
    r_Y: float
    t1: np.ndarray
    w1: np.ndarray
    t2: np.ndarray
    w2: np.ndarray

    def mu1(self, x):
        """Continuum density of the symmetric mollifier (unit radius r)."""
        return bump(np.asarray(x) / self.r) / (self.r * _BUMP_INTEGRAL)

    def mu2(self, y):
        """Continuum density of the one-sided mollifier on (0, r_Y)."""
        y = np.asarray(y)
        return bump(2.0 * y / self.r_Y - 1.0) * 2.0 / (self.r_Y * _BUMP_INTEGRAL)


def make_mollifier(base, partition, radius=0.25, n_points=48):
    """Mollifier sized to the mesh: r <= 1/sigma_Omega, r_Y <= 1/sigma.

    The base mesh is uniform so sigma_Omega = 1; sigma is the measured
    neighbor ratio of the graded partition.  The default radius 0.25 keeps
    the trace-row averaging error small relative to the first-layer width.
    """
    sigma_omega = 1.0
    sigma = partition.neighbor_ratio()
    r = min(radius, 1.0 / sigma_omega)
    r_y = min(radius, 1.0 / sigma)
    x, w = _gl(n_points)
    # mu1: split at the kink-free center to aid the rule near the flat tails
    t1 = np.concatenate([0.5 * x - 0.5, 0.5 * x + 0.5])
    w1 = np.concatenate([0.5 * w, 0.5 * w]) * bump(t1)
    w1 /= w1.sum()
    t2 = 0.5 * x + 0.5
    w2 = 0.5 * w * bump(2.0 * t2 - 1.0)
    w2 /= w2.sum()
    return Mollifier(r=r, r_Y=r_y, t1=t1, w1=w1, t2=t2, w2=w2)


def harmonic_extension(w_trace, mesh, params, A=None, tol=1e-10):
    """Discrete solution of div(y**alpha grad V) = 0 with trace data w.

    w_trace holds values at the interior trace nodes; the extension vanishes
    on the lateral boundary and the top lid.  Returns the full nodal vector.
    """
    from .assembly import assemble_stiffness

    if A is None:
        A = assemble_stiffness(mesh, params)
    w_trace = np.asarray(w_trace, dtype=float)
    if len(w_trace) != mesh.n_trace:
        raise ValueError("trace data length does not match mesh")
    ti = mesh.trace_free_indices()
    ii = np.setdiff1d(np.arange(mesh.n_free), ti)
    Aii = A.mat[ii][:, ii]
    Ait = A.mat[ii][:, ti]
    vi = cg_solve(Aii, -(Ait @ w_trace), tol=tol)
    full = np.zeros(mesh.n_nodes)
    full[mesh.trace_set] = w_trace
    full[mesh.free_set[ii]] = vi
    return full


def _as_trace_callable(w, base):
    """Normalize r_interp input to a vectorized callable on Omega."""
    if callable(w):
        return w
    if isinstance(w, BilinearField):
        vals = w.trace_values()
    else:
        vals = np.asarray(w, dtype=float)
        if len(vals) != base.n_cells + 1:
            raise ValueError("nodal trace length does not match base mesh")

    def p1(x):
        i = np.clip(
            np.searchsorted(base.nodes, x, side="right") - 1, 0, base.n_cells - 1
        )
        t = (x - base.nodes[i]) / base.h
        return (1 - t) * vals[i] + t * vals[i + 1]

    return p1


def r_interp(w, base, moll):
    """Mollified nodal values on the interior trace nodes.

    w may be a callable on Omega, a nodal P1 vector, or a BilinearField
    (its trace is used).  Nonnegative inputs give nonnegative values since
    the quadrature weights are positive.
    """
    fn = _as_trace_callable(w, base)
    h = base.h
    verts = base.interior
    pts = verts[:, None] + moll.r * h * moll.t1[None, :]
    return np.asarray(fn(pts)) @ moll.w1


def _node_supports(mesh, moll):
    """Per-level mollifier length scale h_{v''} (smallest adjacent y-cell)."""
    hy = mesh.partition.widths
    h_node = np.empty(mesh.partition.M)  # h_{v''} for free levels j=0..M-1
    h_node[0] = hy[0]
    for j in range(1, mesh.partition.M):
        h_node[j] = min(hy[j - 1], hy[j])
    return h_node


def l_interp(w, mesh, moll, grad=None):
    """Quasi-interpolant by mollified Taylor polynomials at the free nodes.

    w is a callable (x, y) -> values with grad = (wx, wy) callables, or a
    BilinearField (gradients taken cell-wise constant).  Returns the full
    nodal vector with zeros on the Dirichlet boundary.
    """
    if isinstance(w, BilinearField):
        def value_grad(X, Y):
            return w.eval_with_grad(X, Y, cellwise_const_grad=True)
    elif callable(w):
        if grad is None:
            raise ValueError("callable input needs grad=(wx, wy)")
        wx, wy = grad

        def value_grad(X, Y):
            Xb, Yb = np.broadcast_arrays(X, Y)
            return w(Xb, Yb), wx(Xb, Yb), wy(Xb, Yb)
    else:
        raise TypeError("w must be callable or a BilinearField")

    n = mesh.base.n_cells
    nx = mesh.nx
    h = mesh.base.h
    xn = mesh.base.nodes
    yn = mesh.partition.nodes
    h_node = _node_supports(mesh, moll)
    out = np.zeros(mesh.n_nodes)
    for j in range(mesh.partition.M):
        vy = yn[j]
        ys = vy + moll.r_Y * h_node[j] * moll.t2
        for i in range(1, n):
            vx = xn[i]
            xs = vx + moll.r * h * moll.t1
            X = xs[:, None]
            Y = np.broadcast_to(ys[None, :], (len(xs), len(ys)))
            val, gx, gy = value_grad(X, Y)
            taylor = val + gx * (vx - X) + gy * (vy - Y)
            out[j * nx + i] = moll.w1 @ taylor @ moll.w2
    return out


def pi_interp(w, mesh, moll, grad=None):
    """Positivity-preserving interpolant: r_interp on the trace row,
    l_interp at the remaining free nodes, zero on the Dirichlet boundary."""
    out = l_interp(w, mesh, moll, grad=grad)
    if isinstance(w, BilinearField):
        trace_in = w
    elif callable(w):
        def trace_in(x):
            return w(x, np.zeros_like(x))
    else:
        trace_in = w
    out[mesh.trace_set] = r_interp(trace_in, mesh.base, moll)
    return out
