"""Evaluation of piecewise-bilinear cylinder fields and weighted norms.

Quadrature in y uses a Gauss-Jacobi rule on the first graded layer, where the
weight y**alpha is singular or degenerate, and mapped Gauss-Legendre above it.
"""

from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi


@lru_cache(maxsize=64)
def _gl(n):
    return leggauss(n)


def gl_rule(a, b, n):
    """Gauss-Legendre nodes/weights on (a, b)."""
    x, w = _gl(n)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


@lru_cache(maxsize=64)
def _jacobi(n, alpha):
    # weight (1-t)^0 (1+t)^alpha on (-1, 1)
    return roots_jacobi(n, 0.0, alpha)


def weighted_y_rule(c, d, alpha, n):
    """Nodes and weights for int_c^d y**alpha f(y) dy, weight absorbed.

    On a cell touching y = 0 the weight is handled exactly by a Gauss-Jacobi
    rule; away from zero it is smooth and mapped Gauss-Legendre suffices.
    """
    if c == 0.0:
        t, w = _jacobi(n, alpha)
        h = d - c
        y = (t + 1.0) / 2.0 * h
        return y, w * (h / 2.0) ** (alpha + 1.0)
    y, w = gl_rule(c, d, n)
    return y, w * y ** alpha


class BilinearField:
    """Piecewise-bilinear function on a TensorMesh given by full nodal values."""

    def __init__(self, mesh, values):
        self.mesh = mesh
        self.values = np.asarray(values, dtype=float)
        if len(self.values) != mesh.n_nodes:
            raise ValueError("nodal vector length does not match mesh")

    @classmethod
    def from_free(cls, mesh, free_values):
        full = np.zeros(mesh.n_nodes)
        full[mesh.free_set] = free_values
        return cls(mesh, full)

    def trace_values(self):
        """Nodal trace at y = 0 including the boundary zeros."""
        return self.values[: self.mesh.nx]

    def _locate(self, x, y):
        xn = self.mesh.base.nodes
        yn = self.mesh.partition.nodes
        i = np.clip(np.searchsorted(xn, x, side="right") - 1, 0, len(xn) - 2)
        j = np.clip(np.searchsorted(yn, y, side="right") - 1, 0, len(yn) - 2)
        return i, j

    def eval(self, x, y):
        val, _, _ = self.eval_with_grad(x, y)
        return val

    def eval_with_grad(self, x, y, cellwise_const_grad=False):
        """Values and gradients at points; arrays broadcast together.

        With cellwise_const_grad the gradient is frozen at the cell centroid.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x, y = np.broadcast_arrays(x, y)
        i, j = self._locate(x, y)
        xn = self.mesh.base.nodes
        yn = self.mesh.partition.nodes
        nx = self.mesh.nx
        x0 = xn[i]
        y0 = yn[j]
        hx = xn[i + 1] - x0
        hy = yn[j + 1] - y0
        tx = (x - x0) / hx
        ty = (y - y0) / hy
        v = self.values
        v00 = v[j * nx + i]
        v10 = v[j * nx + i + 1]
        v01 = v[(j + 1) * nx + i]
        v11 = v[(j + 1) * nx + i + 1]
        val = (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 \
            + (1 - tx) * ty * v01 + tx * ty * v11
        if cellwise_const_grad:
            tgx = tgy = 0.5
        else:
            tgx, tgy = tx, ty
        gx = ((1 - tgy) * (v10 - v00) + tgy * (v11 - v01)) / hx
        gy = ((1 - tgx) * (v01 - v00) + tgx * (v11 - v10)) / hy
        return val, gx, gy


def weighted_grad_err_sq(mesh, params, ref_grad, field, nq=8):
    """int_{cylinder} y**alpha |grad(ref) - grad(field)|^2, cell by cell.

    ref_grad maps point arrays (X, Y) to (gx, gy); pass None for the weighted
    seminorm of the field itself.  field is a BilinearField on mesh.
    """
    xn = mesh.base.nodes
    yn = mesh.partition.nodes
    nx = mesh.nx
    n = mesh.base.n_cells
    v = field.values
    xq_ref, xw_ref = _gl(nq)
    total = 0.0
    for j in range(mesh.partition.M):
        c, d = yn[j], yn[j + 1]
        hy = d - c
        yq, yw = weighted_y_rule(c, d, params.alpha, nq)
        ty = (yq - c) / hy
        for i in range(n):
            a, b = xn[i], xn[i + 1]
            hx = b - a
            xq = 0.5 * (b - a) * xq_ref + 0.5 * (a + b)
            xw = 0.5 * (b - a) * xw_ref
            v00 = v[j * nx + i]
            v10 = v[j * nx + i + 1]
            v01 = v[(j + 1) * nx + i]
            v11 = v[(j + 1) * nx + i + 1]
            tx = (xq - a) / hx
            X = xq[:, None]
            Yq = yq[None, :]
            gx = ((1 - ty)[None, :] * (v10 - v00) + ty[None, :] * (v11 - v01)) / hx
            gy = ((1 - tx)[:, None] * (v01 - v00) + tx[:, None] * (v11 - v10)) / hy
            if ref_grad is None:
                integrand = gx ** 2 + gy ** 2      # broadcasts to (nq, nq)
            else:
                rx, ry = ref_grad(X, Yq)
                integrand = (rx - gx) ** 2 + (ry - gy) ** 2
            total += xw @ integrand @ yw
    return float(total)


def weighted_grad_err_sq_fields(mesh, params, fine_field, field, nq=8):
    """Same as weighted_grad_err_sq with the reference a (finer-mesh) field.

    The fine field is evaluated at the coarse quadrature points; its y-kinks
    inside coarse cells make this a controlled quadrature crime at the
    reference's resolution.
    """

    def ref_grad(X, Y):
        Xb, Yb = np.broadcast_arrays(X, Y)
        _, gx, gy = fine_field.eval_with_grad(Xb, Yb)
        return gx, gy

    return weighted_grad_err_sq(mesh, params, ref_grad, field, nq=nq)


def trace_l2_diff_sq(base, vals, ref, nq=6, subdiv=1):
    """int_Omega (P1(vals) - ref)^2 with ref a callable or fine P1 pair.

    vals holds the full nodal trace (endpoints included).  ref is either a
    vectorized callable, or a tuple (fine_base, fine_vals); integer nesting of
    the fine mesh makes the quadrature exact for P1 differences.
    """
    xn = base.nodes
    n = base.n_cells
    vals = np.asarray(vals, dtype=float)
    if isinstance(ref, tuple):
        fine_base, fine_vals = ref
        fine_vals = np.asarray(fine_vals, dtype=float)
        ratio = fine_base.n_cells // n
        subdiv = max(subdiv, ratio, 1)

        def ref_fn(x):
            fi = np.clip(
                np.searchsorted(fine_base.nodes, x, side="right") - 1,
                0,
                fine_base.n_cells - 1,
            )
            t = (x - fine_base.nodes[fi]) / fine_base.h
            return (1 - t) * fine_vals[fi] + t * fine_vals[fi + 1]

    else:
        ref_fn = ref
    total = 0.0
    for i in range(n):
        edges = np.linspace(xn[i], xn[i + 1], subdiv + 1)
        for k in range(subdiv):
            q, w = gl_rule(edges[k], edges[k + 1], nq)
            t = (q - xn[i]) / base.h
            p1 = (1 - t) * vals[i] + t * vals[i + 1]
            total += np.sum(w * (p1 - ref_fn(q)) ** 2)
    return float(total)
