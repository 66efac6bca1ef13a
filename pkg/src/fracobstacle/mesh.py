"""Graded tensor-product meshes of the truncated cylinder (0,L) x (0,Y).

The y-partition is graded toward y = 0 by the power law y_j = (j/M)**gamma * Y,
which compensates the degeneracy of the weight y**alpha.  The grading exponent
must satisfy gamma > 3/(2s) strictly, otherwise the approximation theory of the
first mesh layer is void.  Cells are rectangles K x I; degrees of freedom are
numbered lexicographically with x running fastest.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .spectral import DomainError


@dataclass(frozen=True)
class GradedPartition:
    """Power-law partition of [0, Y] into M cells."""

    Y: float
    M: int
    gamma: float
    nodes: np.ndarray

    @property
    def widths(self):
        return np.diff(self.nodes)

    def neighbor_ratio(self):
        """Largest ratio of adjacent cell widths (shape-regularity diagnostic)."""
        h = self.widths
        if len(h) < 2:
            return 1.0
        return float(np.max(h[1:] / h[:-1]))


def graded_partition(Y, M, gamma, params=None):
    """Build the graded partition; gamma must exceed params.gamma_min strictly."""
    if Y < 1.0:
        raise DomainError(f"truncation height must satisfy Y >= 1, got {Y}")
    if M < 1:
        raise DomainError(f"need at least one cell, got M={M}")
    if params is not None and gamma <= params.gamma_min:
        raise DomainError(
            f"grading exponent {gamma} must exceed 3/(2s) = {params.gamma_min}"
        )
    j = np.arange(M + 1, dtype=float)
    nodes = (j / M) ** gamma * Y
    nodes[0], nodes[-1] = 0.0, Y
    return GradedPartition(Y=float(Y), M=int(M), gamma=float(gamma), nodes=nodes)


@dataclass(frozen=True)
class BaseMesh:
    """Uniform mesh of the interval (0, length)."""

    length: float
    n_cells: int
    nodes: np.ndarray

    @property
    def h(self):
        return self.length / self.n_cells

    @property
    def interior(self):
        return self.nodes[1:-1]


def base_mesh(n_cells, length=1.0):
    """Uniform base mesh; needs n_cells >= 2 so a trace node exists."""
    if n_cells < 2:
        raise DomainError(f"need >= 2 cells for an interior trace node, got {n_cells}")
    if length <= 0:
        raise DomainError(f"length must be positive, got {length}")
    return BaseMesh(
        length=float(length),
        n_cells=int(n_cells),
        nodes=np.linspace(0.0, length, n_cells + 1),
    )


@dataclass
class TensorMesh:
    """Tensor mesh of the cylinder with DOF classification.

    Node ids run lexicographically, id = j*(n+1) + i for x-index i and
    y-index j.  dirichlet_set covers the lateral boundary and the top lid;
    trace_set the interior nodes at y = 0; everything else is interior.
    Free DOFs (interior + trace) carry the compact numbering free_index.
    """

    base: BaseMesh
    partition: GradedPartition
    n_nodes: int = field(init=False)
    n_cells: int = field(init=False)
    dirichlet_set: np.ndarray = field(init=False)
    trace_set: np.ndarray = field(init=False)
    interior_set: np.ndarray = field(init=False)
    free_set: np.ndarray = field(init=False)
    free_index: np.ndarray = field(init=False)

    def __post_init__(self):
        n = self.base.n_cells
        M = self.partition.M
        nx = n + 1
        self.n_nodes = nx * (M + 1)
        self.n_cells = n * M
        xi = np.tile(np.arange(nx), M + 1)
        yj = np.repeat(np.arange(M + 1), nx)
        on_dir = (xi == 0) | (xi == n) | (yj == M)
        on_trace = (yj == 0) & ~on_dir
        self.dirichlet_set = np.where(on_dir)[0]
        self.trace_set = np.where(on_trace)[0]
        self.interior_set = np.where(~on_dir & ~on_trace)[0]
        self.free_set = np.where(~on_dir)[0]
        self.free_index = -np.ones(self.n_nodes, dtype=int)
        self.free_index[self.free_set] = np.arange(len(self.free_set))

    @property
    def nx(self):
        return self.base.n_cells + 1

    def node_id(self, i, j):
        return j * self.nx + i

    def node_xy(self, ids):
        ids = np.asarray(ids)
        return self.base.nodes[ids % self.nx], self.partition.nodes[ids // self.nx]

    @property
    def n_free(self):
        return len(self.free_set)

    @property
    def n_trace(self):
        return len(self.trace_set)

    def trace_free_indices(self):
        """Compact free-DOF indices of the trace nodes, in x order."""
        return self.free_index[self.trace_set]

    def summary(self):
        return {
            "n_base_cells": self.base.n_cells,
            "length": self.base.length,
            "h": self.base.h,
            "M": self.partition.M,
            "gamma": self.partition.gamma,
            "Y": self.partition.Y,
            "n_nodes": self.n_nodes,
            "n_cells": self.n_cells,
            "n_free": self.n_free,
            "n_trace": self.n_trace,
            "neighbor_ratio": self.partition.neighbor_ratio(),
        }

    def summary_json(self):
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def tensor_mesh(base, partition):
    """Tensor-product mesh over base x partition."""
    return TensorMesh(base=base, partition=partition)


def balanced_resolution(n_base_cells, params, margin=0.1):
    """Pick (M, gamma) balancing the two directions: M = n_base_cells,
    gamma = (1 + margin) * gamma_min."""
    if n_base_cells < 2:
        raise DomainError(f"need n_base_cells >= 2, got {n_base_cells}")
    return n_base_cells, params.gamma_min * (1.0 + margin)


def truncation_height(target_error):
    """Heuristic cylinder height Y = 1 + |log(target_error)|.

    The truncation error decays exponentially in Y, so a logarithmic height
    in the requested accuracy suffices; the constant is deliberately lax.
    """
    if not 0.0 < target_error < 1.0:
        raise DomainError(
            f"target error must lie in (0,1), got {target_error}"
        )
    return 1.0 + abs(np.log(target_error))
