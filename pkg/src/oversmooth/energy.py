"""Dirichlet energy of graph signals and the Rayleigh quotient."""

from __future__ import annotations

import numpy as np

from .errors import NumericError, ParameterError, ShapeError, UndefinedQuotientError
from .graph import Graph, OperatorKind, OperatorMatrix

ROUNDOFF_TOL = 1e-9


def as_signal(x, n: int | None = None) -> np.ndarray:
    """View ``x`` as an ``(N, C)`` float matrix; 1-D input becomes one column."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ShapeError(f"signal must be 1-D or 2-D, got shape {x.shape}")
    if n is not None and x.shape[0] != n:
        raise ShapeError(f"signal has {x.shape[0]} rows, graph has {n} nodes")
    if not np.all(np.isfinite(x)):
        raise ParameterError("signal entries must be finite")
    return x


def _laplacian(op) -> np.ndarray:
    if isinstance(op, OperatorMatrix):
        if op.kind is not OperatorKind.AUGMENTED_LAPLACIAN:
            raise ParameterError(f"Dirichlet energy needs the augmented Laplacian, got {op.kind.value}")
        return op.matrix
    return np.asarray(op, dtype=float)


def dirichlet_energy_quadratic(x, op) -> float:
    """``tr(X^T L X)``; round-off negatives down to ``-1e-9`` scale clamp to zero."""
    lap = _laplacian(op)
    x = as_signal(x, lap.shape[0])
    e = float(np.sum(x * (lap @ x)))
    if e < 0.0:
        if e < -ROUNDOFF_TOL * max(1.0, float(np.sum(x * x))):
            raise NumericError(f"quadratic form is negative beyond round-off: {e:.3e}")
        e = 0.0
    return e


def dirichlet_energy_edgesum(x, g: Graph) -> float:
    """Sum over edges of ``w_ij |x_i/sqrt(1+d_i) - x_j/sqrt(1+d_j)|^2``.

    Each unordered edge is visited once, which matches the half-sum over
    ordered pairs. Non-negative by construction.
    """
    x = as_signal(x, g.n_nodes)
    if g.n_edges == 0:
        return 0.0
    y = x / np.sqrt(1.0 + g.degrees)[:, None]
    diff = y[g.src] - y[g.dst]
    return float(np.dot(g.weight, np.einsum("ij,ij->i", diff, diff)))


def rayleigh_quotient(x, op) -> float:
    """Energy divided by the squared Frobenius norm of the signal."""
    x = as_signal(x)
    norm2 = float(np.sum(x * x))
    if norm2 == 0.0:
        raise UndefinedQuotientError("Rayleigh quotient of the zero signal")
    return dirichlet_energy_quadratic(x, op) / norm2
