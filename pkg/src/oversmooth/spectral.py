"""Spectrum of the augmented Laplacian and the constants derived from it."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateSpectrumError, NumericError, ParameterError, ShapeError
from .graph import OperatorKind, OperatorMatrix

ZERO_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ascending eigenvalues with unit eigenvectors stored column-wise."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    zero_tol: float = ZERO_TOL

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    @property
    def n_zero(self) -> int:
        return int(np.sum(self.eigenvalues <= self.zero_tol))

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T

    def coefficients(self, f: np.ndarray) -> np.ndarray:
        """Expansion coefficients ``<f, v_i>`` (rows index eigenvectors)."""
        return self.eigenvectors.T @ f

    def check(self, op: OperatorMatrix, atol_orth: float = 1e-8, atol_res: float = 1e-7) -> None:
        """Raise :class:`NumericError` if any Spectrum invariant fails."""
        v = self.eigenvectors
        gram_err = np.abs(v.T @ v - np.eye(self.n)).max()
        if gram_err > atol_orth:
            raise NumericError(f"eigenvectors not orthonormal: max |V'V - I| = {gram_err:.3e}")
        res = np.linalg.norm(op.matrix @ v - v * self.eigenvalues, axis=0).max()
        if res > atol_res:
            raise NumericError(f"eigen-residual {res:.3e} exceeds {atol_res}")
        if self.eigenvalues[0] < -self.zero_tol or self.eigenvalues[-1] >= 2.0:
            raise NumericError(
                f"eigenvalues outside [0, 2): [{self.eigenvalues[0]}, {self.eigenvalues[-1]}]")


def _fix_signs(v: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of each column made positive; argmax picks the first on ties
    idx = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return v * signs


def eigendecompose(op: OperatorMatrix, zero_tol: float = ZERO_TOL) -> Spectrum:
    """Full symmetric eigendecomposition with a fixed eigenvector sign convention."""
    if op.kind is not OperatorKind.AUGMENTED_LAPLACIAN:
        raise ParameterError(f"expected the augmented Laplacian, got {op.kind.value}")
    try:
        w, v = np.linalg.eigh(op.matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"symmetric eigensolver did not converge for N={op.n}: {exc}") from exc
    w.setflags(write=False)
    v = _fix_signs(v)
    v.setflags(write=False)
    return Spectrum(w, v, zero_tol)


def eigenvalues(op: OperatorMatrix) -> np.ndarray:
    """Eigenvalues only; cheaper than :func:`eigendecompose` for large graphs."""
    try:
        return np.linalg.eigvalsh(op.matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"symmetric eigensolver did not converge for N={op.n}: {exc}") from exc


@dataclass(frozen=True)
class ContractionFactors:
    """Per-step contraction of the propagation operator on Dirichlet energy.

    ``paper_factor`` is ``(1 - lambda)^2`` with ``lambda`` the smallest nonzero
    eigenvalue. It bounds the contraction only when every nonzero eigenvalue
    lies in ``[lambda, 2 - lambda]``. ``safe_factor`` maximizes
    ``(1 - lambda_i)^2`` over all nonzero eigenvalues and always bounds it.
    """

    lambda_smallest_nonzero: float
    lambda_max: float
    paper_factor: float
    safe_factor: float

    @property
    def coincide(self) -> bool:
        return self.lambda_max <= 2.0 - self.lambda_smallest_nonzero


def contraction_factors(s: Spectrum) -> ContractionFactors:
    return factors_from_eigenvalues(s.eigenvalues, s.zero_tol)


def factors_from_eigenvalues(eigenvalues: np.ndarray, zero_tol: float = ZERO_TOL) -> ContractionFactors:
    nonzero = eigenvalues[eigenvalues > zero_tol]
    if len(nonzero) == 0:
        raise DegenerateSpectrumError(
            f"all {len(eigenvalues)} eigenvalues are below zero_tol={zero_tol}; graph has no edges")
    lam = float(nonzero.min())
    factors = (1.0 - nonzero) ** 2
    return ContractionFactors(lam, float(nonzero.max()), (1.0 - lam) ** 2, float(factors.max()))


def spectral_norm_squared(w, rtol: float = 1e-10, max_iter: int = 10000) -> float:
    """Squared largest singular value of ``w`` by power iteration.

    Iterates on the smaller of ``w.T @ w`` and ``w @ w.T``. Converged when the
    Rayleigh quotient changes by at most ``rtol`` relative between steps.
    """
    w = np.atleast_2d(np.asarray(w, dtype=float))
    if w.size == 0:
        raise ShapeError("spectral norm of an empty matrix")
    gram = w.T @ w if w.shape[1] <= w.shape[0] else w @ w.T
    if not np.any(gram):
        return 0.0
    # fixed start vector keeps the result deterministic
    x = np.random.default_rng(0x5EED).standard_normal(gram.shape[0])
    x /= np.linalg.norm(x)
    mu = float(x @ gram @ x)
    for _ in range(max_iter):
        y = gram @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        x = y / norm
        mu_new = float(x @ gram @ x)
        if abs(mu_new - mu) <= rtol * abs(mu_new):
            return mu_new
        mu = mu_new
    residual = np.linalg.norm(gram @ x - mu * x)
    raise NumericError(
        f"power iteration hit {max_iter} iterations; estimate {mu:.12g}, residual {residual:.3e}")


def low_eig_mix(s: Spectrum, t: int, seed, coefficients: np.ndarray | None = None) -> np.ndarray:
    """``sum_{i<T} c_i v_i`` over the ``T`` lowest eigenvectors, ``c_i ~ U(0, 1)``.

    Returns an ``(N, 1)`` signal. Pass ``coefficients`` to reuse a draw.
    """
    if not 1 <= t <= s.n:
        raise ParameterError(f"T must lie in [1, {s.n}], got {t}")
    if coefficients is None:
        coefficients = mix_coefficients(t, seed)
    return s.eigenvectors[:, :t] @ np.asarray(coefficients, dtype=float).reshape(t, 1)


def mix_coefficients(t: int, seed) -> np.ndarray:
    return np.random.default_rng(seed).uniform(0.0, 1.0, size=t)


def write_spectrum_csv(s: Spectrum, path, vectors: bool = False) -> None:
    # with vectors, row i also carries node i's entry of every eigenvector
    with Path(path).open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        header = ["index", "eigenvalue"]
        if vectors:
            header += [f"v{i}" for i in range(s.n)]
        out.writerow(header)
        for i, lam in enumerate(s.eigenvalues):
            row = [i, repr(float(lam))]
            if vectors:
                row += [repr(float(x)) for x in s.eigenvectors[i, :]]
            out.writerow(row)
