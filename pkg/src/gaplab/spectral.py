"""Symmetric eigendecomposition, gap statistics, minor decomposition, and the
exact-identity witnesses (interlacing, gap-reduction inequality) that certify
the whole pipeline numerically.

Eigenvalue index i, removal index k and GapReport.argmin_index are 1-based to
match the usual mathematical convention; array payloads are plain 0-based
numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensembles import DimensionMismatchError, SymmetricMatrix


class EigenSolverError(RuntimeError):
    """The iterative eigensolver failed to converge within its sweep cap."""


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted ascending with matching orthonormal eigenvector columns.

    residual_bound = max_i ||A v_i - lambda_i v_i||_2, recomputed from the
    input matrix, so every Spectrum carries its own certificate.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residual_bound: float

    @property
    def n(self) -> int:
        return self.eigenvalues.size


@dataclass(frozen=True)
class GapReport:
    gaps: np.ndarray
    delta_min: float
    argmin_index: int  # 1-based: the i of delta_i = lambda_{i+1} - lambda_i


@dataclass(frozen=True)
class MinorDecomposition:
    """A split of an n x n symmetric matrix around row/column k (1-based):
    the (n-1) principal minor, the deleted column (without its diagonal
    entry), and the diagonal corner a(k,k)."""

    head: SymmetricMatrix
    column: np.ndarray
    corner: float
    removed_index: int


@dataclass(frozen=True)
class InterlacingReport:
    violations: tuple[tuple[int, float, float, float], ...]  # (i, lower, value, upper)

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class GapReductionWitness:
    lhs: float
    rhs: float
    holds: bool
    i: int
    k: int


def eigendecompose(A: SymmetricMatrix) -> Spectrum:
    """Full eigendecomposition with ascending eigenvalues.

    Eigenvector sign convention: the first coordinate whose magnitude exceeds
    1e-12 of the column max is made positive, so outputs are comparable
    across runs.
    """
    a = A.entries
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigensolver did not converge for n={A.n}: {exc}") from exc
    v = _fix_signs(v)
    resid = a @ v - v * w[np.newaxis, :]
    residual_bound = float(np.linalg.norm(resid, axis=0).max())
    w = w.copy()
    w.setflags(write=False)
    v.setflags(write=False)
    return Spectrum(w, v, residual_bound)


def _fix_signs(v: np.ndarray) -> np.ndarray:
    v = v.copy()
    mags = np.abs(v)
    thresh = 1e-12 * mags.max(axis=0)
    for j in range(v.shape[1]):
        nz = np.nonzero(mags[:, j] > thresh[j])[0]
        lead = nz[0] if nz.size else 0
        if v[lead, j] < 0:
            v[:, j] = -v[:, j]
    return v


def gaps(spec: Spectrum) -> GapReport:
    """Consecutive differences delta_i = lambda_{i+1} - lambda_i and their minimum."""
    if spec.n < 2:
        raise ValueError("gaps need at least two eigenvalues")
    d = np.diff(spec.eigenvalues)
    k = int(np.argmin(d))
    return GapReport(d, float(d[k]), k + 1)


def operator_norm(A: SymmetricMatrix) -> float:
    """max_i |lambda_i|."""
    return float(np.abs(np.linalg.eigvalsh(A.entries)).max())


def trace_identity_error(A: SymmetricMatrix, spec: Spectrum) -> float:
    """Relative error of trace(A) vs sum of eigenvalues (solver conservation check)."""
    t = float(np.trace(A.entries))
    s = float(spec.eigenvalues.sum())
    return abs(t - s) / max(1.0, abs(t))


def gram_deviation(spec: Spectrum) -> float:
    """max |<v_i, v_j> - delta_ij| over the eigenvector columns."""
    g = spec.eigenvectors.T @ spec.eigenvectors
    return float(np.abs(g - np.eye(spec.n)).max())


def minor_decompose(A: SymmetricMatrix, k: int) -> MinorDecomposition:
    """Delete row/column k (1-based). The head keeps exact symmetry."""
    n = A.n
    if n < 2:
        raise ValueError("need n >= 2 to take a minor")
    if not 1 <= k <= n:
        raise IndexError(f"removal index {k} out of range 1..{n}")
    j = k - 1
    keep = [i for i in range(n) if i != j]
    head = SymmetricMatrix(A.entries[np.ix_(keep, keep)])
    column = A.entries[keep, j].copy()
    return MinorDecomposition(head, column, float(A.entries[j, j]), k)


def reassemble(md: MinorDecomposition) -> SymmetricMatrix:
    """Undo minor_decompose exactly."""
    m = md.head.n
    j = md.removed_index - 1
    a = np.zeros((m + 1, m + 1))
    keep = [i for i in range(m + 1) if i != j]
    a[np.ix_(keep, keep)] = md.head.entries
    a[keep, j] = md.column
    a[j, keep] = md.column
    a[j, j] = md.corner
    return SymmetricMatrix(a)


def interlacing_check(full: Spectrum, minor: Spectrum, tol: float) -> InterlacingReport:
    """Check lambda_i(full) - tol <= lambda_i(minor) <= lambda_{i+1}(full) + tol."""
    if minor.n != full.n - 1:
        raise DimensionMismatchError(
            f"minor has {minor.n} eigenvalues, expected {full.n - 1}"
        )
    lam, mu = full.eigenvalues, minor.eigenvalues
    bad = []
    for i in range(minor.n):
        lo, hi = lam[i] - tol, lam[i + 1] + tol
        if not (lo <= mu[i] <= hi):
            bad.append((i + 1, float(lo), float(mu[i]), float(hi)))
    return InterlacingReport(tuple(bad))


def gap_reduction_profile(
    full: Spectrum, minor: Spectrum, column: np.ndarray, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """(lhs_i, rhs_i) for every eigenvalue index i = 1..n-1 at removal index k:
    lhs_i = |v_k(i) * <w_i, x>|, rhs_i = |lambda_i(minor) - lambda_i(full)|.
    The identity behind it forces lhs_i <= rhs_i in exact arithmetic."""
    m = minor.n
    vk = full.eigenvectors[k - 1, :m]          # k-th coordinate of each full eigenvector
    wx = minor.eigenvectors.T @ column          # <w_i, x> for all i at once
    lhs = np.abs(vk * wx)
    rhs = np.abs(minor.eigenvalues - full.eigenvalues[:m])
    return lhs, rhs


def gap_reduction_witness(
    A: SymmetricMatrix, i: int, k: int, tol: float | None = None
) -> GapReductionWitness:
    """Evaluate the gap-reduction inequality for one (i, k), both 1-based."""
    n = A.n
    if n < 2:
        raise ValueError("need n >= 2")
    if not 1 <= i <= n - 1:
        raise IndexError(f"eigenvalue index {i} out of range 1..{n - 1}")
    if not 1 <= k <= n:
        raise IndexError(f"removal index {k} out of range 1..{n}")
    full = eigendecompose(A)
    md = minor_decompose(A, k)
    minor = eigendecompose(md.head)
    if tol is None:
        tol = 1e-8 * max(1.0, float(np.abs(full.eigenvalues).max()))
    lhs, rhs = gap_reduction_profile(full, minor, md.column, k)
    l, r = float(lhs[i - 1]), float(rhs[i - 1])
    return GapReductionWitness(l, r, l <= r + tol, i, k)
