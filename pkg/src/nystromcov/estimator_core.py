"""Covariance estimators built from row subsets of the data matrix.

The central object is the subset estimator (1/n) X P X^H, where P projects
onto the row space of the selected k rows of X. It reproduces the sample
covariance on the selected rows/columns exactly and shrinks the rest, and it
admits a factored eigendecomposition that never forms the p x p matrix:
a thin SVD of the k x n subset block followed by a thin SVD of a p x r
factor, O(p*n*k + p*k^2) for fixed k.

Also here: the plain sample covariance and the Ledoit-Wolf shrinkage
estimator (shrinkage toward the scaled identity), used as baselines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import as_generator

DEFAULT_RTOL = 1e-12


def _as_data_matrix(x) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise ValueError("data matrix must be 2-D with at least one row and column")
    if not np.all(np.isfinite(x)):
        raise ValueError("data matrix contains non-finite entries")
    return x


def _check_subset(indices, p: int) -> np.ndarray:
    idx = np.atleast_1d(np.asarray(indices, dtype=np.intp))
    if idx.ndim != 1 or idx.size < 1:
        raise ValueError("index subset must be a nonempty 1-D sequence")
    if idx.min() < 0 or idx.max() >= p:
        raise ValueError(f"subset indices must lie in [0, {p})")
    if np.unique(idx).size != idx.size:
        raise ValueError("subset indices must be distinct")
    return idx


def complement_indices(indices, p: int) -> np.ndarray:
    """Indices in [0, p) not present in `indices`, ascending."""
    idx = _check_subset(indices, p)
    mask = np.ones(p, dtype=bool)
    mask[idx] = False
    return np.nonzero(mask)[0]


def _numerical_rank(singular_values: np.ndarray, shape, rtol: float) -> int:
    if singular_values.size == 0 or singular_values[0] <= 0:
        return 0
    cutoff = rtol * singular_values[0] * max(shape)
    return int(np.count_nonzero(singular_values > cutoff))


def sample_covariance(x) -> np.ndarray:
    """(1/n) X X^H, positive semidefinite by construction."""
    x = _as_data_matrix(x)
    n = x.shape[1]
    s = x @ x.conj().T / n
    return (s + s.conj().T) / 2


def schur_complement(q, indices, rtol: float = DEFAULT_RTOL) -> np.ndarray:
    """Q_J - Q_IJ^H pinv(Q_I) Q_IJ for the complement J of the subset.

    The pseudoinverse handles a singular principal block, which occurs for
    rank-deficient PSD inputs.
    """
    q = np.asarray(q)
    p = q.shape[0]
    if q.ndim != 2 or q.shape[1] != p:
        raise ValueError("expected a square matrix")
    idx = _check_subset(indices, p)
    jdx = complement_indices(idx, p)
    q_i = q[np.ix_(idx, idx)]
    q_ij = q[np.ix_(idx, jdx)]
    q_j = q[np.ix_(jdx, jdx)]
    out = q_j - q_ij.conj().T @ np.linalg.pinv(q_i, rcond=rtol * max(1, len(idx)), hermitian=True) @ q_ij
    return (out + out.conj().T) / 2


def nystrom_projection(x, indices, rtol: float = DEFAULT_RTOL) -> np.ndarray:
    """Orthogonal projector (n x n) onto the row space of the selected rows."""
    x = _as_data_matrix(x)
    idx = _check_subset(indices, x.shape[0])
    y = x[idx]
    _, sy, vh = np.linalg.svd(y, full_matrices=False)
    r = _numerical_rank(sy, y.shape, rtol)
    vr = vh[:r].conj().T
    proj = vr @ vr.conj().T
    return (proj + proj.conj().T) / 2


@dataclass(frozen=True)
class NystromEstimate:
    """Factored form of the subset covariance estimate.

    factor_w has shape (p, rank) and densifies as W W^H. When produced by
    `nystrom_eig`, `eigenvalues` (nonincreasing, >= 0) and the orthonormal
    `eigenvectors` columns are populated and factor_w = U diag(sqrt(eig)).
    """

    subset: np.ndarray
    factor_w: np.ndarray
    rank: int
    eigenvalues: np.ndarray | None = None
    eigenvectors: np.ndarray | None = None

    def dense(self) -> np.ndarray:
        w = self.factor_w
        out = w @ w.conj().T
        return (out + out.conj().T) / 2


def densify(estimate: NystromEstimate) -> np.ndarray:
    """Explicit p x p form of a factored estimate."""
    return estimate.dense()


def _subset_factor(x: np.ndarray, idx: np.ndarray, rtol: float):
    """W with W W^H = (1/n) X P X^H, built from a thin SVD of the subset rows."""
    p, n = x.shape
    y = x[idx]
    uy, sy, vyh = np.linalg.svd(y, full_matrices=False)
    r = _numerical_rank(sy, y.shape, rtol)
    w = np.empty((p, r), dtype=np.promote_types(x.dtype, np.float64))
    w[idx] = uy[:, :r] * sy[:r] / np.sqrt(n)
    jdx = complement_indices(idx, p)
    if jdx.size:
        w[jdx] = x[jdx] @ vyh[:r].conj().T / np.sqrt(n)
    return w


def nystrom_estimate(x, indices, rtol: float = DEFAULT_RTOL) -> NystromEstimate:
    """Factored subset estimate of the covariance; densify() for the matrix."""
    x = _as_data_matrix(x)
    idx = _check_subset(indices, x.shape[0])
    w = _subset_factor(x, idx, rtol)
    return NystromEstimate(subset=idx, factor_w=w, rank=w.shape[1])


def nystrom_eig(x, indices, rtol: float = DEFAULT_RTOL) -> NystromEstimate:
    """Subset estimate with its eigendecomposition, without densifying.

    Thin SVD of the p x r factor W gives eigenvalues (squared singular
    values) and eigenvectors of W W^H directly.
    """
    x = _as_data_matrix(x)
    idx = _check_subset(indices, x.shape[0])
    w = _subset_factor(x, idx, rtol)
    if w.shape[1] == 0:
        return NystromEstimate(
            subset=idx,
            factor_w=w,
            rank=0,
            eigenvalues=np.zeros(0),
            eigenvectors=np.zeros((x.shape[0], 0), dtype=w.dtype),
        )
    uw, sw, _ = np.linalg.svd(w, full_matrices=False)
    r = _numerical_rank(sw, w.shape, rtol)
    lam = sw[:r] ** 2
    u = uw[:, :r]
    return NystromEstimate(
        subset=idx,
        factor_w=u * sw[:r],
        rank=r,
        eigenvalues=lam,
        eigenvectors=u,
    )


def ledoit_wolf_estimate(x) -> np.ndarray:
    """Shrinkage of the sample covariance toward the scaled identity.

    Plug-in shrinkage intensity b^2/d^2 with m = tr(S)/p,
    d^2 = ||S - m I||_F^2, and b^2 = min(d^2, (1/n^2) sum_t ||x_t x_t^H - S||_F^2).
    The sum over samples reduces to sum_t ||x_t||^4 / n^2 - ||S||_F^2 / n.
    """
    x = _as_data_matrix(x)
    p, n = x.shape
    if n < 2:
        raise ValueError("shrinkage estimate needs at least two samples")
    s = sample_covariance(x)
    m = np.trace(s).real / p
    d2 = np.linalg.norm(s - m * np.eye(p), "fro") ** 2
    if d2 == 0.0:
        return s
    norms4 = (np.abs(x) ** 2).sum(axis=0) ** 2
    b2 = norms4.sum() / n**2 - np.linalg.norm(s, "fro") ** 2 / n
    b2 = min(max(b2, 0.0), d2)
    weight = b2 / d2
    return weight * m * np.eye(p) + (1 - weight) * s


def uniform_subset(p: int, k: int, seed=None) -> np.ndarray:
    """k distinct indices drawn uniformly from [0, p), sorted ascending."""
    p = int(p)
    k = int(k)
    if p < 1 or k < 1 or k > p:
        raise ValueError("subset size must satisfy 1 <= k <= p")
    rng = as_generator(seed)
    return np.sort(rng.choice(p, size=k, replace=False))
