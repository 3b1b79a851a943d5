"""Closed-form error analysis of the subset covariance estimator under a
Gaussian model, plus a Monte Carlo harness that checks every formula.

For x_t ~ N(0, Sigma) i.i.d. and a row subset I with invertible Sigma_I, the
estimator reproduces Sigma on the I rows/columns in expectation and shrinks
the complement block toward the conditional covariance; the bias lives
entirely in the complement block and equals a scaled Schur complement. The
Frobenius mean squared error has a closed form as well, along with a lower
bound that is tight at the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._rng import substream
from .estimator_core import _check_subset, complement_indices


@dataclass(frozen=True)
class GroundTruthModel:
    """Known covariance plus the sample/subset sizes of the experiment.

    sigma must be symmetric PSD; operations that need the selected principal
    block to be invertible raise if it is singular. k, when given, pins the
    subset size and is cross-checked against the indices passed to each op.
    """

    sigma: np.ndarray
    n: int
    k: int | None = None

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
            raise ValueError("sigma must be square")
        scale = max(np.abs(sigma).max(), 1.0)
        if np.abs(sigma - sigma.T).max() > 1e-10 * scale:
            raise ValueError("sigma must be symmetric")
        if np.linalg.eigvalsh(sigma).min() < -1e-10 * scale:
            raise ValueError("sigma must be positive semidefinite")
        object.__setattr__(self, "sigma", (sigma + sigma.T) / 2)
        if int(self.n) < 1:
            raise ValueError("sample count must be positive")
        object.__setattr__(self, "n", int(self.n))

    @property
    def p(self) -> int:
        return self.sigma.shape[0]


@dataclass(frozen=True)
class ErrorReport:
    """Analytic vs empirical bias and MSE from a Monte Carlo run.

    standard_error is the (jackknife) standard error of the empirical MSE;
    bias_standard_error holds the per-entry standard errors of the mean
    estimate, for entrywise bias comparisons.
    """

    analytic_bias: np.ndarray
    analytic_mse: float
    empirical_bias: np.ndarray
    empirical_mse: float
    trials: int
    standard_error: float
    bias_standard_error: np.ndarray = field(repr=False, default=None)

    def mse_within(self, n_sigmas: float) -> bool:
        return abs(self.empirical_mse - self.analytic_mse) <= n_sigmas * self.standard_error

    def bias_within(self, n_sigmas: float) -> bool:
        dev = np.abs(self.empirical_bias - self.analytic_bias)
        return bool(np.all(dev <= n_sigmas * self.bias_standard_error + 1e-12))


def _subset_blocks(model: GroundTruthModel, indices):
    idx = _check_subset(indices, model.p)
    if model.k is not None and idx.size != model.k:
        raise ValueError(f"subset size {idx.size} disagrees with model k={model.k}")
    if idx.size > model.n:
        raise ValueError("closed forms require subset size <= sample count")
    jdx = complement_indices(idx, model.p)
    sig = model.sigma
    sig_i = sig[np.ix_(idx, idx)]
    sig_ij = sig[np.ix_(idx, jdx)]
    sig_j = sig[np.ix_(jdx, jdx)]
    ev = np.linalg.eigvalsh(sig_i)
    if ev.min() <= 1e-12 * max(ev.max(), 1e-300):
        raise ValueError("principal block of sigma on the subset is singular")
    return idx, jdx, sig_i, sig_ij, sig_j


def _schur(sig_i, sig_ij, sig_j) -> np.ndarray:
    out = sig_j - sig_ij.T @ np.linalg.solve(sig_i, sig_ij)
    return (out + out.T) / 2


def expected_nystrom(model: GroundTruthModel, indices) -> np.ndarray:
    """Expected value of the subset estimate under the Gaussian model."""
    idx, jdx, sig_i, sig_ij, sig_j = _subset_blocks(model, indices)
    k, n = idx.size, model.n
    out = np.empty((model.p, model.p))
    out[np.ix_(idx, idx)] = sig_i
    out[np.ix_(idx, jdx)] = sig_ij
    out[np.ix_(jdx, idx)] = sig_ij.T
    reg = sig_ij.T @ np.linalg.solve(sig_i, sig_ij)
    out[np.ix_(jdx, jdx)] = (k / n) * sig_j + ((n - k) / n) * (reg + reg.T) / 2
    return out


def nystrom_bias(model: GroundTruthModel, indices) -> np.ndarray:
    """Sigma minus the expected estimate: zero outside the complement block,
    ((n-k)/n) times the Schur complement inside it."""
    idx, jdx, sig_i, sig_ij, sig_j = _subset_blocks(model, indices)
    out = np.zeros((model.p, model.p))
    out[np.ix_(jdx, jdx)] = ((model.n - idx.size) / model.n) * _schur(sig_i, sig_ij, sig_j)
    return out


def sample_mse(model: GroundTruthModel) -> float:
    """Frobenius MSE of the plain sample covariance: (tr(Sigma^2) + tr(Sigma)^2)/n."""
    sig = model.sigma
    return float((np.sum(sig * sig) + np.trace(sig) ** 2) / model.n)


def nystrom_mse(model: GroundTruthModel, indices) -> float:
    """Frobenius MSE of the subset estimate.

    Evaluates two equivalent algebraic forms and raises if they disagree,
    guarding against transcription slips in either one.
    """
    idx, jdx, sig_i, sig_ij, sig_j = _subset_blocks(model, indices)
    k, n = idx.size, model.n
    sc = _schur(sig_i, sig_ij, sig_j)
    t_sq = float(np.sum(sc * sc))
    t_tr = float(np.trace(sc) ** 2)
    base = sample_mse(model)
    first = base + ((n - k) / n**2) * ((n - k - 1) * t_sq - t_tr)
    block_mse = (t_sq + t_tr) / (n - k) if n > k else 0.0
    second = base + ((n - k) ** 2 / n**2) * (t_sq - block_mse)
    if abs(first - second) > 1e-9 * max(abs(first), abs(second), 1.0):
        raise ArithmeticError("the two closed forms of the estimator MSE disagree")
    return first


def mse_lower_bound(model: GroundTruthModel, indices) -> float:
    """Lower bound on the subset-estimate MSE; tight when sigma is the identity."""
    idx, jdx, sig_i, sig_ij, sig_j = _subset_blocks(model, indices)
    k, n, p = idx.size, model.n, model.p
    sc = _schur(sig_i, sig_ij, sig_j)
    return sample_mse(model) + ((n - k) * (n - p - 1) / n**2) * float(np.sum(sc * sc))


# trials are generated in fixed-size chunks, one derived substream per chunk,
# so results depend only on (model, indices, trials, seed)
_CHUNK = 2048


def monte_carlo_verify(
    model: GroundTruthModel,
    indices,
    trials: int,
    seed: int = 0,
) -> ErrorReport:
    """Empirical mean/bias/MSE of the subset estimate over Gaussian draws."""
    if trials < 100:
        raise ValueError("need at least 100 trials for meaningful errors")
    idx = _check_subset(indices, model.p)
    try:
        root = np.linalg.cholesky(model.sigma)
    except np.linalg.LinAlgError:
        raise ValueError("Monte Carlo sampling requires a positive definite sigma") from None
    p, n = model.p, model.n

    sum_est = np.zeros((p, p))
    sum_est_sq = np.zeros((p, p))
    sum_err = 0.0
    sum_err_sq = 0.0
    done = 0
    chunk_index = 0
    while done < trials:
        m = min(_CHUNK, trials - done)
        g = substream(seed, chunk_index).standard_normal((m, p, n))
        x = root @ g
        y = x[:, idx, :]
        c = x @ y.transpose(0, 2, 1)
        gram = y @ y.transpose(0, 2, 1)
        est = c @ np.linalg.solve(gram, c.transpose(0, 2, 1)) / n
        sum_est += est.sum(axis=0)
        sum_est_sq += (est**2).sum(axis=0)
        err = ((est - model.sigma) ** 2).sum(axis=(1, 2))
        sum_err += err.sum()
        sum_err_sq += (err**2).sum()
        done += m
        chunk_index += 1

    mean_est = sum_est / trials
    var_est = np.maximum(sum_est_sq / trials - mean_est**2, 0.0)
    bias_se = np.sqrt(var_est / (trials - 1))
    emp_mse = sum_err / trials
    mse_se = float(np.sqrt(max(sum_err_sq / trials - emp_mse**2, 0.0) / (trials - 1)))

    return ErrorReport(
        analytic_bias=nystrom_bias(model, idx),
        analytic_mse=nystrom_mse(model, idx),
        empirical_bias=model.sigma - mean_est,
        empirical_mse=float(emp_mse),
        trials=int(trials),
        standard_error=mse_se,
        bias_standard_error=bias_se,
    )
