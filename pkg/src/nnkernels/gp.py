"""Exact Gaussian-process regression on precomputed kernel matrices."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .activations import Activation
from .data import Dataset, split
from .deep import kernel_matrices_by_depth

_VAR_CLAMP = -1e-10


@dataclass
class GpFit:
    """Cholesky factorization of K + noise_var * I with solved weights."""

    chol_lower: np.ndarray
    alpha: np.ndarray
    noise_var: float
    log_det: float
    y: np.ndarray
    n_var_clamped: int = 0


def fit(K, y, noise_var: float) -> GpFit:
    """Factorize K + noise_var * I and solve for the weights."""
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] != y.shape[0]:
        raise ValueError("K must be square and match y")
    if not np.isfinite(K).all():
        raise ValueError("K contains non-finite entries")
    if not np.allclose(K, K.T, rtol=0.0, atol=1e-10 * max(1.0, np.abs(K).max())):
        raise ValueError("K must be symmetric")
    if noise_var <= 0.0:
        raise ValueError("noise variance must be strictly positive")
    A = K + noise_var * np.eye(K.shape[0])
    try:
        L = cholesky(A, lower=True)
    except np.linalg.LinAlgError:
        jitter = 1e-8 * np.trace(K) / K.shape[0]
        try:
            L = cholesky(A + jitter * np.eye(K.shape[0]), lower=True)
        except np.linalg.LinAlgError as exc:
            raise ArithmeticError("factorization failed after one jitter retry") from exc
    alpha = cho_solve((L, True), y)
    log_det = 2.0 * float(np.log(np.diag(L)).sum())
    return GpFit(L, alpha, float(noise_var), log_det, y.copy())


def predict(gp: GpFit, K_star, K_star_star_diag):
    """Posterior mean and variance at test points.

    mean = K* alpha; var = diag(K**) - row quadratic form. Variances
    above the -1e-10 tolerance are clamped to zero (counted on the fit
    object); anything lower raises, signalling an asymmetric kernel.
    """
    K_star = np.atleast_2d(np.asarray(K_star, dtype=float))
    k_diag = np.asarray(K_star_star_diag, dtype=float)
    if K_star.shape[1] != gp.alpha.shape[0] or K_star.shape[0] != k_diag.shape[0]:
        raise ValueError("shape mismatch between K_star and the fit")
    mean = K_star @ gp.alpha
    v = solve_triangular(gp.chol_lower, K_star.T, lower=True)
    var = k_diag - np.einsum("ij,ij->j", v, v)
    if (var < _VAR_CLAMP).any():
        raise ArithmeticError(f"predictive variance below {_VAR_CLAMP}")
    clamped = var < 0.0
    if clamped.any():
        gp.n_var_clamped += int(clamped.sum())
        var = np.where(clamped, 0.0, var)
    return mean, var


def nll(gp: GpFit, y) -> float:
    """Negative log marginal likelihood of targets under the fit."""
    y = np.asarray(y, dtype=float)
    alpha = cho_solve((gp.chol_lower, True), y)
    n = y.shape[0]
    return float(0.5 * y @ alpha + 0.5 * gp.log_det + 0.5 * n * np.log(2.0 * np.pi))


def rmse(predicted, target) -> float:
    predicted = np.asarray(predicted, dtype=float)
    target = np.asarray(target, dtype=float)
    return float(np.sqrt(np.mean((predicted - target) ** 2)))


@dataclass(frozen=True)
class GridResult:
    activation: str
    depth: int
    sigma_w2: float
    sigma_b2: float
    noise_var: float
    split_id: int
    train_rmse: float
    test_rmse: float
    nll: float


GRID_CSV_COLUMNS = ("activation", "depth", "sigma_w2", "sigma_b2", "noise_var",
                    "split_id", "train_rmse", "test_rmse", "nll")


def _max_threads() -> int:
    try:
        return max(1, int(os.environ.get("NK_THREADS", "1")))
    except ValueError:
        return 1


def _grid_one_sigma(act, X, y, sigma_w2, sigma_b2, depths, noise_var, splits):
    rows = []
    for depth, K in kernel_matrices_by_depth(act, X, sigma_w2, sigma_b2, depths):
        for split_id, (tr, te) in enumerate(splits):
            gp = fit(K[np.ix_(tr, tr)], y[tr], noise_var)
            mean_tr, _ = predict(gp, K[np.ix_(tr, tr)], np.diag(K)[tr])
            mean_te, _ = predict(gp, K[np.ix_(te, tr)], np.diag(K)[te])
            rows.append(GridResult(act.kind, depth, sigma_w2, sigma_b2, noise_var,
                                   split_id, rmse(mean_tr, y[tr]),
                                   rmse(mean_te, y[te]), nll(gp, y[tr])))
    return rows


def grid_search(dataset: Dataset, act: Activation, depth_range, sigma_w2_range,
                noise_var: float, metric: str = "test_rmse", n_splits: int = 5,
                train_frac: float = 0.8, seed: int = 0, sigma_b2: float = 0.0):
    """Depth x weight-variance grid search with shuffled splits.

    Returns (ranked, rows): ``rows`` holds one GridResult per
    (configuration, split); ``ranked`` aggregates the chosen metric
    over splits, sorted by (metric, depth, sigma_w2) so ties resolve to
    the smallest depth, then the smallest weight variance.
    """
    if dataset.n < 4:
        raise ValueError("dataset too small for a grid search (need >= 4 points)")
    if metric not in ("test_rmse", "train_rmse", "nll"):
        raise ValueError(f"unknown metric {metric!r}")
    depths = sorted(set(int(d) for d in depth_range))
    sigmas = [float(s) for s in sigma_w2_range]
    if not depths or not sigmas:
        raise ValueError("empty grid")
    idx_splits = []
    for i in range(n_splits):
        tr, te = split(dataset, train_frac, seed + i)
        idx_splits.append((tr.indices, te.indices))

    threads = _max_threads()
    if threads > 1 and len(sigmas) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(
                lambda sw: _grid_one_sigma(act, dataset.X, dataset.y, sw, sigma_b2,
                                           depths, noise_var, idx_splits),
                sigmas))
    else:
        chunks = [_grid_one_sigma(act, dataset.X, dataset.y, sw, sigma_b2,
                                  depths, noise_var, idx_splits)
                  for sw in sigmas]
    rows = [r for chunk in chunks for r in chunk]

    agg = {}
    for r in rows:
        agg.setdefault((r.depth, r.sigma_w2), []).append(getattr(r, metric))
    ranked = sorted(
        ({"depth": d, "sigma_w2": s, metric: float(np.mean(vals)),
          "n_splits": len(vals)} for (d, s), vals in agg.items()),
        key=lambda rec: (rec[metric], rec["depth"], rec["sigma_w2"]),
    )
    return ranked, rows
