"""Gaussian conditioning algebra shared by imputation and witness tests.

For elements with a finite orthonormal expansion the prior covariance is
B' D B (B the (J, G) basis matrix, D = diag of coefficient variances), and
conditioning on exact observations at a subset of grid points is, with the
same ridge as the grid formulas, the Bayesian linear model

    y = U c + noise(0, lambda I),   c ~ N(0, D),   U = rows of B' at the
                                                    observed points,

whose posterior is N(C U' y / lambda, C) with C = (D^-1 + U'U / lambda)^-1.
The functions below pick between two algebraically identical (Woodbury)
forms by conditioning:

* primal, when n_obs >= J: the scaled J x J system P = lambda D^-1 + U'U,
  mean = P^-1 U' y, C = lambda P^-1.  U'U is then generically full rank,
  so kappa(P) stays moderate and no intermediate of size 1/lambda appears.
* dual, when n_obs < J: the n_obs x n_obs kernel system
  M = U D U' + lambda I, mean = D U' M^-1 y, C = D - D U' M^-1 U D.
  M is the well-conditioned one in the underdetermined regime, where the
  primal P would have near-null directions of size lambda / D_jj.

Padding y with zeros at missing points leaves the posterior unchanged, so
the batch form below works on full-length masked vectors.  The grid-space
conditional mean and Schur covariance are exactly B'_miss applied to these
coefficient-space quantities; tests verify the two routes agree.
"""

from __future__ import annotations

import numpy as np

RIDGE_FACTOR = 1e-10

__all__ = [
    "RIDGE_FACTOR",
    "kernel_ridge",
    "coefficient_ridge",
    "coefficient_posterior",
    "coefficient_posterior_batch",
    "psd_factor",
    "cholesky_batch",
]


def kernel_ridge(prior_values: np.ndarray) -> float:
    """Ridge added to the observed block: RIDGE_FACTOR * trace(K) / G."""
    g = prior_values.shape[0]
    return RIDGE_FACTOR * float(np.trace(prior_values)) / g


def coefficient_ridge(basis_matrix: np.ndarray, prior_var: np.ndarray) -> float:
    """Same ridge computed from the expansion, avoiding the G x G kernel."""
    diag = (prior_var[:, None] * basis_matrix * basis_matrix).sum(axis=0)
    return RIDGE_FACTOR * float(diag.mean())


def coefficient_posterior(
    basis_obs: np.ndarray, prior_var: np.ndarray, y: np.ndarray, lam: float
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and covariance of the coefficients given observations.

    Parameters
    ----------
    basis_obs : ndarray, shape (J, G1)
        Basis values at the observed points.
    prior_var : ndarray, shape (J,)
        Strictly positive prior coefficient variances.
    y : ndarray, shape (G1,)
        Observed element values.
    lam : float
        Ridge (observation noise variance), > 0.
    """
    if np.any(prior_var <= 0.0):
        raise ValueError("prior_var must be strictly positive")
    n_j, n_obs = basis_obs.shape
    if n_obs >= n_j:
        scaled_prec = np.diag(lam / prior_var) + basis_obs @ basis_obs.T
        cov = lam * np.linalg.inv(scaled_prec)
        cov = 0.5 * (cov + cov.T)
        # Solve rather than reuse the inverse: y lies in the range of the
        # observed block, and a backward-stable solve keeps the mean at the
        # scale of the true solution even when scaled_prec is near-singular.
        mean = np.linalg.solve(scaled_prec, basis_obs @ y)
        return mean, cov
    scaled_basis = prior_var[:, None] * basis_obs
    gram = basis_obs.T @ scaled_basis + lam * np.eye(n_obs)
    mean = scaled_basis @ np.linalg.solve(gram, y)
    cov = np.diag(prior_var) - scaled_basis @ np.linalg.solve(gram, scaled_basis.T)
    cov = 0.5 * (cov + cov.T)
    return mean, cov


def coefficient_posterior_batch(
    basis_matrix: np.ndarray,
    masks: np.ndarray,
    values: np.ndarray,
    prior_var: np.ndarray,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized posterior over R (mask, values) pairs.

    Parameters
    ----------
    basis_matrix : ndarray, shape (J, G)
    masks : ndarray, shape (R, G)
        1.0 at observed points, 0.0 at missing points.
    values : ndarray, shape (R, G)
        Element values (entries at missing points are ignored).
    prior_var : ndarray, shape (J,)
    lam : float

    Returns
    -------
    means : ndarray, shape (R, J)
    covs : ndarray, shape (R, J, J)
    """
    if np.any(prior_var <= 0.0):
        raise ValueError("prior_var must be strictly positive")
    n_j = prior_var.size
    n_r, n_g = masks.shape
    means = np.empty((n_r, n_j))
    covs = np.empty((n_r, n_j, n_j))
    primal = masks.sum(axis=1) >= n_j
    if primal.any():
        m_p = masks[primal]
        u = np.einsum("jg,rg->rj", basis_matrix, m_p * values[primal])
        scaled_prec = np.einsum("jg,rg,kg->rjk", basis_matrix, m_p, basis_matrix)
        jdiag = np.arange(n_j)
        scaled_prec[:, jdiag, jdiag] += lam / prior_var
        c_p = lam * np.linalg.inv(scaled_prec)
        covs[primal] = 0.5 * (c_p + np.swapaxes(c_p, 1, 2))
        # Solve rather than reuse the inverse (see coefficient_posterior).
        means[primal] = np.linalg.solve(scaled_prec, u[..., None])[..., 0]
    dual = np.flatnonzero(~primal)
    if dual.size:
        scaled_basis = prior_var[:, None] * basis_matrix
        kernel_full = basis_matrix.T @ scaled_basis
        gdiag = np.arange(n_g)
        prior_diag = np.diag(prior_var)
        # Chunk so the (chunk, G, G) padded dual systems stay small.
        chunk = max(1, 4_000_000 // (n_g * n_g))
        for start in range(0, dual.size, chunk):
            idx = dual[start : start + chunk]
            m_d = masks[idx]
            gram = kernel_full[None] * m_d[:, :, None] * m_d[:, None, :]
            gram[:, gdiag, gdiag] += lam
            rhs = np.concatenate(
                [
                    (m_d * values[idx])[:, :, None],
                    m_d[:, :, None] * scaled_basis.T[None],
                ],
                axis=2,
            )
            sol = np.linalg.solve(gram, rhs)
            means[idx] = np.einsum("jg,rg->rj", scaled_basis, sol[:, :, 0])
            c_d = prior_diag[None] - np.einsum("jg,rgk->rjk", scaled_basis, sol[:, :, 1:])
            covs[idx] = 0.5 * (c_d + np.swapaxes(c_d, 1, 2))
    return means, covs


def psd_factor(mat: np.ndarray, floor_rel: float = 1e-8) -> np.ndarray:
    """Factor L with L L' = mat for a (near-)PSD symmetric matrix.

    Eigenvalues in [-floor_rel * lam_max, 0) are clipped to 0; anything
    lower raises ValueError.  Returns the zero matrix for empty input.
    """
    if mat.size == 0:
        return mat.reshape(mat.shape)
    sym = 0.5 * (mat + mat.T)
    eigval, eigvec = np.linalg.eigh(sym)
    scale = max(float(eigval[-1]), 1.0)
    if eigval[0] < -floor_rel * scale:
        raise ValueError(
            f"matrix is not positive semidefinite: min eigenvalue {eigval[0]:.3e}"
        )
    return eigvec * np.sqrt(np.clip(eigval, 0.0, None))


def cholesky_batch(mats: np.ndarray) -> np.ndarray:
    """Batched Cholesky with one jittered retry for float-level indefiniteness."""
    try:
        return np.linalg.cholesky(mats)
    except np.linalg.LinAlgError:
        j = mats.shape[-1]
        tr = np.trace(mats, axis1=-2, axis2=-1)
        jitter = 1e-12 * np.maximum(tr / j, np.finfo(float).tiny)
        bumped = mats.copy()
        idx = np.arange(j)
        bumped[..., idx, idx] += jitter[..., None]
        return np.linalg.cholesky(bumped)
