"""Derivatives of Hermitian eigenvalue curves along noise-parameter directions.

Given a matrix-valued function eps -> M(eps), the eigenvalue derivatives
are taken as finite differences of the diagonal elements of M in the base
eigenbasis.  At the base point the diagonal element's derivative equals
the eigenvalue derivative (Hellmann-Feynman), which sidesteps the curve
pairing problem entirely and survives near-degenerate spectra where
matching perturbed eigenvalue lists to base labels is ill-conditioned.

Inside degenerate clusters the base eigenvectors are first rotated to
diagonalize the restriction of the perturbation in each parameter
direction, taken in parameter order; this is exact first-order
degenerate perturbation theory whenever the restricted perturbations
commute, and a documented deterministic choice otherwise.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .linalg import dagger

CLUSTER_RTOL = 1e-10


def _sym(m: np.ndarray) -> np.ndarray:
    return (m + dagger(m)) / 2


def _eigh_desc(m: np.ndarray):
    w, v = np.linalg.eigh(_sym(m))
    return w[::-1].copy(), v[:, ::-1].copy()


def _clusters(values: np.ndarray, tol: float) -> list[list[int]]:
    groups: list[list[int]] = []
    for i, x in enumerate(values):
        if groups and abs(values[groups[-1][-1]] - x) <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def _refine_cluster(vectors: np.ndarray, idx: list[int], perts: list[np.ndarray], depth: int, tol: float) -> None:
    if len(idx) <= 1 or depth >= len(perts):
        return
    cols = vectors[:, idx]
    restricted = _sym(dagger(cols) @ perts[depth] @ cols)
    w, r = np.linalg.eigh(restricted)
    w = w[::-1]
    r = r[:, ::-1]
    vectors[:, idx] = cols @ r
    for sub in _clusters(w, tol):
        if len(sub) > 1:
            _refine_cluster(vectors, [idx[k] for k in sub], perts, depth + 1, tol)


def eigencurve_derivatives(
    fn: Callable[[np.ndarray], np.ndarray],
    eps: np.ndarray,
    step: float,
    cluster_rtol: float = CLUSTER_RTOL,
):
    """Eigenvalues (descending), adapted eigenvectors, and per-parameter derivatives.

    Returns (values, vectors, derivs) with derivs of shape (D, N).  Uses
    Richardson-extrapolated second-order stencils: central in the interior,
    one-sided at the eps_mu = 0 boundary (negative noise strengths are
    outside the model).
    """
    eps = np.asarray(eps, dtype=float)
    num_params = eps.shape[0]
    base = _sym(np.asarray(fn(eps)))
    values, vectors = _eigh_desc(base)
    scale = max(1.0, float(np.max(np.abs(values))) if values.size else 1.0)
    tol = cluster_rtol * scale

    unit = np.eye(num_params)
    perts = [
        _sym(np.asarray(fn(eps + step * unit[mu]))) - base for mu in range(num_params)
    ]
    for cluster in _clusters(values, tol):
        if len(cluster) > 1:
            _refine_cluster(vectors, cluster, perts, 0, tol)

    def diag_at(t: float, mu: int) -> np.ndarray:
        m = _sym(np.asarray(fn(eps + t * unit[mu])))
        return np.real(np.einsum("in,ij,jn->n", vectors.conj(), m, vectors))

    derivs = np.zeros((num_params, values.shape[0]))
    g0 = np.real(np.einsum("in,ij,jn->n", vectors.conj(), base, vectors))
    for mu in range(num_params):
        if eps[mu] >= step:
            def d_central(h: float) -> np.ndarray:
                return (diag_at(h, mu) - diag_at(-h, mu)) / (2 * h)

            d1 = d_central(step)
            d2 = d_central(step / 2)
        else:
            def d_onesided(h: float) -> np.ndarray:
                return (4 * diag_at(h, mu) - 3 * g0 - diag_at(2 * h, mu)) / (2 * h)

            d1 = d_onesided(step)
            d2 = d_onesided(step / 2)
        derivs[mu] = (4 * d2 - d1) / 3
    return values, vectors, derivs
