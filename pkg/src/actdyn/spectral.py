"""Largest adjacency eigenvalue and small-graph spectra.

The stability test needs the spectral radius of the (symmetric, nonnegative)
adjacency matrix. Power iteration fits the sparse structure; a dense
symmetric eigensolve doubles as an independent cross-check on small graphs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, InputError
from .graph import CollaborationNetwork

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000
FULL_SPECTRUM_LIMIT = 2_000


@dataclass(frozen=True)
class SpectralResult:
    """Converged estimate of the spectral radius.

    residual is ||A v - kappa1 v||_2 for the returned unit vector v.
    """

    kappa1: float
    iterations: int
    residual: float
    vector: np.ndarray


def largest_eigenvalue(
    net: CollaborationNetwork,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> SpectralResult:
    """Spectral radius of the adjacency matrix by power iteration.

    Iterates on A + I so that the top eigenvalue strictly dominates in
    magnitude even on bipartite graphs (where +kappa1 and -kappa1 tie and
    plain power iteration oscillates); the unit shift is subtracted from
    the Rayleigh quotient and the residual is measured against A itself.
    The start vector is all-ones plus a tiny fixed-seed perturbation, so
    runs are deterministic and never orthogonal to the dominant mode.
    """
    if net.n < 1:
        raise InputError("network must have at least one node")
    if tol <= 0:
        raise InputError("tol must be positive")

    n = net.n
    if net.m == 0:
        return SpectralResult(0.0, 0, 0.0, np.full(n, 1.0 / np.sqrt(n)))

    adj = net.adjacency_operator()
    rng = np.random.default_rng(0)
    v = np.ones(n) + 1e-6 * rng.standard_normal(n)
    v /= np.linalg.norm(v)

    kappa = 0.0
    residual = np.inf
    for it in range(1, max_iter + 1):
        w = adj @ v + v  # (A + I) v
        norm = np.linalg.norm(w)
        if norm == 0.0:  # cannot happen for A nonnegative with m >= 1, but be safe
            raise ConvergenceError(
                "power iteration collapsed to zero vector",
                residual=np.inf,
                iterations=it,
            )
        v = w / norm
        av = adj @ v
        kappa = float(v @ av)  # Rayleigh quotient of A
        residual = float(np.linalg.norm(av - kappa * v))
        if residual <= tol:
            return SpectralResult(kappa, it, residual, v)

    raise ConvergenceError(
        f"power iteration did not reach residual {tol:g} in {max_iter} "
        f"iterations (last residual {residual:g}); raise max_iter",
        residual=residual,
        iterations=max_iter,
    )


def full_spectrum_small(
    net: CollaborationNetwork, n_limit: int = FULL_SPECTRUM_LIMIT
) -> np.ndarray:
    """All adjacency eigenvalues, descending. Dense solve, small graphs only."""
    if net.n > n_limit:
        raise InputError(
            f"graph has {net.n} nodes > limit {n_limit}; "
            "use largest_eigenvalue for the spectral radius"
        )
    dense = net.adjacency().toarray()
    eigenvalues = np.linalg.eigvalsh(dense)
    return eigenvalues[::-1]
