"""Controllability analysis for matrix pairs ``(A, H)``.

Controllability matrices and Gramians, the controllability index, the
orthogonal staircase (block upper-Hessenberg) form, and a grid-plus-refine
estimator of the distance to uncontrollability

    d(A, H) = inf over complex s of sigma_min([A - s I, H]).

All rank decisions use a relative singular-value threshold (``tol`` times the
largest singular value of the matrix being ranked).  Near-uncontrollable
pairs make this the most sensitive knob in the library, so every result that
depends on it carries the tolerance that produced it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import DimensionError
from .lti import RANK_TOL, spectral_norm

__all__ = [
    "StaircaseForm",
    "DistanceEstimate",
    "controllability_matrix",
    "gramian",
    "numerical_rank",
    "controllability_index",
    "staircase",
    "distance_to_uncontrollability",
    "toeplitz_sigma_min",
]


def _as_pair(A, H) -> tuple[np.ndarray, np.ndarray]:
    A = np.asarray(A, dtype=float)
    H = np.asarray(H, dtype=float)
    if H.ndim == 1:
        H = H[:, None]
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"A must be square, got shape {A.shape}")
    if H.ndim != 2 or H.shape[0] != A.shape[0]:
        raise DimensionError(
            f"H must have {A.shape[0]} rows, got shape {H.shape}"
        )
    return A, H


def controllability_matrix(A, H, k: int) -> np.ndarray:
    """Stacked excitation directions ``[H, AH, ..., A^{k-1} H]``."""
    A, H = _as_pair(A, H)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    blocks = [H]
    for _ in range(k - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def gramian(A, H, k: int) -> np.ndarray:
    """k-step controllability Gramian ``sum_{i<k} A^i H H' (A')^i``."""
    A, H = _as_pair(A, H)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    X = H.copy()
    G = X @ X.T
    for _ in range(k - 1):
        X = A @ X
        G += X @ X.T
    return (G + G.T) / 2.0


def numerical_rank(mat: np.ndarray, tol: float = RANK_TOL) -> int:
    """Count of singular values at least ``tol * sigma_max``."""
    if mat.size == 0:
        return 0
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.count_nonzero(sv >= tol * sv[0]))


def controllability_index(A, H, tol: float = RANK_TOL) -> int | None:
    """Smallest ``k`` with ``rank(C_k) = n``, or ``None`` if uncontrollable.

    The sweep stops as soon as the rank stalls: once ``rank(C_{k+1})`` equals
    ``rank(C_k)`` the reachable subspace is invariant and can never grow.
    """
    A, H = _as_pair(A, H)
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    n = A.shape[0]
    prev = 0
    for k in range(1, n + 1):
        rk = numerical_rank(controllability_matrix(A, H, k), tol)
        if rk == n:
            return k
        if rk == prev:
            return None
        prev = rk
    return None


@dataclass(frozen=True)
class StaircaseForm:
    """Orthogonal similarity bringing ``(A, H)`` to block upper-Hessenberg form.

    ``A_tilde = U' A U`` has subdiagonal blocks of shape
    ``r_{i+1} x r_i`` with full row rank, ``H_tilde = U' H`` is supported on
    its top ``r_1`` rows, and the block sizes are the controllability rank
    increments.  ``controllable`` is false when the deflation met a
    rank-zero coupling before exhausting the state space; the partial form
    is still returned, with ``kappa`` set to ``None`` to agree with
    :func:`controllability_index`.
    """

    U: np.ndarray
    A_tilde: np.ndarray
    H_tilde: np.ndarray
    block_sizes: tuple[int, ...]
    kappa: int | None
    controllable: bool
    tol: float


def staircase(A, H, tol: float = RANK_TOL) -> StaircaseForm:
    """Deflate ``(A, H)`` to staircase form by repeated SVD of coupling blocks.

    Each stage takes the coupling block from the processed part into the
    unprocessed part (initially ``H`` itself), reads its numerical rank
    ``r_i``, and rotates the unprocessed coordinates by the block's left
    singular vectors so the coupling collapses onto its top ``r_i`` rows.
    SVD (rather than a pivoted QR) keeps the rank decision robust when the
    couplings sit near the distance-to-uncontrollability level.
    """
    A, H = _as_pair(A, H)
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    n = A.shape[0]

    A_t = A.copy()
    H_t = H.copy()
    U = np.eye(n)
    blocks: list[int] = []
    j = 0  # rows already locked into the staircase
    r_prev = H_t.shape[1]
    coupling = H_t  # stage 1 couples through the noise map itself

    while j < n and r_prev > 0:
        G = coupling[j:, :]
        W, sv, _ = np.linalg.svd(G, full_matrices=True)
        r = 0
        if sv.size and sv[0] > 0.0:
            r = int(np.count_nonzero(sv >= tol * sv[0]))
        if r == 0:
            break
        # Rotate the unprocessed block of coordinates by W.
        A_t[j:, :] = W.T @ A_t[j:, :]
        A_t[:, j:] = A_t[:, j:] @ W
        H_t[j:, :] = W.T @ H_t[j:, :]
        U[:, j:] = U[:, j:] @ W
        blocks.append(r)
        j += r
        r_prev = r
        coupling = A_t[:, j - r : j]  # next stage couples through A

    return StaircaseForm(
        U=U,
        A_tilde=A_t,
        H_tilde=H_t,
        block_sizes=tuple(blocks),
        kappa=len(blocks) if j == n else None,
        controllable=(j == n),
        tol=tol,
    )


@dataclass(frozen=True)
class DistanceEstimate:
    """Upper bound on d(A, H) with the complex shift that attained it."""

    value: float
    minimizer_s: complex
    grid_resolution: float
    refined: bool


def _sigma_min_pencil(A: np.ndarray, H: np.ndarray, s: complex) -> float:
    K = np.concatenate([A - s * np.eye(A.shape[0]), H], axis=1)
    return float(np.linalg.svd(K, compute_uv=False)[-1])


def distance_to_uncontrollability(
    A, H, grid_resolution: float | None = None, refine: bool = True
) -> DistanceEstimate:
    """Estimate ``inf_s sigma_min([A - s I, H])`` over complex ``s``.

    The search covers the disk ``|s| <= ||A||_2 + ||H||_2`` (outside it the
    shifted pencil is larger than at ``s = 0``) on a square grid, with an
    optional Nelder-Mead refinement from the best grid point.  Any finite
    evaluation set can only over-estimate an infimum, so the returned value
    is an upper bound on the true distance.  Ties between equal grid values
    resolve to the lexicographically smallest ``(Re s, Im s)``, which makes
    the result independent of evaluation order.
    """
    A, H = _as_pair(A, H)
    n = A.shape[0]
    radius = spectral_norm(A) + spectral_norm(H)
    if grid_resolution is None:
        grid_resolution = 0.02 * radius
    elif grid_resolution <= 0:
        raise ValueError(f"grid_resolution must be > 0, got {grid_resolution}")

    if radius == 0.0 or grid_resolution == 0.0:
        offsets = np.array([0.0])
    else:
        m = int(np.ceil(radius / grid_resolution))
        offsets = np.arange(-m, m + 1) * grid_resolution

    re, im = np.meshgrid(offsets, offsets, indexing="ij")  # lex order: Re, Im
    pts = (re + 1j * im).ravel()
    pts = pts[np.abs(pts) <= radius + 1e-12]

    # Batched SVD over the grid shifts (sliced to bound memory); argmin takes
    # the first (and therefore lexicographically smallest) minimizer among
    # exact ties.
    eye = np.eye(n)
    sigmas = np.empty(pts.size)
    for start in range(0, pts.size, 4096):
        chunk = pts[start : start + 4096]
        pencils = np.empty((chunk.size, n, n + H.shape[1]), dtype=complex)
        pencils[:, :, :n] = A - chunk[:, None, None] * eye
        pencils[:, :, n:] = H
        sigmas[start : start + 4096] = np.linalg.svd(
            pencils, compute_uv=False
        )[:, -1]
    best = int(np.argmin(sigmas))
    best_s = complex(pts[best])
    best_val = float(sigmas[best])

    if refine:
        h = grid_resolution if grid_resolution > 0 else max(radius, 1.0) * 0.01

        def objective(xy):
            return _sigma_min_pencil(A, H, complex(xy[0], xy[1]))

        x0 = np.array([best_s.real, best_s.imag])
        simplex = np.array([x0, x0 + [0.5 * h, 0.0], x0 + [0.0, 0.5 * h]])
        res = optimize.minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={
                "initial_simplex": simplex,
                "xatol": 1e-10 * max(radius, 1.0),
                "fatol": 1e-14,
                "maxiter": 500,
            },
        )
        if res.fun < best_val:
            best_val = float(res.fun)
            best_s = complex(res.x[0], res.x[1])

    return DistanceEstimate(
        value=best_val,
        minimizer_s=best_s,
        grid_resolution=float(grid_resolution),
        refined=bool(refine),
    )


def toeplitz_sigma_min(rho: float, s: complex, n: int) -> float:
    """Smallest eigenvalue of the tridiagonal comparison matrix ``T_s``.

    ``T_s = [A - s I, H] [A - s I, H]^*`` for the perturbed integrator pair
    is Hermitian tridiagonal Toeplitz with diagonal ``|rho - s|^2 + rho^2``
    and off-diagonal modulus ``|rho| |rho - s|``, so its spectrum is known in
    closed form; the smallest eigenvalue is

        |rho - s|^2 + rho^2 - 2 |rho| |rho - s| cos(pi / (n + 1)).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    gap = abs(rho - s)
    return float(
        gap * gap
        + rho * rho
        - 2.0 * abs(rho) * gap * np.cos(np.pi / (n + 1))
    )
