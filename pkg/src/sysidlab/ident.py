"""Ridge least-squares identification from a single trajectory.

Fits ``x_{t+1} ~ F x_t + G u_t`` by minimizing

    sum_t ||x_{t+1} - F x_t - G u_t||^2 + ridge (||F||_F^2 + ||G||_F^2)

over ``(F, G)``, via Cholesky on the ridge-regularized Gram matrix of the
stacked regressor ``[x_t; u_t]``.  The noise map ``H`` is never seen by the
estimator; only the dynamics (and input map) are identified.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .errors import DimensionError, RankDeficientRegressionError
from .lti import Trajectory

__all__ = ["Estimate", "least_squares", "estimation_error"]


@dataclass(frozen=True)
class Estimate:
    """Identified dynamics and input map, with the settings that produced them."""

    A_hat: np.ndarray
    B_hat: np.ndarray
    ridge: float
    n_steps: int
    error_vs: float | None = None


def _solve_normal_equations(
    gram: np.ndarray, rhs: np.ndarray, ridge: float
) -> np.ndarray:
    """Solve ``(Z'Z + ridge I) theta = Z'Y`` by Cholesky.

    A breakdown with ``ridge = 0`` means the regressors do not span the
    parameter space, which is a caller-visible condition rather than a bug.
    """
    try:
        chol = sla.cho_factor(gram, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        if ridge > 0:
            raise  # regularized Gram is PD by construction; this is a bug
        raise RankDeficientRegressionError(
            "rank-deficient regression: singular Gram matrix with ridge=0"
        ) from exc
    return sla.cho_solve(chol, rhs, check_finite=False)


def least_squares(traj: Trajectory, ridge: float = 0.001) -> Estimate:
    """Ridge least-squares estimate of ``(A, B)`` from one trajectory.

    Parameters
    ----------
    traj : Trajectory
        States ``x_0..x_N`` and inputs ``u_0..u_{N-1}``.
    ridge : float
        Regularization weight applied uniformly to both blocks.  With
        ``ridge = 0`` a singular Gram matrix raises
        :class:`RankDeficientRegressionError`; any positive ridge cannot.
    """
    if ridge < 0:
        raise ValueError(f"ridge must be >= 0, got {ridge}")
    states = np.asarray(traj.states)
    inputs = np.asarray(traj.inputs)
    n = states.shape[1]
    p = inputs.shape[1]

    Z = np.hstack([states[:-1], inputs]) if p else states[:-1]
    Y = states[1:]
    gram = Z.T @ Z + ridge * np.eye(n + p)
    theta = _solve_normal_equations(gram, Z.T @ Y, ridge)

    A_hat = theta[:n].T.copy()
    B_hat = theta[n:].T.copy()
    A_hat.setflags(write=False)
    B_hat.setflags(write=False)
    return Estimate(A_hat=A_hat, B_hat=B_hat, ridge=ridge, n_steps=traj.n_steps)


def estimation_error(est, A_true) -> float:
    """Spectral-norm error ``||A_true - A_hat||_2``.

    ``est`` may be an :class:`Estimate` or a bare matrix.
    """
    A_hat = est.A_hat if isinstance(est, Estimate) else np.asarray(est, dtype=float)
    A_true = getattr(A_true, "A", A_true)
    A_true = np.asarray(A_true, dtype=float)
    if A_hat.shape != A_true.shape:
        raise DimensionError(
            f"shape mismatch: estimate {A_hat.shape} vs truth {A_true.shape}"
        )
    diff = A_true - A_hat
    if diff.size == 0:
        return 0.0
    return float(np.linalg.norm(diff, 2))
