"""Closed-form hardness bounds, trajectory KL divergence, and the
staircase sigma_min certificate.

Three families live here:

- norm bounds on matrix powers and Gramians of non-explosive systems,
  plus the geometric decay of the weakly-coupled chain's (2,2) Gramian
  entry and the exponential-in-n sample-complexity lower bound;
- the exact trajectory KL divergence between two systems whose dynamics
  differ inside the column space of the shared noise map, and the minimax
  sample count it implies;
- a certified upper bound on ``||C_kappa^dagger||_2`` (equivalently a lower
  bound on ``sigma_min(Gamma_kappa)``) from only ``(M, mu, kappa)``.

All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import KlFactorizationError
from .lti import LtiSystem

__all__ = [
    "BoundCertificate",
    "KlResult",
    "IntegratorDistance",
    "powers_bound",
    "gramian_upper_bound",
    "gramian22_decay_bound",
    "integrator_distance_closed_form",
    "exp_hard_lower_bound",
    "kl_trajectory",
    "minimax_required_samples",
    "sigma_min_certificate",
]


def powers_bound(M: float, n: int, k: int) -> float:
    """Upper bound ``(e k)^{n-1} max(M^n, 1)`` on ``||A^k||_2``.

    Valid for any ``n x n`` matrix with ``||A||_2 <= M`` and spectral radius
    at most one.
    """
    if M < 0:
        raise ValueError(f"M must be >= 0, got {M}")
    if n < 1 or k < 1:
        raise ValueError(f"n and k must be >= 1, got n={n}, k={k}")
    return (math.e * k) ** (n - 1) * max(M**n, 1.0)


def gramian_upper_bound(M: float, n: int, k: int) -> float:
    """Upper bound ``e^{2n-2} k^{2n-1} max(M^{2n}, 1)`` on ``||Gamma_k||_2``."""
    if M < 0:
        raise ValueError(f"M must be >= 0, got {M}")
    if n < 1 or k < 1:
        raise ValueError(f"n and k must be >= 1, got n={n}, k={k}")
    return math.e ** (2 * n - 2) * float(k) ** (2 * n - 1) * max(M ** (2 * n), 1.0)


def gramian22_decay_bound(rho: float, n: int) -> float:
    """Uniform-in-k bound ``(2 rho)^{2n-2} / (1 - 4 rho^2)`` on the (2,2)
    Gramian entry of the weakly coupled chain; requires ``rho < 1/2``."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if not 0.0 < rho < 0.5:
        raise ValueError(
            f"rho must lie in (0, 1/2), got {rho} (the geometric sum diverges)"
        )
    return (2.0 * rho) ** (2 * n - 2) / (1.0 - 4.0 * rho * rho)


class IntegratorDistance(NamedTuple):
    value: float
    lower: float
    upper: float


def integrator_distance_closed_form(rho: float, n: int) -> IntegratorDistance:
    """Exact distance to uncontrollability of the perturbed integrator.

    Returns ``rho * sin(pi / (n+1))`` together with its linear sandwich
    ``2 rho / (n+1) <= d <= pi rho / (n+1)``.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if rho <= 0:
        raise ValueError(f"rho must be > 0, got {rho}")
    return IntegratorDistance(
        value=rho * math.sin(math.pi / (n + 1)),
        lower=2.0 * rho / (n + 1),
        upper=math.pi * rho / (n + 1),
    )


def exp_hard_lower_bound(
    n: int, eps: float, delta: float, proof_form: bool = False
) -> float:
    """Exponential-in-n minimax sample-complexity lower bound.

    The headline form is ``4^{n-3} / (3 eps^2) * ln(1/delta)``.  The
    underlying argument actually yields ``4^{n-2} / (6 eps^2) * ln(1/(3 delta))``,
    which differs in constants; ``proof_form=True`` evaluates that variant.
    """
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if proof_form:
        return 4.0 ** (n - 2) / (6.0 * eps * eps) * math.log(1.0 / (3.0 * delta))
    return 4.0 ** (n - 3) / (3.0 * eps * eps) * math.log(1.0 / delta)


# ---------------------------------------------------------------------------
# Trajectory KL divergence and the minimax sample count
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KlResult:
    """Trajectory KL divergence with its per-transition contributions."""

    value: float
    per_step: np.ndarray
    n_steps: int


def _kl_factor(S1: LtiSystem, S2: LtiSystem) -> tuple[np.ndarray, np.ndarray]:
    """Validate the pair and return ``(G, H)`` with ``A1 - A2 = H G``."""
    if S1.n != S2.n:
        raise KlFactorizationError(
            f"systems have different state dimensions ({S1.n} vs {S2.n})"
        )
    if S1.H.shape != S2.H.shape or not np.array_equal(S1.H, S2.H):
        raise KlFactorizationError("systems must share the same noise map H")
    same_b = S1.B.shape == S2.B.shape and np.array_equal(S1.B, S2.B)
    if not ((S1.p == 0 and S2.p == 0) or same_b):
        raise KlFactorizationError(
            "systems must have no input channel, or identical input maps "
            "(identical realized inputs cancel in the likelihood ratio)"
        )
    H = np.asarray(S1.H)
    delta = S1.A - S2.A
    G = np.linalg.pinv(H) @ delta
    residual = np.linalg.norm(delta - H @ G)
    if residual > 1e-10 * max(1.0, np.linalg.norm(delta)):
        raise KlFactorizationError(
            "KL factorization inapplicable: A1 - A2 is not in the column "
            f"space of H (residual {residual:.3e})"
        )
    return G, H


def kl_trajectory(S1: LtiSystem, S2: LtiSystem, N: int) -> KlResult:
    """Exact KL divergence between length-``N`` trajectory distributions.

    Requires that ``A1 - A2 = H G`` for some ``G``: then the transition
    densities differ only through the noisy channels and the divergence
    reduces to ``1/2 sum_k trace(G Sigma_k G')`` with ``Sigma_k`` the k-step
    noise covariance ``Gamma_k`` (``Sigma_{k+1} = A1 Sigma_k A1' + H H'``),
    summed over the ``N`` transitions ``k = 1..N``.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    G, H = _kl_factor(S1, S2)
    A1 = np.asarray(S1.A)
    HHt = H @ H.T

    sigma = np.zeros_like(A1)
    per_step = np.empty(N)
    for k in range(N):
        sigma = A1 @ sigma @ A1.T + HHt
        per_step[k] = 0.5 * float(np.trace(G @ sigma @ G.T))
    per_step.setflags(write=False)
    return KlResult(value=float(np.sum(per_step)), per_step=per_step, n_steps=N)


def minimax_required_samples(
    S1: LtiSystem, S2: LtiSystem, delta: float, N_max: int = 10**7
) -> int | None:
    """Smallest ``N <= N_max`` with ``kl_trajectory(S1, S2, N) >= ln(1/(3 delta))``.

    This is the minimax lower bound on sample complexity the pair certifies:
    below the returned horizon no algorithm can separate the two systems at
    confidence ``delta``.  Returns ``None`` when the divergence cannot reach
    the threshold within ``N_max`` ("exceeds N_max").

    Per-transition contributions are monotone, so once they stabilize (the
    state covariance has essentially converged) the remaining horizon is
    extrapolated instead of iterated, which keeps huge ``N_max`` cheap.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if N_max < 1:
        raise ValueError(f"N_max must be >= 1, got {N_max}")
    threshold = math.log(1.0 / (3.0 * delta))
    if threshold <= 0.0:
        return 1  # any horizon separates at this (vacuous) confidence

    G, H = _kl_factor(S1, S2)
    A1 = np.asarray(S1.A)
    HHt = H @ H.T

    sigma = np.zeros_like(A1)
    total = 0.0
    prev = None
    streak = 0
    for k in range(1, N_max + 1):
        sigma = A1 @ sigma @ A1.T + HHt
        c = 0.5 * float(np.trace(G @ sigma @ G.T))
        total += c
        if total >= threshold:
            return k
        if prev is not None and abs(c - prev) <= 1e-13 * max(abs(c), 1e-300):
            streak += 1
        else:
            streak = 0
        prev = c
        if streak >= 8:
            if c <= 0.0:
                return None  # zero divergence per step, forever
            remaining = int(math.ceil((threshold - total) / c))
            candidate = k + remaining
            return candidate if candidate <= N_max else None
    return None


# ---------------------------------------------------------------------------
# Staircase sigma_min certificate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundCertificate:
    """Certified upper bound on ``||C_kappa^dagger||_2`` from ``(M, mu, kappa)``.

    ``bound**-2`` is the certified lower bound on ``sigma_min(Gamma_kappa)``.
    """

    M: float
    mu: float
    kappa: int
    xi: np.ndarray
    alpha1: np.ndarray
    bound: float


def sigma_min_certificate(M: float, mu: float, kappa: int) -> BoundCertificate:
    """Propagate the staircase recursion bound ``kappa - 1`` steps.

    For a staircase-form system with norm bound ``M`` and coupling-block
    singular values at least ``mu``, the vector of block quantities
    ``(||C_k^dagger||, ||Lambda_k||, mu^{-1})`` grows at most linearly through

        xi = [[1, 1, 1/mu], [M/mu, (2+M)/mu, M/mu], [0, 0, 1/mu]],

    starting from the worst-case ``alpha_1 = (1/mu, M/mu^2, 1/mu)``; the
    certified bound is ``||xi^{kappa-1}||_2 ||alpha_1||_2``.
    """
    if M <= 0:
        raise ValueError(f"M must be > 0, got {M}")
    if mu <= 0:
        raise ValueError(f"mu must be > 0, got {mu}")
    if kappa < 1:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    inv = 1.0 / mu
    xi = np.array(
        [
            [1.0, 1.0, inv],
            [M * inv, (2.0 + M) * inv, M * inv],
            [0.0, 0.0, inv],
        ]
    )
    alpha1 = np.array([inv, M * inv * inv, inv])
    bound = float(
        np.linalg.norm(np.linalg.matrix_power(xi, kappa - 1), 2)
        * np.linalg.norm(alpha1)
    )
    xi.setflags(write=False)
    alpha1.setflags(write=False)
    return BoundCertificate(
        M=float(M), mu=float(mu), kappa=int(kappa), xi=xi, alpha1=alpha1, bound=bound
    )
