"""State-space systems, benchmark constructors, and seeded simulation.

The model throughout is the discrete-time linear system

    x_{k+1} = A x_k + B u_k + H w_k,        x_0 = 0,

with white Gaussian inputs ``u_k`` and process noise ``w_k``.  Systems are
validated at construction (non-explosive dynamics, full-rank input/noise
maps) and are immutable afterwards, so they can be shared freely across
threads.

Simulation is a pure function of ``(system, n_steps, noise, seed)``: the
generator is Philox (counter-based, platform-stable) keyed by the seed, and
Gaussian variates come from ``numpy``'s ziggurat ``standard_normal`` with a
frozen draw order (all inputs first, then all process noise).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionError,
    ExplosiveSpectralRadiusError,
    InputMapRankError,
    NoiseMapRankError,
)

__all__ = [
    "SPECTRAL_TOL",
    "RANK_TOL",
    "LtiSystem",
    "NoiseSpec",
    "Trajectory",
    "make_system",
    "simulate",
    "simulate_batch",
    "jordan",
    "zoo_scaled_jordan",
    "zoo_hard_chain",
    "zoo_perturbed_integrator",
    "zoo_kl_pair",
    "zoo_padded_chain",
    "zoo_jordan_actuated",
]

#: Slack allowed on the spectral-radius-at-most-one check.
SPECTRAL_TOL = 1e-9

#: Default relative tolerance for all numerical rank decisions
#: (singular values below ``RANK_TOL * sigma_max`` count as zero).
RANK_TOL = 1e-8


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class LtiSystem:
    """A validated triple ``(A, B, H)`` with its dimensions and norm bound.

    Use :func:`make_system` instead of constructing directly; the factory
    checks every invariant and freezes the arrays.
    """

    A: np.ndarray
    B: np.ndarray
    H: np.ndarray
    n: int
    p: int
    r: int
    M: float

    def __repr__(self) -> str:  # keep reprs short; matrices can be large
        return f"LtiSystem(n={self.n}, p={self.p}, r={self.r}, M={self.M:.4g})"


@dataclass(frozen=True)
class NoiseSpec:
    """Per-coordinate standard deviations of the white input and process noise."""

    input_std: float
    noise_std: float

    def __post_init__(self) -> None:
        for name in ("input_std", "noise_std"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class Trajectory:
    """A single rollout: states ``x_0..x_N`` and inputs ``u_0..u_{N-1}``.

    Process noise is consumed during simulation and not stored.  ``seed`` is
    ``None`` for trajectories loaded from disk rather than simulated.
    """

    states: np.ndarray
    inputs: np.ndarray
    seed: int | None
    n_steps: int

    def __post_init__(self) -> None:
        if self.states.shape[0] != self.inputs.shape[0] + 1:
            raise DimensionError(
                "states must contain exactly one more row than inputs"
            )
        if self.n_steps != self.inputs.shape[0]:
            raise DimensionError("n_steps disagrees with the number of inputs")


def spectral_norm(a: np.ndarray) -> float:
    """Largest singular value, with the empty-matrix convention ``0``."""
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def spectral_radius(a: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(a))))


def _check_full_column_rank(mat: np.ndarray, exc: type, label: str) -> None:
    if mat.shape[1] == 0:
        return
    if mat.shape[1] > mat.shape[0]:
        raise exc(
            f"{label} has more columns than rows ({mat.shape[1]} > {mat.shape[0]})"
        )
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv[-1] < RANK_TOL * sv[0] or sv[0] == 0.0:
        raise exc(f"{label} is rank deficient at tolerance {RANK_TOL:g}")


def make_system(A, B=None, H=None) -> LtiSystem:
    """Validate and freeze a system ``x_{k+1} = A x_k + B u_k + H w_k``.

    Parameters
    ----------
    A : (n, n) array_like
        Dynamics matrix; spectral radius must not exceed ``1 + SPECTRAL_TOL``.
    B : (n, p) array_like, optional
        Input map, full column rank.  ``None`` means no input channel
        (``p = 0``), used by analysis-only benchmark systems.
    H : (n, r) array_like, optional
        Noise map, full column rank.  ``None`` defaults to the identity.

    Returns
    -------
    LtiSystem
        With ``M`` set to the largest of the three spectral norms.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"A must be square, got shape {A.shape}")
    n = A.shape[0]

    if B is None:
        B = np.zeros((n, 0))
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    if H is None:
        H = np.eye(n)
    H = np.asarray(H, dtype=float)
    if H.ndim == 1:
        H = H[:, None]

    for name, mat in (("B", B), ("H", H)):
        if mat.ndim != 2 or mat.shape[0] != n:
            raise DimensionError(
                f"{name} must have {n} rows, got shape {mat.shape}"
            )

    rho = spectral_radius(A)
    if rho > 1.0 + SPECTRAL_TOL:
        raise ExplosiveSpectralRadiusError(
            f"explosive spectral radius: rho(A) = {rho:.6g} > 1"
        )
    _check_full_column_rank(B, InputMapRankError, "B")
    _check_full_column_rank(H, NoiseMapRankError, "H")

    M = max(spectral_norm(A), spectral_norm(B), spectral_norm(H))
    return LtiSystem(
        A=_readonly(A), B=_readonly(B), H=_readonly(H),
        n=n, p=B.shape[1], r=H.shape[1], M=M,
    )


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

def _generator(seed: int) -> np.random.Generator:
    # Philox keyed through SeedSequence: counter-based, identical on every
    # platform, and cheap to construct per trajectory.
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def simulate_batch(
    sys: LtiSystem, n_steps: int, noise: NoiseSpec, seeds
) -> tuple[np.ndarray, np.ndarray]:
    """Roll out one trajectory per seed.

    Returns ``(states, inputs)`` with shapes ``(T, n_steps+1, n)`` and
    ``(T, n_steps, p)``.  Every noise draw depends only on its own seed, so
    rows with equal seeds are bit-identical within a batch; against the
    single-trajectory path the agreement is to rounding (the batched state
    update uses differently-shaped matrix products).
    """
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    seeds = list(seeds)
    if not seeds:
        raise ValueError("seeds must be non-empty")
    T = len(seeds)
    n, p, r = sys.n, sys.p, sys.r

    inputs = np.empty((T, n_steps, p))
    shocks = np.empty((T, n_steps, r))
    for i, seed in enumerate(seeds):
        rng = _generator(int(seed))
        inputs[i] = rng.standard_normal((n_steps, p)) * noise.input_std
        shocks[i] = rng.standard_normal((n_steps, r)) * noise.noise_std

    # Pre-mix the forcing so the state recursion is a single matmul per step.
    forcing = shocks @ sys.H.T
    if p:
        forcing += inputs @ sys.B.T

    states = np.zeros((T, n_steps + 1, n))
    At = sys.A.T
    for k in range(n_steps):
        states[:, k + 1, :] = states[:, k, :] @ At + forcing[:, k, :]
    return states, inputs


def simulate(sys: LtiSystem, n_steps: int, noise: NoiseSpec, seed: int) -> Trajectory:
    """Simulate a single seeded trajectory from ``x_0 = 0``."""
    states, inputs = simulate_batch(sys, n_steps, noise, [seed])
    states = _readonly(states[0])
    inputs = _readonly(inputs[0])
    return Trajectory(states=states, inputs=inputs, seed=int(seed), n_steps=n_steps)


# ---------------------------------------------------------------------------
# Benchmark zoo
# ---------------------------------------------------------------------------

def jordan(n: int, lam: float) -> np.ndarray:
    """Jordan block ``J_n(lam)``: ``lam`` on the diagonal, ones above it."""
    return lam * np.eye(n) + np.eye(n, k=1)


def _unit(n: int, i: int) -> np.ndarray:
    e = np.zeros(n)
    e[i] = 1.0
    return e


def zoo_scaled_jordan(n: int) -> LtiSystem:
    """Half-scaled Jordan chain driven only through its last state.

    ``A = 0.5 * J_n(1)`` and ``B = H = e_n``: excitation enters at the end of
    the chain and must climb the superdiagonal, which is what makes this the
    canonical empirically-hard family.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    e_n = _unit(n, n - 1)
    return make_system(0.5 * jordan(n, 1.0), B=e_n, H=e_n)


def zoo_hard_chain(n: int, rho: float) -> LtiSystem:
    """Weakly coupled chain with noise at both ends and no input channel.

    ``A`` carries ``rho`` on the diagonal and superdiagonal, and
    ``H = [e_1, rho * e_n]``.  Requires ``0 < rho < 1/2`` so the middle of
    the chain is provably badly excited while the pair stays well away from
    uncontrollability.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if not 0.0 < rho < 0.5:
        raise ValueError(f"rho must lie in (0, 1/2), got {rho}")
    A = rho * jordan(n, 1.0)
    H = np.column_stack([_unit(n, 0), rho * _unit(n, n - 1)])
    return make_system(A, B=None, H=H)


def zoo_perturbed_integrator(n: int, rho: float) -> tuple[np.ndarray, np.ndarray]:
    """Scaled integrator chain ``(A, H)`` with a known distance to uncontrollability.

    ``A = rho * (I + shift)``, ``H = rho * e_n``.  Returned as a raw matrix
    pair (the pair is an analysis target, not a simulation benchmark); the
    closed-form distance is ``rho * sin(pi / (n + 1))``.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    A = rho * jordan(n, 1.0)
    H = (rho * _unit(n, n - 1))[:, None]
    return A, H


def zoo_kl_pair(beta: float, eps: float) -> tuple[LtiSystem, LtiSystem]:
    """Two 3-state systems distinguishable only through one noisy channel.

    Both share ``H = [e_1, e_3]``.  ``S1`` has the single entry
    ``A[1, 2] = beta`` (0-indexed); ``S2`` additionally sets
    ``A[0, 1] = 2 * eps``, so ``||A_1 - A_2||_2 = 2 * eps`` exactly while the
    perturbation lies in the column space of ``H`` — the structure that makes
    the trajectory KL divergence computable in closed form.
    """
    if beta == 0.0:
        raise ValueError("beta must be nonzero")
    if eps <= 0.0:
        raise ValueError(f"eps must be > 0, got {eps}")
    A1 = np.zeros((3, 3))
    A1[1, 2] = beta
    A2 = A1.copy()
    A2[0, 1] = 2.0 * eps
    H = np.column_stack([_unit(3, 0), _unit(3, 2)])
    return make_system(A1, B=None, H=H), make_system(A2, B=None, H=H)


def zoo_padded_chain(n: int, m: int, rho: float) -> LtiSystem:
    """A shortened hard chain padded with directly excited integrator states.

    The chain block has length ``c = n // m``; the remaining ``n - c`` states
    are decoupled (identity dynamics) and each receives its own noise column:
    ``A = diag(rho * J_c(1), I)`` and ``H = [e_1, rho*e_c, e_{c+1}, ..., e_n]``.
    ``m = 1`` recovers the full chain structure of length ``n``.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if m > n:
        raise ValueError(f"m must not exceed n ({m} > {n})")
    c = n // m
    A = np.eye(n)
    A[:c, :c] = rho * jordan(c, 1.0)
    cols = [_unit(n, 0), rho * _unit(n, c - 1)]
    cols.extend(_unit(n, i) for i in range(c, n))
    return make_system(A, B=None, H=np.column_stack(cols))


_B_PATTERNS = ("last", "half", "every_other")


def zoo_jordan_actuated(
    n: int,
    lam: float,
    h_scale: float = 0.1,
    b_scale: float = 5.0,
    b_pattern: str = "last",
) -> LtiSystem:
    """Jordan block ``J_n(lam)`` with noise at the last state and a tunable input map.

    ``H = h_scale * e_n`` always; ``B`` is ``b_scale`` times columns selected
    by ``b_pattern``:

    - ``last``: ``e_n`` (single chain, index ``n``),
    - ``half``: ``[e_n, e_{floor(n/2)}]`` (index ``ceil(n/2)``; the floor
      placement is the empirically validated one — it reproduces the
      reference index-variation curve, while ``e_{ceil(n/2)}`` runs
      15-20% fast at odd ``n``),
    - ``every_other``: ``[e_n, e_{n-2}, e_{n-4}, ...]`` (index 2).

    Adding columns shortens the distance excitation has to travel, which is
    exactly the knob the index-variation experiments turn.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if not 0.0 < lam <= 1.0:
        raise ValueError(f"lambda must lie in (0, 1], got {lam}")
    if b_pattern not in _B_PATTERNS:
        raise ValueError(
            f"unknown b_pattern {b_pattern!r}; expected one of {_B_PATTERNS}"
        )
    if b_pattern == "last":
        positions = [n - 1]
    elif b_pattern == "half":
        positions = [n - 1, n // 2 - 1]  # e_n and e_{floor(n/2)}
    else:
        positions = list(range(n - 1, -1, -2))  # e_n, e_{n-2}, ...
    B = b_scale * np.column_stack([_unit(n, i) for i in positions])
    H = h_scale * _unit(n, n - 1)
    return make_system(jordan(n, lam), B=B, H=H)
