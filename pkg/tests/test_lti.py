"""Model construction, zoo systems, and the frozen simulation contract."""

import numpy as np
import pytest

from sysidlab import (
    DimensionError,
    ExplosiveSpectralRadiusError,
    InputMapRankError,
    LtiSystem,
    NoiseMapRankError,
    NoiseSpec,
    Trajectory,
    make_system,
    simulate,
    simulate_batch,
    zoo_hard_chain,
    zoo_jordan_actuated,
    zoo_kl_pair,
    zoo_padded_chain,
    zoo_perturbed_integrator,
    zoo_scaled_jordan,
)
from sysidlab.lti import jordan, spectral_norm, spectral_radius

RNG_SEED = 20240817


# ---------------------------------------------------------------------------
# make_system validation
# ---------------------------------------------------------------------------

def test_make_system_basic_fields():
    A = np.array([[0.9, 0.1], [0.0, 0.8]])
    B = np.eye(2)
    sys = make_system(A, B=B)
    assert sys.n == 2 and sys.p == 2 and sys.r == 2
    assert np.array_equal(sys.H, np.eye(2))       # H defaults to identity
    assert sys.M == pytest.approx(max(spectral_norm(A), 1.0))


def test_make_system_promotes_vectors_to_columns():
    sys = make_system(np.eye(3) * 0.5, B=np.array([1.0, 0.0, 0.0]),
                      H=np.array([0.0, 0.0, 1.0]))
    assert sys.B.shape == (3, 1)
    assert sys.H.shape == (3, 1)


def test_make_system_allows_no_inputs():
    sys = make_system(np.eye(2) * 0.3)
    assert sys.p == 0
    assert sys.B.shape == (2, 0)


def test_make_system_arrays_are_read_only():
    sys = zoo_scaled_jordan(3)
    with pytest.raises(ValueError):
        sys.A[0, 0] = 99.0


@pytest.mark.parametrize("bad_A", [np.ones((2, 3)), np.ones((1, 2))])
def test_make_system_rejects_nonsquare(bad_A):
    with pytest.raises(DimensionError):
        make_system(bad_A)


def test_make_system_rejects_row_mismatch():
    with pytest.raises(DimensionError):
        make_system(np.eye(3) * 0.5, B=np.ones((2, 1)))


def test_make_system_rejects_explosive_spectral_radius():
    with pytest.raises(ExplosiveSpectralRadiusError):
        make_system(np.eye(2) * 1.001)


def test_make_system_accepts_radius_exactly_one():
    sys = make_system(jordan(4, 1.0), B=np.eye(4)[:, -1:])
    assert spectral_radius(sys.A) == pytest.approx(1.0)


def test_make_system_rejects_rank_deficient_maps():
    A = np.eye(2) * 0.5
    with pytest.raises(InputMapRankError):
        make_system(A, B=np.ones((2, 2)))
    with pytest.raises(NoiseMapRankError):
        make_system(A, H=np.ones((2, 2)))


def test_noise_spec_rejects_negative_scales():
    with pytest.raises(ValueError):
        NoiseSpec(input_std=-1.0, noise_std=0.0)
    with pytest.raises(ValueError):
        NoiseSpec(input_std=0.0, noise_std=float("nan"))


def test_trajectory_shape_validation():
    with pytest.raises(DimensionError):
        Trajectory(states=np.zeros((5, 2)), inputs=np.zeros((5, 1)),
                   seed=0, n_steps=5)


# ---------------------------------------------------------------------------
# Zoo systems: explicit matrices and structure
# ---------------------------------------------------------------------------

def test_jordan_matrix_is_upper_bidiagonal():
    J = jordan(4, 0.5)
    expected = np.array([
        [0.5, 1.0, 0.0, 0.0],
        [0.0, 0.5, 1.0, 0.0],
        [0.0, 0.0, 0.5, 1.0],
        [0.0, 0.0, 0.0, 0.5],
    ])
    assert np.array_equal(J, expected)


def test_zoo_scaled_jordan_explicit_n3():
    sys = zoo_scaled_jordan(3)
    assert np.array_equal(sys.A, np.array([
        [0.5, 0.5, 0.0],
        [0.0, 0.5, 0.5],
        [0.0, 0.0, 0.5],
    ]))
    e3 = np.array([[0.0], [0.0], [1.0]])
    assert np.array_equal(sys.B, e3)
    assert np.array_equal(sys.H, e3)


def test_zoo_hard_chain_structure():
    sys = zoo_hard_chain(4, 0.25)
    assert sys.p == 0 and sys.r == 2
    # rho-scaled unit Jordan chain, noise at both ends
    assert np.array_equal(sys.A, 0.25 * (np.eye(4) + np.diag(np.ones(3), 1)))
    assert np.array_equal(sys.H[:, 0], np.array([1.0, 0, 0, 0]))
    assert np.array_equal(sys.H[:, 1], np.array([0, 0, 0, 0.25]))


@pytest.mark.parametrize("rho", [-0.1, 0.0, 0.5, 0.7])
def test_zoo_hard_chain_rejects_rho_outside_open_half_interval(rho):
    with pytest.raises(ValueError):
        zoo_hard_chain(4, rho)


def test_zoo_perturbed_integrator_structure():
    A, H = zoo_perturbed_integrator(3, 0.25)
    assert np.array_equal(A, 0.25 * (np.eye(3) + np.diag(np.ones(2), 1)))
    # noise closes the chain at the far end, making the pencil Toeplitz
    assert np.array_equal(H, np.array([[0.0], [0.0], [0.25]]))


def test_zoo_kl_pair_differs_only_in_one_entry():
    s1, s2 = zoo_kl_pair(0.3, 0.05)
    delta = np.asarray(s2.A) - np.asarray(s1.A)
    expected = np.zeros((3, 3))
    expected[0, 1] = 2 * 0.05
    assert np.array_equal(delta, expected)
    assert s1.A[1, 2] == 0.3
    assert np.array_equal(s1.H, s2.H)


def test_zoo_padded_chain_structure():
    sys = zoo_padded_chain(6, 2, 0.25)
    A = np.asarray(sys.A)
    # leading 3x3 weighted chain, identity padding
    assert np.array_equal(A[:3, :3], 0.25 * (np.eye(3) + np.diag(np.ones(2), 1)))
    assert np.array_equal(A[3:, 3:], np.eye(3))
    assert sys.r == 5  # e_1, rho*e_3, and one column per padded state


@pytest.mark.parametrize("pattern,expected_p", [
    ("last", 1),
    ("half", 2),
    ("every_other", 3),
])
def test_zoo_jordan_actuated_patterns(pattern, expected_p):
    sys = zoo_jordan_actuated(6, 0.5, b_pattern=pattern)
    assert sys.p == expected_p
    assert np.array_equal(sys.H, 0.1 * np.eye(6)[:, -1:])
    # every B column is 5 * a canonical vector
    B = np.asarray(sys.B)
    assert np.allclose(np.abs(B).sum(axis=0), 5.0)


def test_zoo_jordan_actuated_half_uses_floor_position():
    B = np.asarray(zoo_jordan_actuated(9, 0.5, b_pattern="half").B)
    rows = sorted(np.nonzero(B)[0])
    assert rows == [3, 8]  # e_4 and e_9, one-indexed


def test_zoo_jordan_actuated_rejects_bad_pattern():
    with pytest.raises(ValueError):
        zoo_jordan_actuated(6, 0.5, b_pattern="first")


# ---------------------------------------------------------------------------
# Controllability index of the zoo (rank-sweep oracle)
# ---------------------------------------------------------------------------

def kappa_rank_sweep(A, C, k_max=60):
    """Independent oracle: smallest k with rank [C, AC, ..., A^{k-1}C] = n."""
    n = A.shape[0]
    stack = C.copy()
    cur = C.copy()
    for k in range(1, k_max + 1):
        if np.linalg.matrix_rank(stack) == n:
            return k
        cur = A @ cur
        stack = np.hstack([stack, cur])
    return None


def combined_excitation(sys):
    return np.hstack([np.asarray(sys.B), np.asarray(sys.H)])


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_scaled_jordan_index_equals_dimension(n):
    sys = zoo_scaled_jordan(n)
    assert kappa_rank_sweep(np.asarray(sys.A), combined_excitation(sys)) == n


@pytest.mark.parametrize("n", [3, 5, 7])
def test_hard_chain_index_is_n_minus_one(n):
    sys = zoo_hard_chain(n, 0.25)
    assert kappa_rank_sweep(np.asarray(sys.A), np.asarray(sys.H)) == n - 1


def test_padded_chain_index_frozen_value():
    # Rank sweep resolves this to 2: the padded identity states are directly
    # excited, and the second chain state enters at k = 2.
    sys = zoo_padded_chain(6, 2, 0.25)
    assert kappa_rank_sweep(np.asarray(sys.A), np.asarray(sys.H)) == 2


@pytest.mark.parametrize("pattern,expected", [
    ("last", lambda n: n),
    ("half", lambda n: -(-n // 2)),
    ("every_other", lambda n: 2),
])
@pytest.mark.parametrize("n", [5, 6, 9, 12])
def test_jordan_actuated_index_matches_label(pattern, expected, n):
    sys = zoo_jordan_actuated(n, 0.5, b_pattern=pattern)
    got = kappa_rank_sweep(np.asarray(sys.A), combined_excitation(sys))
    assert got == expected(n)


# ---------------------------------------------------------------------------
# Simulation contract
# ---------------------------------------------------------------------------

def test_simulate_is_deterministic_in_seed():
    sys = zoo_scaled_jordan(4)
    noise = NoiseSpec(1.0, 1.0)
    t1 = simulate(sys, 25, noise, seed=123)
    t2 = simulate(sys, 25, noise, seed=123)
    t3 = simulate(sys, 25, noise, seed=124)
    assert np.array_equal(t1.states, t2.states)
    assert np.array_equal(t1.inputs, t2.inputs)
    assert not np.array_equal(t1.states, t3.states)


def test_simulate_starts_at_origin_and_has_right_shapes():
    sys = zoo_jordan_actuated(5, 0.5, b_pattern="half")
    traj = simulate(sys, 17, NoiseSpec(1.0, 1.0), seed=5)
    assert traj.states.shape == (18, 5)
    assert traj.inputs.shape == (17, 2)
    assert np.array_equal(traj.states[0], np.zeros(5))


def test_simulate_matches_handwritten_recursion():
    """Frozen RNG contract: Philox(seed), inputs drawn before shocks."""
    sys = zoo_scaled_jordan(3)
    noise = NoiseSpec(input_std=2.0, noise_std=0.5)
    N, seed = 13, 42

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    u = rng.standard_normal((N, sys.p)) * noise.input_std
    w = rng.standard_normal((N, sys.r)) * noise.noise_std
    A, B, H = (np.asarray(m) for m in (sys.A, sys.B, sys.H))
    x = np.zeros((N + 1, 3))
    for k in range(N):
        x[k + 1] = A @ x[k] + B @ u[k] + H @ w[k]

    traj = simulate(sys, N, noise, seed=seed)
    assert np.array_equal(traj.inputs, u)
    assert np.allclose(traj.states, x, rtol=0.0, atol=1e-14)


def test_simulate_scales_exactly_with_noise_amplitude():
    # Doubling both standard deviations doubles every state bit-exactly
    # (scaling by a power of two is exact in binary floating point).
    sys = zoo_scaled_jordan(4)
    base = simulate(sys, 30, NoiseSpec(1.5, 0.25), seed=9)
    doubled = simulate(sys, 30, NoiseSpec(3.0, 0.5), seed=9)
    assert np.array_equal(doubled.states, 2.0 * base.states)
    assert np.array_equal(doubled.inputs, 2.0 * base.inputs)


def test_simulate_zero_noise_keeps_origin():
    sys = zoo_hard_chain(4, 0.25)  # no inputs: driven by shocks alone
    traj = simulate(sys, 10, NoiseSpec(input_std=5.0, noise_std=0.0), seed=1)
    assert np.array_equal(traj.states, np.zeros((11, 4)))


def test_simulate_rejects_nonpositive_horizon():
    with pytest.raises(ValueError):
        simulate(zoo_scaled_jordan(2), 0, NoiseSpec(1.0, 1.0), seed=0)


def test_simulate_batch_rows_match_single_runs():
    sys = zoo_scaled_jordan(3)
    noise = NoiseSpec(1.0, 2.0)
    states, inputs = simulate_batch(sys, 12, noise, seeds=[7, 8, 7])
    # identical seeds give bit-identical rows within one batch
    assert np.array_equal(states[0], states[2])
    assert np.array_equal(inputs[0], inputs[2])
    # and each row agrees with the scalar path to rounding
    single = simulate(sys, 12, noise, seed=8)
    assert np.allclose(states[1], single.states, rtol=0.0, atol=1e-12)


def test_simulate_batch_empty_seed_list_rejected():
    with pytest.raises(ValueError):
        simulate_batch(zoo_scaled_jordan(2), 5, NoiseSpec(1.0, 1.0), seeds=[])


# ---------------------------------------------------------------------------
# State covariance law of large numbers
# ---------------------------------------------------------------------------

def test_state_covariance_matches_gramian_scaling():
    """cov(x_k) = noise_std^2 * Gamma_k for a noise-only system."""
    from sysidlab import gramian

    sys = zoo_hard_chain(3, 0.25)
    noise = NoiseSpec(input_std=0.0, noise_std=1.5)
    k = 6
    trials = 20000
    states, _ = simulate_batch(sys, k, noise, seeds=list(range(trials)))
    sample_cov = states[:, k, :].T @ states[:, k, :] / trials
    expected = noise.noise_std**2 * gramian(
        np.asarray(sys.A), np.asarray(sys.H), k
    )
    err = np.linalg.norm(sample_cov - expected, 2) / np.linalg.norm(expected, 2)
    assert err < 0.06, f"covariance LLN off by {err:.3f} relative"
