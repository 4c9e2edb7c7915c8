import itertools
import math

import numpy as np
import pytest
import scipy.linalg

from qaoalab import adiabatic, csp, statevec

from conftest import random_maxcut, tv_distance


def enumerate_worldline_distribution(instance, config):
    """Exhaustive oracle: normalized weights over every worldline."""
    dim = 2 ** instance.n
    probs = {}
    for z in range(dim):
        for x in itertools.product(range(dim), repeat=config.L):
            w = adiabatic.Worldline(z, x)
            probs[(z, x)] = math.exp(adiabatic.transfer_weight(w, instance, config))
    total = sum(probs.values())
    return {k: v / total for k, v in probs.items()}


def test_hamiltonian_dense_s1_is_minus_cost(triangle):
    mat = adiabatic.hamiltonian_dense(triangle, 1.0)
    table = csp.cost_table(triangle)
    assert np.max(np.abs(mat - np.diag(-table.astype(float)))) == 0.0


def test_hamiltonian_dense_s0_single_qubit():
    inst = csp.CspInstance(1, (csp.Clause((0,), frozenset({1})),))
    mat = adiabatic.hamiltonian_dense(inst, 0.0)
    assert np.allclose(mat, [[0, -1], [-1, 0]])


def test_hamiltonian_always_stoquastic():
    rng = np.random.default_rng(0)
    for _ in range(20):
        inst = random_maxcut(rng, int(rng.integers(2, 7)), extra_edges=2)
        s = float(rng.uniform(0, 1))
        assert adiabatic.stoquastic_check(adiabatic.hamiltonian_dense(inst, s))


def test_stoquastic_check_rejects_positive_offdiagonal():
    mat = np.zeros((4, 4))
    mat[0, 1] = mat[1, 0] = 1.0
    assert not adiabatic.stoquastic_check(mat)
    assert adiabatic.stoquastic_check(np.diag([1.0, -2.0, 3.0, 4.0]))


def test_ground_state_at_endpoints(triangle):
    at0 = adiabatic.ground_state(triangle, 0.0)
    assert abs(at0.ground_energy - (-3.0)) < 1e-10
    assert abs(at0.gap - 2.0) < 1e-10
    assert np.max(np.abs(at0.ground_state.amps - 2 ** -1.5)) < 1e-10

    at1 = adiabatic.ground_state(triangle, 1.0)
    assert abs(at1.ground_energy - (-csp.c_max(triangle))) < 1e-10


def test_ground_state_gap_positive_and_nonnegative_entries():
    rng = np.random.default_rng(1)
    for _ in range(5):
        inst = random_maxcut(rng, 5, extra_edges=2)
        s = float(rng.uniform(0.1, 0.9))
        data = adiabatic.ground_state(inst, s)
        assert data.gap > 0
        assert np.min(data.ground_state.amps.real) > -1e-12
        assert abs(data.ground_state.norm() - 1.0) < 1e-10


def test_gibbs_limits(triangle):
    near_uniform = adiabatic.gibbs_distribution(triangle, 0.5, 1e-9)
    assert np.max(np.abs(near_uniform - 1 / 8)) < 1e-6

    cold = adiabatic.gibbs_distribution(triangle, 1.0, 60.0)
    table = csp.cost_table(triangle)
    assert np.all(cold[table < csp.c_max(triangle)] < 1e-6)


def test_gibbs_approaches_ground_state(ring4):
    data = adiabatic.ground_state(ring4, 0.5)
    beta = 50.0 / data.gap
    gibbs = adiabatic.gibbs_distribution(ring4, 0.5, beta)
    assert tv_distance(gibbs, data.ground_state.probabilities()) <= 0.01


def test_transfer_weight_analytic_single_qubit():
    inst = csp.CspInstance(1, (csp.Clause((0,), frozenset({1})),))
    config = adiabatic.PimcConfig(beta=1.2, L=2, s=0.0, sweeps=1, seed=0)
    # constant worldline: every link contributes cosh(tau), no cost factor
    w = adiabatic.Worldline(0, (0, 0))
    expected = config.ell * math.log(math.cosh(config.tau))
    assert abs(adiabatic.transfer_weight(w, inst, config) - expected) < 1e-12


def test_transfer_weight_sums_to_transfer_matrix_trace(single_edge):
    config = adiabatic.PimcConfig(beta=1.3, L=2, s=0.4, sweeps=1, seed=0)
    total = sum(math.exp(adiabatic.transfer_weight(adiabatic.Worldline(z, x),
                                                   single_edge, config))
                for z in range(4)
                for x in itertools.product(range(4), repeat=2))
    t_mat = adiabatic.trotter_transfer_matrix(single_edge, config)
    assert abs(total - np.trace(np.linalg.matrix_power(t_mat, config.ell))) < 1e-10


def test_dense_slice_worldline_identity(single_edge):
    # with exact slice factors the worldline sum reproduces the full
    # matrix exponential diagonal, for any slice count
    beta, s = 0.9, 0.45
    full = scipy.linalg.expm(-beta * adiabatic.hamiltonian_dense(single_edge, s))
    for L in (2, 4):
        config = adiabatic.PimcConfig(beta=beta, L=L, s=s, sweeps=1, seed=0)
        k_slice = adiabatic.dense_slice_matrix(single_edge, s, beta, config.ell)
        for z in range(4):
            total = 0.0
            for x in itertools.product(range(4), repeat=L):
                beads = (z,) + x
                prod = 1.0
                for i in range(config.ell):
                    prod *= k_slice[beads[i], beads[(i + 1) % config.ell]]
                total += prod
            assert abs(total - full[z, z]) < 1e-10


def test_trotter_marginal_converges_to_gibbs(single_edge):
    beta, s = 2.0, 0.5
    gibbs = adiabatic.gibbs_distribution(single_edge, s, beta)
    errors = []
    for L in (4, 8, 16, 32):
        config = adiabatic.PimcConfig(beta=beta, L=L, s=s, sweeps=1, seed=0)
        marg = adiabatic.trotter_marginal_dense(single_edge, config)
        errors.append(tv_distance(marg, gibbs))
    assert all(b < a for a, b in zip(errors, errors[1:]))


def test_flip_log_ratio_matches_full_recompute(triangle):
    config = adiabatic.PimcConfig(beta=1.7, L=3, s=0.6, sweeps=1, seed=0)
    rng = np.random.default_rng(2)
    for _ in range(40):
        z = int(rng.integers(8))
        x = tuple(int(v) for v in rng.integers(0, 8, size=3))
        w = adiabatic.Worldline(z, x)
        bead = int(rng.integers(config.ell))
        bit = int(rng.integers(3))
        local = adiabatic.flip_log_ratio(w, triangle, config, bead, bit)
        beads = list(w.beads())
        beads[bead] ^= 1 << bit
        flipped = adiabatic.Worldline(beads[0], tuple(beads[1:]))
        full = (adiabatic.transfer_weight(flipped, triangle, config)
                - adiabatic.transfer_weight(w, triangle, config))
        assert abs(local - full) < 1e-10


def test_metropolis_sweep_deterministic(single_edge):
    config = adiabatic.PimcConfig(beta=1.0, L=2, s=0.3, sweeps=1, seed=0)
    w0 = adiabatic.Worldline(1, (2, 3))
    a = adiabatic.metropolis_sweep(w0, single_edge, config, np.random.default_rng(5))
    b = adiabatic.metropolis_sweep(w0, single_edge, config, np.random.default_rng(5))
    assert a == b
    c = adiabatic.metropolis_sweep(w0, single_edge, config, np.random.default_rng(6))
    del c  # different seed may differ; the call just has to be well-formed


def test_pimc_uniform_at_s_zero():
    inst = csp.CspInstance(1, (csp.Clause((0,), frozenset({1})),))
    config = adiabatic.PimcConfig(beta=2.0, L=4, s=0.0, sweeps=15000, seed=3)
    result = adiabatic.pimc_sample(inst, config)
    assert tv_distance(result.marginal, [0.5, 0.5]) <= 0.02


def test_pimc_near_uniform_at_tiny_beta(triangle):
    config = adiabatic.PimcConfig(beta=0.01, L=2, s=0.5, sweeps=12000, seed=4)
    result = adiabatic.pimc_sample(triangle, config)
    assert tv_distance(result.marginal, np.full(8, 1 / 8)) <= 0.03


def test_pimc_matches_exhaustive_worldline_distribution(single_edge):
    # chain stationarity oracle: exhaustive enumeration of all weights
    config = adiabatic.PimcConfig(beta=1.3, L=2, s=0.4, sweeps=60000, seed=11)
    exact = enumerate_worldline_distribution(single_edge, config)
    marg = np.zeros(4)
    for (z, _x), p in exact.items():
        marg[z] += p
    result = adiabatic.pimc_sample(single_edge, config)
    assert tv_distance(result.marginal, marg) <= 0.02
    assert 0 < result.acceptance_rate < 1
    assert result.autocorrelation_time >= 1.0


def test_sqa_finds_full_cut(ring4):
    config = adiabatic.PimcConfig(beta=8.0, L=16, s=0.0, sweeps=1, seed=7)
    schedule = np.linspace(0.0, 0.9, 10)
    result = adiabatic.sqa_anneal(ring4, schedule, per_step_sweeps=300, config=config)
    assert result.best_cost == 4
    assert csp.cost(ring4, result.best_z) == 4


def test_sqa_trajectory_monotone(ring6):
    config = adiabatic.PimcConfig(beta=6.0, L=8, s=0.0, sweeps=1, seed=8)
    result = adiabatic.sqa_anneal(ring6, np.linspace(0.0, 0.8, 6),
                                  per_step_sweeps=100, config=config)
    bests = [step.best_cost for step in result.trajectory]
    assert bests == sorted(bests)


def test_sqa_validates_schedule(ring4):
    config = adiabatic.PimcConfig(beta=5.0, L=4, s=0.0, sweeps=1, seed=0)
    with pytest.raises(ValueError):
        adiabatic.sqa_anneal(ring4, [0.5, 0.4], 10, config)
    with pytest.raises(ValueError):
        adiabatic.sqa_anneal(ring4, [0.5, 1.0], 10, config)


def test_single_step_schedule_matches_pimc_marginal():
    inst = csp.CspInstance(1, (csp.Clause((0,), frozenset({1})),))
    config = adiabatic.PimcConfig(beta=2.0, L=4, s=0.0, sweeps=1, seed=3)
    result = adiabatic.sqa_anneal(inst, [0.0], per_step_sweeps=5000, config=config)
    # a one-point schedule at s=0 is plain sampling of the transverse chain
    assert abs(result.trajectory[0].mean_cost - 0.5) < 0.05


def test_rejection_bound_never_violated(single_edge):
    config = adiabatic.PimcConfig(beta=1.5, L=3, s=0.5, sweeps=1, seed=9)
    bound = config.log_w_max(single_edge)
    rng = np.random.default_rng(10)
    for _ in range(2000):
        z = int(rng.integers(4))
        x = tuple(int(v) for v in rng.integers(0, 4, size=3))
        assert adiabatic.transfer_weight(adiabatic.Worldline(z, x),
                                         single_edge, config) <= bound + 1e-12


def test_rejection_sampler_distribution():
    inst = csp.CspInstance(1, (csp.Clause((0,), frozenset({1})),))
    config = adiabatic.PimcConfig(beta=1.0, L=2, s=0.5, sweeps=1, seed=12)
    exact = enumerate_worldline_distribution(inst, config)
    samples, attempts = adiabatic.rejection_sample_many(inst, config, 20000, 10 ** 7)
    assert attempts >= 20000
    counts = {}
    for w in samples:
        counts[(w.z, w.x)] = counts.get((w.z, w.x), 0) + 1
    keys = sorted(exact)
    from scipy import stats
    observed = np.array([counts.get(k, 0) for k in keys])
    expected = np.array([exact[k] * 20000 for k in keys])
    assert stats.chisquare(observed, expected).pvalue >= 0.01


def test_rejection_slack_changes_attempts_not_distribution():
    inst = csp.CspInstance(1, (csp.Clause((0,), frozenset({1})),))
    base = adiabatic.PimcConfig(beta=1.0, L=2, s=0.5, sweeps=1, seed=13)
    tight, att_tight = adiabatic.rejection_sample_many(inst, base, 5000, 10 ** 7)
    slack, att_slack = adiabatic.rejection_sample_many(
        inst, base, 5000, 10 ** 7, log_w_max_extra=math.log(2.0))
    assert att_slack > att_tight  # doubling the bound costs attempts
    # both empirical z-marginals sit near the exact one
    exact = enumerate_worldline_distribution(inst, base)
    marg = np.zeros(2)
    for (z, _x), p in exact.items():
        marg[z] += p
    for samples in (tight, slack):
        emp = np.bincount([w.z for w in samples], minlength=2) / len(samples)
        assert tv_distance(emp, marg) < 0.03


def test_rejection_attempts_exhausted():
    inst = csp.CspInstance(1, (csp.Clause((0,), frozenset({1})),))
    config = adiabatic.PimcConfig(beta=1.0, L=2, s=0.5, sweeps=1, seed=14)
    with pytest.raises(adiabatic.AttemptsExhausted):
        adiabatic.rejection_sample_many(inst, config, 10 ** 6, 10)


def test_evolve_zero_time_returns_uniform(ring4):
    state = adiabatic.adiabatic_evolve(ring4, 0.0)
    assert np.max(np.abs(state.amps - statevec.uniform_state(4).amps)) < 1e-15


def test_evolve_reaches_ground_state(ring4):
    target = adiabatic.ground_state(ring4, 1.0 - 1e-3).ground_state
    state = adiabatic.adiabatic_evolve(ring4, 40.0, dt=0.01)
    fid = abs(statevec.inner_product(target, state)) ** 2
    assert fid >= 0.99
    assert abs(state.norm() - 1.0) < 1e-8


def test_evolve_dt_convergence(ring4):
    target = adiabatic.ground_state(ring4, 1.0 - 1e-3).ground_state
    f1 = abs(statevec.inner_product(
        target, adiabatic.adiabatic_evolve(ring4, 20.0, dt=0.01))) ** 2
    f2 = abs(statevec.inner_product(
        target, adiabatic.adiabatic_evolve(ring4, 20.0, dt=0.005))) ** 2
    assert abs(f1 - f2) < 1e-6


def test_pimc_config_validation():
    with pytest.raises(ValueError):
        adiabatic.PimcConfig(beta=0.0, L=2, s=0.5, sweeps=1, seed=0)
    with pytest.raises(ValueError):
        adiabatic.PimcConfig(beta=1.0, L=1, s=0.5, sweeps=1, seed=0)
    with pytest.raises(ValueError):
        adiabatic.PimcConfig(beta=1.0, L=2, s=1.0, sweeps=1, seed=0)
