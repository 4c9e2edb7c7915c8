import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from qaoalab import csp, statevec

from conftest import tv_distance


def random_state(rng, n):
    amps = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    return statevec.StateVector(n, amps / np.linalg.norm(amps))


def test_uniform_state_amplitudes():
    st1 = statevec.uniform_state(1)
    assert np.allclose(st1.amps, [1 / np.sqrt(2)] * 2)
    st2 = statevec.uniform_state(2)
    assert np.allclose(st2.amps, [0.5] * 4)


def test_uniform_overlap_with_basis():
    for z in (0, 3, 5):
        ip = statevec.inner_product(statevec.uniform_state(3), statevec.basis_state(3, z))
        assert abs(ip - 2 ** -1.5) < 1e-12


def test_ceiling_enforced():
    with pytest.raises(ValueError):
        statevec.uniform_state(statevec.STATE_CEILING + 1)


def test_hadamard_on_zero_gives_plus():
    state = statevec.basis_state(1, 0)
    statevec.apply_single_qubit(state, 0, statevec.HADAMARD)
    assert np.allclose(state.amps, [2 ** -0.5, 2 ** -0.5])


def test_htilde_twice_is_minus_i_flip():
    state = statevec.basis_state(1, 0)
    statevec.apply_single_qubit(state, 0, statevec.HTILDE)
    statevec.apply_single_qubit(state, 0, statevec.HTILDE)
    assert np.allclose(state.amps, [0, -1j])


def test_hadamard_involution_random_state():
    rng = np.random.default_rng(0)
    state = random_state(rng, 4)
    before = state.amps.copy()
    statevec.apply_single_qubit(state, 2, statevec.HADAMARD)
    statevec.apply_single_qubit(state, 2, statevec.HADAMARD)
    assert np.max(np.abs(state.amps - before)) < 1e-12


def test_non_unitary_rejected():
    state = statevec.basis_state(1, 0)
    with pytest.raises(ValueError):
        statevec.apply_single_qubit(state, 0, np.array([[1, 0], [0, 2]]))


def test_single_qubit_matches_dense_kron():
    # oracle: dense operator I (x) ... U ... (x) I acting on the flat vector
    rng = np.random.default_rng(1)
    n = 3
    theta = 0.7
    u = np.array([[np.cos(theta), -1j * np.sin(theta)],
                  [-1j * np.sin(theta), np.cos(theta)]])
    for qubit in range(n):
        state = random_state(rng, n)
        expected_op = np.array([[1.0]])
        for q in reversed(range(n)):  # qubit 0 least significant
            expected_op = np.kron(expected_op, u if q == qubit else np.eye(2))
        expected = expected_op @ state.amps
        statevec.apply_single_qubit(state, qubit, u)
        assert np.max(np.abs(state.amps - expected)) < 1e-12


def test_cost_phase_identity_cases(triangle):
    state = statevec.uniform_state(3)
    before = state.amps.copy()
    statevec.apply_cost_phase(state, triangle, 0.0)
    assert np.array_equal(state.amps, before)
    statevec.apply_cost_phase(state, triangle, 2 * np.pi)
    assert np.max(np.abs(state.amps - before)) < 1e-12


def test_cost_phase_single_clause():
    inst = csp.CspInstance(1, (csp.Clause((0,), frozenset({1})),))
    state = statevec.uniform_state(1)
    statevec.apply_cost_phase(state, inst, np.pi / 4)
    expected = np.array([1, np.exp(-1j * np.pi / 4)]) / np.sqrt(2)
    assert np.max(np.abs(state.amps - expected)) < 1e-12


def test_cost_phase_additive(triangle):
    rng = np.random.default_rng(2)
    a = random_state(rng, 3)
    b = a.copy()
    statevec.apply_cost_phase(a, triangle, 0.4)
    statevec.apply_cost_phase(a, triangle, 1.1)
    statevec.apply_cost_phase(b, triangle, 1.5)
    assert np.max(np.abs(a.amps - b.amps)) < 1e-12


def test_mixer_identity_and_flip():
    rng = np.random.default_rng(3)
    state = random_state(rng, 3)
    before = state.amps.copy()
    statevec.apply_mixer(state, 0.0)
    assert np.array_equal(state.amps, before)

    zero = statevec.basis_state(3, 0)
    statevec.apply_mixer(zero, np.pi / 2)
    expected = np.zeros(8, dtype=complex)
    expected[7] = (-1j) ** 3
    assert np.max(np.abs(zero.amps - expected)) < 1e-12


def test_mixer_matches_dense_expm():
    # oracle: expm of -i*beta*(sum of bit-flip operators)
    rng = np.random.default_rng(4)
    for n in (2, 3, 4):
        b_mat = np.zeros((2 ** n, 2 ** n))
        for z in range(2 ** n):
            for q in range(n):
                b_mat[z ^ (1 << q), z] += 1.0
        beta = float(rng.uniform(0, np.pi))
        expected_op = scipy.linalg.expm(-1j * beta * b_mat)
        state = random_state(rng, n)
        expected = expected_op @ state.amps
        statevec.apply_mixer(state, beta)
        assert np.max(np.abs(state.amps - expected)) < 1e-10


def test_diagonal_identity_and_gadget_matrix():
    rng = np.random.default_rng(5)
    state = random_state(rng, 2)
    before = state.amps.copy()
    statevec.apply_diagonal(state, (0, 1), np.ones(4))
    assert np.array_equal(state.amps, before)

    eleven = statevec.basis_state(2, 3)
    statevec.apply_diagonal(eleven, (0, 1), [1, 1j, 1, -1j])
    assert np.allclose(eleven.amps[3], -1j)


def test_diagonal_factorization_as_clause_phases():
    # diag(1, i, 1, -i) on (a, b) equals the angle-pi/4 phase of
    # 6*[pattern 01] + 2*[pattern 11]
    inst = csp.CspInstance(2, (csp.Clause((0, 1), frozenset({0b01})),) * 6
                           + (csp.Clause((0, 1), frozenset({0b11})),) * 2)
    rng = np.random.default_rng(6)
    a = random_state(rng, 2)
    b = a.copy()
    statevec.apply_diagonal(a, (0, 1), [1, 1j, 1, -1j])
    statevec.apply_cost_phase(b, inst, np.pi / 4)
    assert np.max(np.abs(a.amps - b.amps)) < 1e-12


def test_diagonal_rejects_non_unit_phase():
    state = statevec.basis_state(2, 0)
    with pytest.raises(ValueError):
        statevec.apply_diagonal(state, (0,), [1.0, 0.5])


def test_sample_point_mass_and_determinism():
    state = statevec.basis_state(3, 5)
    draws = statevec.sample(state, 100, rng_seed=9)
    assert np.all(draws == 5)
    again = statevec.sample(state, 100, rng_seed=9)
    assert np.array_equal(draws, again)


def test_sample_plus_state_frequency():
    state = statevec.uniform_state(1)
    draws = statevec.sample(state, 10 ** 6, rng_seed=42)
    freq = draws.mean()
    assert 0.497 <= freq <= 0.503


def test_sample_tv_convergence():
    rng = np.random.default_rng(11)
    state = random_state(rng, 6)
    draws = statevec.sample(state, 10 ** 6, rng_seed=1)
    empirical = np.bincount(draws, minlength=64) / 10 ** 6
    assert tv_distance(empirical, state.probabilities()) <= 0.01


def test_postselect_bell_branch():
    amps = np.zeros(4, dtype=complex)
    amps[0] = amps[3] = 2 ** -0.5
    state = statevec.StateVector(2, amps)
    reduced, prob = statevec.postselect(state, statevec.PostSelection((1,), (0,)))
    assert abs(prob - 0.5) < 1e-12
    assert np.allclose(reduced.amps, [1, 0])


def test_postselect_own_basis_state():
    state = statevec.basis_state(3, 5)
    reduced, prob = statevec.postselect(
        state, statevec.PostSelection((0, 1, 2), (1, 0, 1)))
    assert abs(prob - 1.0) < 1e-12
    assert reduced.n == 0


def test_postselect_impossible():
    state = statevec.basis_state(1, 0)
    with pytest.raises(statevec.PostSelectionImpossible):
        statevec.postselect(state, statevec.PostSelection((0,), (1,)))


def test_postselect_probability_is_consistent_mass():
    rng = np.random.default_rng(12)
    state = random_state(rng, 5)
    sel = statevec.PostSelection((1, 3), (0, 1))
    _, prob = statevec.postselect(state, sel)
    # oracle: direct sum over consistent basis states
    direct = sum(abs(state.amps[z]) ** 2 for z in range(32)
                 if (z >> 1) & 1 == 0 and (z >> 3) & 1 == 1)
    assert abs(prob - direct) < 1e-12


def test_permute_qubits_swap():
    rng = np.random.default_rng(13)
    state = random_state(rng, 2)
    swapped = statevec.permute_qubits(state, (1, 0))
    # new qubit 0 holds old qubit 1: amplitude of (q0=a, q1=b) moves to (q0=b, q1=a)
    assert swapped.amps[1] == state.amps[2]
    assert swapped.amps[2] == state.amps[1]
    assert swapped.amps[0] == state.amps[0]


def test_expectation_cost(triangle, single_edge):
    assert abs(statevec.expectation_cost(statevec.uniform_state(2), single_edge) - 0.5) < 1e-12
    assert abs(statevec.expectation_cost(statevec.uniform_state(3), triangle) - 1.5) < 1e-12
    z_star = csp.string_to_assignment("100")
    basis = statevec.basis_state(3, z_star)
    assert abs(statevec.expectation_cost(basis, triangle) - csp.cost(triangle, z_star)) < 1e-12


@given(st.integers(0, 3), st.floats(0.01, 3.0))
@settings(max_examples=40, deadline=None)
def test_norm_preserved_property(qubit, beta):
    rng = np.random.default_rng(99)
    state = random_state(rng, 4)
    statevec.apply_mixer(state, beta)
    statevec.apply_single_qubit(state, qubit, statevec.HADAMARD)
    assert abs(state.norm() - 1.0) < 1e-10


def test_state_csv_dump(tmp_path):
    state = statevec.uniform_state(2)
    out = tmp_path / "state.csv"
    statevec.write_state_csv(state, out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "index,real,imag"
    assert len(lines) == 5
