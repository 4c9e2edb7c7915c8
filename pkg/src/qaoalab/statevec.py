"""Dense 2**n-amplitude state engine with gates, sampling, and post-selection.

Basis index convention: the amplitude at index ``z`` belongs to the
computational basis state in which qubit ``q`` has value ``(z >> q) & 1``
(qubit 0 least significant).  Multi-qubit phase lists read like kets: the
first listed qubit is the most significant bit of the phase index, matching
how diagonal gates are written as matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import csp

#: Largest simulable qubit count.
STATE_CEILING = 24

#: Post-selection masses below this are treated as exactly impossible.
ZERO_MASS = 1e-300

UNITARY_TOL = 1e-12

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
#: exp(-i pi/4 sigma_x), the mixer layer at angle pi/4.
HTILDE = np.array([[1, -1j], [-1j, 1]], dtype=complex) / np.sqrt(2)


class PostSelectionImpossible(ValueError):
    """The conditioned branch carries (numerically) zero probability mass."""


@dataclass
class StateVector:
    n: int
    amps: np.ndarray

    def __post_init__(self):
        # n=0 (a bare scalar) is legal so that fully-selected states stay representable
        if not 0 <= self.n <= STATE_CEILING:
            raise ValueError(f"qubit count {self.n} outside 0..{STATE_CEILING}")
        self.amps = np.asarray(self.amps, dtype=complex)
        if self.amps.shape != (2 ** self.n,):
            raise ValueError("amplitude vector has wrong length")

    def copy(self) -> "StateVector":
        return StateVector(self.n, self.amps.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2


@dataclass(frozen=True)
class PostSelection:
    """Computational-basis conditioning: qubits[i] is required to equal targets[i]."""

    qubits: tuple[int, ...]
    targets: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if len(self.qubits) != len(self.targets):
            raise ValueError("qubits and targets must have equal length")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError("post-selected qubits must be distinct")
        if any(t not in (0, 1) for t in self.targets):
            raise ValueError("targets must be bits")


def uniform_state(n: int) -> StateVector:
    """Equal-amplitude superposition over all 2**n basis states."""
    if n < 1:
        raise ValueError("uniform state needs at least one qubit")
    return StateVector(n, np.full(2 ** n, 2.0 ** (-n / 2), dtype=complex))


def basis_state(n: int, z: int) -> StateVector:
    if not 0 <= z < 2 ** n:
        raise ValueError(f"basis index {z} out of range")
    amps = np.zeros(2 ** n, dtype=complex)
    amps[z] = 1.0
    return StateVector(n, amps)


def from_amplitudes(amps) -> StateVector:
    amps = np.asarray(amps, dtype=complex)
    n = int(round(np.log2(len(amps))))
    if 2 ** n != len(amps):
        raise ValueError("amplitude vector length must be a power of two")
    return StateVector(n, amps)


def _require_unitary(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError("single-qubit gate must be a 2x2 matrix")
    if np.max(np.abs(u @ u.conj().T - np.eye(2))) > UNITARY_TOL:
        raise ValueError("matrix is not unitary within tolerance")
    return u


def apply_single_qubit(state: StateVector, qubit: int, u) -> StateVector:
    """Apply a 2x2 unitary to one qubit, in place."""
    u = _require_unitary(u)
    if not 0 <= qubit < state.n:
        raise ValueError(f"qubit {qubit} out of range")
    a = state.amps.reshape([2] * state.n)
    ax = state.n - 1 - qubit
    a = np.moveaxis(a, ax, -1)
    a = a @ u.T
    state.amps = np.ascontiguousarray(np.moveaxis(a, -1, ax)).reshape(-1)
    return state


def apply_cost_phase(state: StateVector, instance: csp.CspInstance,
                     gamma: float) -> StateVector:
    """Multiply each amplitude by exp(-i * gamma * C(z)); exactly norm-preserving."""
    if instance.n != state.n:
        raise ValueError("instance and state disagree on qubit count")
    table = csp.cost_table(instance, limit=STATE_CEILING)
    state.amps = state.amps * np.exp(-1j * gamma * table)
    return state


def apply_mixer(state: StateVector, beta: float) -> StateVector:
    """exp(-i*beta*X) on every qubit; the product form of the transverse mixer."""
    c, s = np.cos(beta), np.sin(beta)
    rot = np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    for q in range(state.n):
        apply_single_qubit(state, q, rot)
    return state


def apply_diagonal(state: StateVector, qubits, phases) -> StateVector:
    """Multiply amplitudes by phases indexed by the restriction to ``qubits``.

    The phase index reads the listed qubits like a ket: qubits[0] is the most
    significant bit, so ``phases`` matches a matrix diagonal written in the
    usual basis order.
    """
    qubits = tuple(int(q) for q in qubits)
    k = len(qubits)
    phases = np.asarray(phases, dtype=complex)
    if phases.shape != (2 ** k,):
        raise ValueError(f"need 2**{k} phases, got {phases.shape}")
    if np.max(np.abs(np.abs(phases) - 1.0)) > UNITARY_TOL:
        raise ValueError("diagonal entries must have unit modulus")
    if len(set(qubits)) != k or any(not 0 <= q < state.n for q in qubits):
        raise ValueError(f"bad qubit list {qubits}")
    idx = np.arange(2 ** state.n, dtype=np.int64)
    code = np.zeros(2 ** state.n, dtype=np.int64)
    for t, q in enumerate(qubits):
        code |= ((idx >> q) & 1) << (k - 1 - t)
    state.amps = state.amps * phases[code]
    return state


def sample(state: StateVector, shot_count: int, rng_seed: int) -> np.ndarray:
    """shot_count i.i.d. basis-index draws from |amp|^2, seed-reproducible."""
    if shot_count < 1:
        raise ValueError("shot_count must be >= 1")
    rng = np.random.default_rng(rng_seed)
    p = state.probabilities()
    p = p / p.sum()
    return rng.choice(len(p), size=shot_count, p=p)


def sample_bitstrings(state: StateVector, shot_count: int, rng_seed: int) -> list[str]:
    """Like sample(), rendered as text (qubit 0 leftmost)."""
    return [csp.assignment_to_string(int(z), state.n)
            for z in sample(state, shot_count, rng_seed)]


def postselect(state: StateVector, sel: PostSelection) -> tuple[StateVector, float]:
    """Project onto the selected outcome and renormalize.

    Returns the reduced state over the remaining qubits (ascending original
    order) together with the pre-normalization probability mass, so callers
    can assert that the conditioned branch is actually reachable.
    """
    if any(q >= state.n for q in sel.qubits):
        raise ValueError("post-selection references a missing qubit")
    if not sel.qubits:
        return state.copy(), 1.0
    rest = [q for q in range(state.n) if q not in set(sel.qubits)]
    base = 0
    for q, t in zip(sel.qubits, sel.targets):
        base |= t << q
    if rest:
        sub = np.arange(2 ** len(rest), dtype=np.int64)
        full = np.full(2 ** len(rest), base, dtype=np.int64)
        for t, q in enumerate(rest):
            full |= ((sub >> t) & 1) << q
        picked = state.amps[full]
    else:
        picked = state.amps[np.array([base])]
    prob = float(np.sum(np.abs(picked) ** 2))
    if prob < ZERO_MASS:
        raise PostSelectionImpossible(
            f"selected outcome has probability {prob:.3e}")
    reduced = picked / np.sqrt(prob)
    return StateVector(len(rest), reduced), prob


def permute_qubits(state: StateVector, sources) -> StateVector:
    """Relabel qubits: new qubit i is old qubit sources[i]."""
    sources = tuple(int(s) for s in sources)
    if sorted(sources) != list(range(state.n)):
        raise ValueError("sources must be a permutation of range(n)")
    a = state.amps.reshape([2] * state.n)
    # axis (n-1-i) of the reshaped tensor holds qubit i
    axes = [state.n - 1 - sources[state.n - 1 - ax] for ax in range(state.n)]
    return StateVector(state.n, np.ascontiguousarray(a.transpose(axes)).reshape(-1))


def amplitude(state: StateVector, z: int) -> complex:
    if not 0 <= z < 2 ** state.n:
        raise ValueError(f"basis index {z} out of range")
    return complex(state.amps[z])


def inner_product(a: StateVector, b: StateVector) -> complex:
    if a.n != b.n:
        raise ValueError("states live on different qubit counts")
    return complex(np.vdot(a.amps, b.amps))


def expectation_cost(state: StateVector, instance: csp.CspInstance) -> float:
    """<C> = sum_z |amp(z)|^2 C(z)."""
    if instance.n != state.n:
        raise ValueError("instance and state disagree on qubit count")
    table = csp.cost_table(instance, limit=STATE_CEILING)
    return float(np.dot(state.probabilities(), table))


def write_state_csv(state: StateVector, path) -> None:
    """Debug dump: one 'index,real,imag' row per amplitude."""
    with open(path, "w") as fh:
        fh.write("index,real,imag\n")
        for i, a in enumerate(state.amps):
            fh.write(f"{i},{a.real!r},{a.imag!r}\n")
