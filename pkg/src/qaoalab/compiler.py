"""Compile circuits over {H, T-phase, controlled-phase} into a single
post-selected cost-phase sandwich and verify the result exactly.

Target form: Hadamards on every qubit, one diagonal exp(-i*(pi/4)*C) built
from one- and two-variable pattern clauses, a closing layer of
exp(-i*(pi/4)*X) on every qubit, then post-selection of a qubit subset onto
zero.  Every Hadamard that is not a qubit's first gate is replaced by the
teleportation gadget: a fresh auxiliary qubit, the diagonal
diag(1, i, 1, -i) on (aux, j), and a deferred closing rotation plus
post-selection on j.  The conditional branch probability of each gadget is
exactly 1/2, so the compiled circuit never conditions on a zero-mass event.

Circuit file format::

    circuit <n>
    h <q>
    t <q>
    cp <q1> <q2>
    post <q> 0      # optional trailing post-selections

Compiled output is a CSP file plus a JSON sidecar carrying qubit bookkeeping.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import csp, statevec

H = "h"
TPHASE = "t"
CPHASE = "cp"
_ZQUARTER = "zq"  # internal: exp(+i*(pi/4)*Z), used to build the closing rotation's inverse

GAMMA = math.pi / 4


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        arity = {H: 1, TPHASE: 1, CPHASE: 2, _ZQUARTER: 1}
        if self.kind not in arity:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != arity[self.kind]:
            raise ValueError(f"{self.kind} takes {arity[self.kind]} qubit(s)")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError("gate qubits must be distinct")


def h(q: int) -> Gate:
    return Gate(H, (q,))


def t(q: int) -> Gate:
    return Gate(TPHASE, (q,))


def cp(q1: int, q2: int) -> Gate:
    return Gate(CPHASE, (q1, q2))


@dataclass(frozen=True)
class Circuit:
    """Gate list over the universal set, acting on |0...0>; optional trailing
    post-selections (all onto 0) for post-selected inputs."""

    n: int
    gates: tuple[Gate, ...]
    postselect: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "postselect", tuple(int(q) for q in self.postselect))
        if self.n < 1:
            raise ValueError("circuit needs at least one qubit")
        for g in self.gates:
            if g.kind == _ZQUARTER:
                raise ValueError("zq is compiler-internal, not a circuit gate")
            if any(q >= self.n for q in g.qubits):
                raise ValueError(f"gate {g} references qubit >= n={self.n}")
        if len(set(self.postselect)) != len(self.postselect):
            raise ValueError("post-selected qubits must be distinct")
        if any(not 0 <= q < self.n for q in self.postselect):
            raise ValueError("post-selection references a missing qubit")
        if len(self.postselect) >= self.n:
            raise ValueError("at least one qubit must remain unselected")


@dataclass(frozen=True)
class CompiledQaoa:
    n_original: int
    n_total: int
    cost: csp.CspInstance
    postselect: statevec.PostSelection
    output_map: tuple[int, ...]  # logical qubit -> physical qubit at the end
    output_logical: tuple[int, ...]  # logical qubits that remain after post-selection
    global_phase: complex
    gadget_count: int


# matrices of the universal set (for direct simulation and identity tests)
T_MATRIX = np.diag([cmath.exp(1j * math.pi / 8), cmath.exp(-1j * math.pi / 8)])
CP_MATRIX = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
ZQ_MATRIX = np.diag([cmath.exp(1j * math.pi / 4), cmath.exp(-1j * math.pi / 4)])
GADGET_DIAGONAL = np.array([1.0, 1.0j, 1.0, -1.0j])


def simulate_circuit_state(circuit: Circuit) -> tuple[statevec.StateVector, float]:
    """Gate-by-gate execution from |0^n>; returns (state, post-selection mass)."""
    state = statevec.basis_state(circuit.n, 0)
    for g in circuit.gates:
        if g.kind == H:
            statevec.apply_single_qubit(state, g.qubits[0], statevec.HADAMARD)
        elif g.kind == TPHASE:
            statevec.apply_diagonal(state, g.qubits, np.diag(T_MATRIX))
        elif g.kind == _ZQUARTER:
            statevec.apply_diagonal(state, g.qubits, np.diag(ZQ_MATRIX))
        else:
            statevec.apply_diagonal(state, g.qubits, np.diag(CP_MATRIX))
    if circuit.postselect:
        sel = statevec.PostSelection(circuit.postselect, (0,) * len(circuit.postselect))
        return statevec.postselect(state, sel)
    return state, 1.0


def simulate_circuit(circuit: Circuit) -> np.ndarray:
    """Exact output distribution (over unselected qubits, ascending order)."""
    state, _ = simulate_circuit_state(circuit)
    return state.probabilities()


def gate_to_clauses(gate: Gate) -> tuple[tuple[csp.Clause, ...], complex]:
    """Clause multiset and scalar factor with
    gate = factor * exp(-i*(pi/4)*sum_a C_a)."""
    if gate.kind == TPHASE:
        return (csp.Clause(gate.qubits, frozenset({1})),), cmath.exp(1j * math.pi / 8)
    if gate.kind == _ZQUARTER:
        clause = csp.Clause(gate.qubits, frozenset({1}))
        return (clause, clause), cmath.exp(1j * math.pi / 4)
    if gate.kind == CPHASE:
        clause = csp.Clause(gate.qubits, frozenset({0b11}))
        return (clause,) * 4, 1.0 + 0j
    raise ValueError(f"{gate.kind} has no clause form")


def gadget_clauses(aux: int, j: int) -> tuple[csp.Clause, ...]:
    """Clauses realizing diag(1, i, 1, -i) on (aux, j) at angle pi/4:
    six copies of pattern 01 and two of pattern 11."""
    if aux == j:
        raise ValueError("auxiliary and target must differ")
    c01 = csp.Clause((aux, j), frozenset({0b01}))
    c11 = csp.Clause((aux, j), frozenset({0b11}))
    return (c01,) * 6 + (c11,) * 2


def compile_circuit(circuit: Circuit) -> CompiledQaoa:
    """Rewrite ``circuit`` into the post-selected cost-phase sandwich.

    Wire bookkeeping: ``phys[j]`` is the physical qubit currently carrying
    logical wire j.  A qubit's first Hadamard is absorbed into the opening
    layer; every later Hadamard teleports the wire onto a fresh auxiliary
    qubit whose opening-layer Hadamard supplies the |+> the gadget needs.
    Wires whose first gate is diagonal get an H*H pair inserted (one
    absorbed, one teleported).  Every wire is closed with the identity
    written as (closing rotation) * (its inverse); the inverse is H, zq, H,
    so exactly two more Hadamards per wire are teleported and the closing
    rotation lands in the final layer.
    """
    n = circuit.n
    phys = list(range(n))
    started = [False] * n
    closed = [False] * n
    n_total = n
    clauses: list[csp.Clause] = []
    post_qubits: list[int] = []
    phase = 1.0 + 0j

    def teleport(j: int) -> None:
        nonlocal n_total
        aux = n_total
        n_total += 1
        clauses.extend(gadget_clauses(aux, phys[j]))
        post_qubits.append(phys[j])
        phys[j] = aux

    def absorb_or_teleport_h(j: int) -> None:
        if closed[j]:
            raise ValueError(f"gate on wire {j} after its closing rotation")
        if not started[j]:
            started[j] = True  # becomes the opening-layer Hadamard
        else:
            teleport(j)

    def emit_diagonal(g: Gate) -> None:
        nonlocal phase
        for j in g.qubits:
            if closed[j]:
                raise ValueError(f"gate on wire {j} after its closing rotation")
            if not started[j]:
                # leading diagonal: insert H*H, absorbing one and teleporting one
                started[j] = True
                teleport(j)
        mapped = Gate(g.kind, tuple(phys[j] for j in g.qubits))
        cls, factor = gate_to_clauses(mapped)
        clauses.extend(cls)
        phase *= factor

    for g in circuit.gates:
        if g.kind == H:
            absorb_or_teleport_h(g.qubits[0])
        else:
            emit_diagonal(g)

    # close every wire: identity = (closing rotation) * H * zq * H, time-ordered
    # as H, zq, H, with the closing rotation supplied by the final layer
    for j in range(n):
        absorb_or_teleport_h(j)
        emit_diagonal(Gate(_ZQUARTER, (j,)))
        absorb_or_teleport_h(j)
        closed[j] = True

    post_qubits.extend(phys[q] for q in circuit.postselect)
    output_logical = tuple(q for q in range(n) if q not in set(circuit.postselect))
    return CompiledQaoa(
        n_original=n,
        n_total=n_total,
        cost=csp.CspInstance(n_total, tuple(clauses)),
        postselect=statevec.PostSelection(tuple(post_qubits), (0,) * len(post_qubits)),
        output_map=tuple(phys),
        output_logical=output_logical,
        global_phase=phase,
        gadget_count=n_total - n,
    )


def simulate_compiled_state(c: CompiledQaoa) -> tuple[statevec.StateVector, float]:
    """Run the three-layer form, post-select, and reorder to logical outputs."""
    state = statevec.uniform_state(c.n_total)
    statevec.apply_cost_phase(state, c.cost, GAMMA)
    for q in range(c.n_total):
        statevec.apply_single_qubit(state, q, statevec.HTILDE)
    reduced, prob = statevec.postselect(state, c.postselect)
    # remaining physical qubits keep ascending order; route each logical
    # output to its slot
    selected = set(c.postselect.qubits)
    remaining = [q for q in range(c.n_total) if q not in selected]
    rank = {q: i for i, q in enumerate(remaining)}
    sources = [rank[c.output_map[q]] for q in c.output_logical]
    return statevec.permute_qubits(reduced, sources), prob


def simulate_compiled(c: CompiledQaoa) -> np.ndarray:
    state, _ = simulate_compiled_state(c)
    return state.probabilities()


@dataclass(frozen=True)
class EquivalenceReport:
    max_amplitude_deviation: float
    tv_distance: float
    original_mass: float
    compiled_mass: float
    tolerance: float

    @property
    def amplitudes_match(self) -> bool:
        return self.max_amplitude_deviation <= self.tolerance

    @property
    def distributions_match(self) -> bool:
        return self.tv_distance <= self.tolerance

    @property
    def passed(self) -> bool:
        return self.amplitudes_match and self.distributions_match


def verify_equivalence(circuit: Circuit, compiled: CompiledQaoa | None = None,
                       tolerance: float = 1e-9) -> EquivalenceReport:
    """Compare direct simulation against the compiled form.

    Amplitudes are compared after multiplying the compiled state by the
    tracked scalar, so agreement is exact rather than only up to a phase.
    """
    if compiled is None:
        compiled = compile_circuit(circuit)
    ref_state, ref_mass = simulate_circuit_state(circuit)
    out_state, out_mass = simulate_compiled_state(compiled)
    aligned = out_state.amps * compiled.global_phase
    max_dev = float(np.max(np.abs(aligned - ref_state.amps)))
    tv = 0.5 * float(np.sum(np.abs(
        np.abs(aligned) ** 2 - ref_state.probabilities())))
    return EquivalenceReport(
        max_amplitude_deviation=max_dev,
        tv_distance=tv,
        original_mass=ref_mass,
        compiled_mass=out_mass,
        tolerance=tolerance,
    )


def random_circuit(rng: np.random.Generator, n: int, n_gates: int,
                   max_internal_h: int = 3,
                   postselect_count: int = 0) -> Circuit:
    """Random test circuit: opening Hadamards, then diagonals mixed with a
    bounded number of mid-circuit Hadamards (each of which costs one
    auxiliary qubit at compile time)."""
    if n_gates < n:
        raise ValueError("need at least one gate per qubit")
    gates = [h(q) for q in range(n)]
    internal_h = 0
    while len(gates) < n_gates:
        roll = rng.random()
        if roll < 0.25 and internal_h < max_internal_h:
            gates.append(h(int(rng.integers(n))))
            internal_h += 1
        elif roll < 0.6 or n < 2:
            gates.append(t(int(rng.integers(n))))
        else:
            q1, q2 = rng.choice(n, size=2, replace=False)
            gates.append(cp(int(q1), int(q2)))
    post = ()
    if postselect_count:
        post = tuple(int(q) for q in rng.choice(n, size=postselect_count, replace=False))
    return Circuit(n, tuple(gates), post)


# ---------------------------------------------------------------------------
# file I/O

def write_circuit(circuit: Circuit, path) -> None:
    lines = [f"circuit {circuit.n}"]
    for g in circuit.gates:
        lines.append(f"{g.kind} {' '.join(str(q) for q in g.qubits)}")
    lines += [f"post {q} 0" for q in circuit.postselect]
    Path(path).write_text("\n".join(lines) + "\n")


def read_circuit(path) -> Circuit:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or not lines[0].startswith("circuit"):
        raise ValueError(f"{path}: expected header 'circuit <n>'")
    n = int(lines[0].split()[1])
    gates: list[Gate] = []
    post: list[int] = []
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "post":
            if len(parts) != 3 or parts[2] != "0":
                raise ValueError(f"{path}: post lines must read 'post <q> 0'")
            post.append(int(parts[1]))
        elif parts[0] in (H, TPHASE, CPHASE):
            gates.append(Gate(parts[0], tuple(int(q) for q in parts[1:])))
        else:
            raise ValueError(f"{path}: unknown gate line {ln!r}")
    return Circuit(n, tuple(gates), tuple(post))


def write_compiled(c: CompiledQaoa, csp_path, sidecar_path) -> None:
    csp.write_csp(c.cost, csp_path)
    sidecar = {
        "n_original": c.n_original,
        "n_total": c.n_total,
        "postselect": list(c.postselect.qubits),
        "output_map": list(c.output_map),
        "output_logical": list(c.output_logical),
        "global_phase": [c.global_phase.real, c.global_phase.imag],
        "gadget_count": c.gadget_count,
        "gamma": GAMMA,
    }
    Path(sidecar_path).write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def read_compiled(csp_path, sidecar_path) -> CompiledQaoa:
    cost = csp.read_csp(csp_path)
    meta = json.loads(Path(sidecar_path).read_text())
    return CompiledQaoa(
        n_original=meta["n_original"],
        n_total=meta["n_total"],
        cost=cost,
        postselect=statevec.PostSelection(
            tuple(meta["postselect"]), (0,) * len(meta["postselect"])),
        output_map=tuple(meta["output_map"]),
        output_logical=tuple(meta["output_logical"]),
        global_phase=complex(meta["global_phase"][0], meta["global_phase"][1]),
        gadget_count=meta["gadget_count"],
    )
