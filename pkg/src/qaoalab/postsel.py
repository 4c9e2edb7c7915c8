"""Post-selected search and counting protocols over marked-item oracles.

Everything here is driven through the state engine: the one-call search,
the overlap preparation whose amplitude pair encodes tan(theta) = M/(N-M),
the squaring gadget that maps (c, s) to (c^2, s^2) up to normalization, and
the threshold/binary-search counter built on top.  Counting never reads the
marked set's size directly; it only evaluates the indicator f(z).

Oracle file format::

    oracle <k>
    <k-bit marked string>     # leftmost character is bit 0
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import csp, statevec


class DegeneratePair(ValueError):
    """Both pair entries vanished; the amplification target is undefined."""


BALANCE_TOL = 1e-6

GREATER = "GREATER"
LESS_OR_EQUAL = "LESS_OR_EQUAL"
EQUAL_BOUNDARY = "EQUAL_BOUNDARY"


@dataclass(frozen=True)
class MarkedOracle:
    """N = 2**k items, of which the strings in ``marked`` are flagged."""

    k: int
    marked: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "marked", frozenset(int(z) for z in self.marked))
        if self.k < 1:
            raise ValueError("domain exponent k must be >= 1")
        if any(not 0 <= z < 2 ** self.k for z in self.marked):
            raise ValueError("marked string out of domain")

    @property
    def domain_size(self) -> int:
        return 2 ** self.k

    def f(self, z: int) -> int:
        return 1 if z in self.marked else 0

    def indicator(self) -> np.ndarray:
        out = np.zeros(2 ** self.k, dtype=np.int64)
        if self.marked:
            out[sorted(self.marked)] = 1
        return out


@dataclass(frozen=True)
class ThetaPair:
    """Normalized nonnegative amplitude pair (cos(theta), sin(theta))."""

    c: float
    s: float

    def __post_init__(self):
        if abs(self.c ** 2 + self.s ** 2 - 1.0) > 1e-10:
            raise ValueError("pair must be normalized")

    def tan(self) -> float:
        return self.s / self.c if self.c != 0 else math.inf


def grover_one_call(oracle: MarkedOracle) -> np.ndarray:
    """Uniform superposition + computed flag, post-selected on flag = 1.

    Returns the exact output distribution over the first register, which is
    uniform on the marked set.  Raises PostSelectionImpossible when nothing
    is marked.
    """
    k = oracle.k
    n = k + 1  # flag is qubit k
    amps = np.zeros(2 ** n, dtype=complex)
    flags = oracle.indicator()
    idx = np.arange(2 ** k)
    amps[idx + (flags << k)] = 2.0 ** (-k / 2)
    state = statevec.StateVector(n, amps)
    reduced, _prob = statevec.postselect(
        state, statevec.PostSelection((k,), (1,)))
    return reduced.probabilities()


def phase_overlap_state(oracle: MarkedOracle) -> ThetaPair:
    """Prepare the pair whose tangent is M/(N-M).

    The sequence runs entirely in the state engine: uniform state with a
    |+> flag, the phase (-1)^(f(z) * flag), projection of the first register
    back onto the uniform state (Hadamards then all-zeros selection), and a
    final Hadamard on the flag.
    """
    k = oracle.k
    n = k + 1
    state = statevec.uniform_state(n)  # |s> |+>
    signs = np.ones(2 ** n)
    flags = oracle.indicator()
    marked_idx = np.nonzero(flags)[0]
    signs[marked_idx + 2 ** k] = -1.0  # flag=1 branch picks up (-1)^f(z)
    state.amps = state.amps * signs
    for q in range(k):
        statevec.apply_single_qubit(state, q, statevec.HADAMARD)
    reduced, _prob = statevec.postselect(
        state, statevec.PostSelection(tuple(range(k)), (0,) * k))
    statevec.apply_single_qubit(reduced, 0, statevec.HADAMARD)
    a0, a1 = reduced.amps
    if abs(a0.imag) > 1e-10 or abs(a1.imag) > 1e-10:
        raise AssertionError("overlap pair should be real")
    c, s = max(a0.real, 0.0), max(a1.real, 0.0)
    norm = math.hypot(c, s)
    return ThetaPair(c / norm, s / norm)


def squaring_step(pair: ThetaPair) -> ThetaPair:
    """One state-engine squaring: two copies, select span{|00>,|11>}, CNOT, discard.

    Used to validate the analytic map behind amplify(); the amplification
    itself exponentiates in log-space.
    """
    c, s = pair.c, pair.s
    amps = np.array([c * c, s * c, c * s, s * s], dtype=complex)
    amps[1] = amps[2] = 0.0  # project onto span{|00>, |11>}
    nrm = np.linalg.norm(amps)
    if nrm < 1e-300:
        raise DegeneratePair("projection annihilated the two-copy state")
    state = statevec.StateVector(2, amps / nrm)
    # CNOT, control qubit 0: swaps |z1=0,z0=1| and |z1=1,z0=1| amplitudes
    state.amps[[1, 3]] = state.amps[[3, 1]]
    reduced, _prob = statevec.postselect(state, statevec.PostSelection((1,), (0,)))
    a0, a1 = reduced.amps.real
    norm = math.hypot(a0, a1)
    return ThetaPair(a0 / norm, a1 / norm)


def amplify(pair: ThetaPair, k_steps: int) -> ThetaPair:
    """k_steps repeated squarings: (c, s) -> (c^(2^k), s^(2^k)) normalized.

    Exponents are carried as log-magnitudes so a heavily unbalanced pair
    renormalizes exactly instead of underflowing to (0, 0).
    """
    if k_steps < 0:
        raise ValueError("k_steps must be >= 0")
    if pair.c == 0.0 and pair.s == 0.0:
        raise DegeneratePair("cannot amplify the zero pair")
    f = 2.0 ** k_steps
    lc = f * math.log(pair.c) if pair.c > 0 else -math.inf
    ls = f * math.log(pair.s) if pair.s > 0 else -math.inf
    top = max(lc, ls)
    wc = math.exp(lc - top)
    ws = math.exp(ls - top)
    norm = math.hypot(wc, ws)
    return ThetaPair(wc / norm, ws / norm)


def _padded_oracle(oracle: MarkedOracle, threshold: int) -> MarkedOracle:
    """Double the domain and mark N - T items in the new half.

    The padded count is M' = M + N - T, so M > T exactly when M' exceeds
    half the padded domain, i.e. when tan(theta') > 1.
    """
    n_domain = oracle.domain_size
    extra = n_domain - threshold
    new_marked = set(oracle.marked)
    new_marked.update(n_domain + i for i in range(extra))
    return MarkedOracle(oracle.k + 1, frozenset(new_marked))


def classify_amplified(pair: ThetaPair) -> str:
    """Which way an amplified pair tipped; balanced pairs sit at the fixed point."""
    if abs(pair.c - pair.s) <= BALANCE_TOL:
        return EQUAL_BOUNDARY
    return GREATER if pair.s > pair.c else LESS_OR_EQUAL


def threshold_test(oracle: MarkedOracle, threshold: int) -> str:
    """Decide M > T versus M <= T using only oracle calls and amplification.

    The padded count sits exactly at the fixed point when M = T; that
    EQUAL_BOUNDARY reading means M == T and therefore resolves to <=.
    """
    if not 0 <= threshold < oracle.domain_size:
        raise ValueError("threshold must satisfy 0 <= T < N")
    padded = _padded_oracle(oracle, threshold)
    pair = phase_overlap_state(padded)
    steps = math.ceil(math.log2(padded.domain_size)) + 4
    outcome = classify_amplified(amplify(pair, steps))
    return LESS_OR_EQUAL if outcome == EQUAL_BOUNDARY else outcome


def count_marked(oracle: MarkedOracle) -> int:
    """Exact M by binary search over thresholds (boundary counts as <=)."""
    lo, hi = 0, oracle.domain_size
    while lo < hi:
        mid = (lo + hi) // 2
        if threshold_test(oracle, mid) == GREATER:
            lo = mid + 1
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# file I/O

def write_oracle(oracle: MarkedOracle, path) -> None:
    lines = [f"oracle {oracle.k}"]
    lines += [csp.assignment_to_string(z, oracle.k) for z in sorted(oracle.marked)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_oracle(path) -> MarkedOracle:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or not lines[0].startswith("oracle"):
        raise ValueError(f"{path}: expected header 'oracle <k>'")
    k = int(lines[0].split()[1])
    marked = set()
    for ln in lines[1:]:
        if len(ln) != k:
            raise ValueError(f"{path}: marked string {ln!r} is not {k} bits")
        marked.add(csp.string_to_assignment(ln))
    return MarkedOracle(k, frozenset(marked))
