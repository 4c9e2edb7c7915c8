"""Constraint satisfaction instances built from truth-table clauses.

A clause is a small truth table: an ordered tuple of distinct variable
indices plus the set of local bit-patterns for which the clause counts as
satisfied.  This covers MAX-CUT disagree-clauses, CNF OR-clauses, and the
one/two-variable pattern clauses the circuit compiler emits, without any
formula syntax.

Bit conventions used throughout the package:

* A full assignment ``z`` is an integer whose bit ``q`` holds variable
  ``q`` (variable 0 is the least significant bit).
* A pattern over a clause's variable tuple reads like a ket: the first
  listed variable is the leftmost character of the pattern string and the
  most significant bit of the pattern code.  ``"01"`` on vars ``(a, b)``
  means ``a=0, b=1`` and has code ``0b01 = 1``.
* Text renderings of full assignments put variable 0 first (leftmost).

File format (``.csp``)::

    # comment
    csp <n> <m>
    <k> <v_1> ... <v_k> <pattern_1>,<pattern_2>,...

with one line per clause and patterns as k-bit binary strings.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

#: Largest n for which exhaustive enumeration over 2**n strings is allowed.
EXHAUSTIVE_LIMIT = 24

MAX_CLAUSE_VARS = 3


class EnumerationLimitExceeded(ValueError):
    """Raised when an operation would enumerate more than 2**EXHAUSTIVE_LIMIT strings."""


@dataclass(frozen=True)
class Clause:
    """Truth-table clause over 1 to 3 distinct variables."""

    vars: tuple[int, ...]
    patterns: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(int(v) for v in self.vars))
        object.__setattr__(self, "patterns", frozenset(int(p) for p in self.patterns))
        k = len(self.vars)
        if not 1 <= k <= MAX_CLAUSE_VARS:
            raise ValueError(f"clause must have 1..{MAX_CLAUSE_VARS} variables, got {k}")
        if len(set(self.vars)) != k:
            raise ValueError(f"clause variables must be distinct: {self.vars}")
        if any(v < 0 for v in self.vars):
            raise ValueError(f"negative variable index in {self.vars}")
        if not self.patterns:
            raise ValueError("clause needs at least one satisfying pattern")
        if any(not 0 <= p < 2 ** k for p in self.patterns):
            raise ValueError(f"pattern out of range for {k}-variable clause")

    @property
    def arity(self) -> int:
        return len(self.vars)

    @property
    def is_always_true(self) -> bool:
        return len(self.patterns) == 2 ** self.arity

    def restriction_code(self, z: int) -> int:
        """Pattern code of assignment z restricted to this clause's variables."""
        k = len(self.vars)
        code = 0
        for t, v in enumerate(self.vars):
            code |= ((z >> v) & 1) << (k - 1 - t)
        return code


def pattern_from_string(bits: str) -> int:
    """Parse a pattern string (first listed variable leftmost) to its code."""
    if not bits or any(c not in "01" for c in bits):
        raise ValueError(f"malformed pattern {bits!r}")
    return int(bits, 2)


def pattern_to_string(code: int, k: int) -> str:
    return format(code, f"0{k}b")


def string_to_assignment(bits: str) -> int:
    """Full-register text (variable 0 leftmost) to integer assignment."""
    if any(c not in "01" for c in bits):
        raise ValueError(f"malformed bit-string {bits!r}")
    z = 0
    for q, c in enumerate(bits):
        z |= int(c) << q
    return z


def assignment_to_string(z: int, n: int) -> str:
    return "".join(str((z >> q) & 1) for q in range(n))


@dataclass(frozen=True)
class CspInstance:
    """n variables and a clause multiset; duplicates carry multiplicity."""

    n: int
    clauses: tuple[Clause, ...]

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(self.clauses))
        if self.n < 1:
            raise ValueError("instance needs at least one variable")
        if len(self.clauses) < 1:
            raise ValueError("instance needs at least one clause")
        for c in self.clauses:
            if max(c.vars) >= self.n:
                raise ValueError(f"clause {c.vars} references variable >= n={self.n}")

    @property
    def m(self) -> int:
        return len(self.clauses)


@dataclass(frozen=True)
class CostHistogram:
    """Exact distribution of cost values: counts[v] strings have cost v."""

    n: int
    m: int
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.counts) != self.m + 1:
            raise ValueError("histogram must have one bucket per value 0..m")
        if sum(self.counts) != 2 ** self.n:
            raise ValueError("histogram counts must sum to 2**n")

    def probability(self, v: int) -> Fraction:
        return Fraction(self.counts[v], 2 ** self.n)

    def probabilities(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / 2 ** self.n

    def mean(self) -> float:
        return float(np.dot(np.arange(self.m + 1), self.probabilities()))


def evaluate_clause(clause: Clause, z: int) -> int:
    """1 if the restriction of z to the clause variables is a satisfying pattern."""
    if z < 0:
        raise ValueError("assignment must be non-negative")
    return 1 if clause.restriction_code(z) in clause.patterns else 0


def cost(instance: CspInstance, z: int) -> int:
    """Number of satisfied clauses, counted with multiplicity."""
    if not 0 <= z < 2 ** instance.n:
        raise ValueError(f"assignment {z} out of range for n={instance.n}")
    return sum(evaluate_clause(c, z) for c in instance.clauses)


def maxcut_from_graph(n: int, edges) -> CspInstance:
    """One disagree-clause (patterns 01, 10) per edge."""
    clauses = []
    for (i, j) in edges:
        if i == j:
            raise ValueError(f"self-loop ({i},{j}) not allowed")
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge ({i},{j}) references missing vertex")
        clauses.append(Clause((i, j), frozenset({0b01, 0b10})))
    return CspInstance(n, tuple(clauses))


def ring_maxcut(n: int) -> CspInstance:
    """MAX-CUT on the n-cycle."""
    return maxcut_from_graph(n, [(i, (i + 1) % n) for i in range(n)])


@lru_cache(maxsize=16)
def cost_table(instance: CspInstance, limit: int = EXHAUSTIVE_LIMIT) -> np.ndarray:
    """C(z) for every z in 0..2**n-1, as a read-only int64 array.

    Repeated clauses are folded into one weighted pass, which matters for
    compiled instances where the same pattern clause appears many times.
    """
    if instance.n > limit:
        raise EnumerationLimitExceeded(
            f"n={instance.n} exceeds exhaustive limit {limit}")
    idx = np.arange(2 ** instance.n, dtype=np.int64)
    total = np.zeros(2 ** instance.n, dtype=np.int64)
    for c, weight in Counter(instance.clauses).items():
        k = len(c.vars)
        code = np.zeros(2 ** instance.n, dtype=np.int64)
        for t, v in enumerate(c.vars):
            code |= ((idx >> v) & 1) << (k - 1 - t)
        lut = np.zeros(2 ** k, dtype=np.int64)
        lut[list(c.patterns)] = weight
        total += lut[code]
    total.setflags(write=False)
    return total


def brute_force_histogram(instance: CspInstance,
                          limit: int = EXHAUSTIVE_LIMIT) -> CostHistogram:
    """Exact cost histogram by enumeration of all 2**n assignments."""
    table = cost_table(instance, limit)
    counts = np.bincount(table, minlength=instance.m + 1)
    return CostHistogram(instance.n, instance.m, tuple(int(c) for c in counts))


def c_max(instance: CspInstance) -> int:
    """Largest attainable cost."""
    hist = brute_force_histogram(instance)
    return max(v for v, c in enumerate(hist.counts) if c > 0)


def count_satisfying(instance: CspInstance) -> int:
    """Number of assignments satisfying every clause (cost == m)."""
    return brute_force_histogram(instance).counts[instance.m]


# ---------------------------------------------------------------------------
# file I/O

def write_csp(instance: CspInstance, path) -> None:
    lines = [f"csp {instance.n} {instance.m}"]
    for c in instance.clauses:
        pats = ",".join(pattern_to_string(p, c.arity) for p in sorted(c.patterns))
        lines.append(f"{c.arity} {' '.join(str(v) for v in c.vars)} {pats}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_csp(path) -> CspInstance:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError(f"{path}: empty CSP file")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "csp":
        raise ValueError(f"{path}: expected header 'csp <n> <m>', got {lines[0]!r}")
    n, m = int(head[1]), int(head[2])
    clauses = []
    for ln in lines[1:]:
        parts = ln.split()
        k = int(parts[0])
        if len(parts) != k + 2:
            raise ValueError(f"{path}: malformed clause line {ln!r}")
        vars_ = tuple(int(v) for v in parts[1:1 + k])
        patterns = frozenset(pattern_from_string(p) for p in parts[1 + k].split(","))
        if any(len(pattern_to_string(p, k)) != k for p in patterns):
            raise ValueError(f"{path}: pattern width mismatch in {ln!r}")
        clauses.append(Clause(vars_, patterns))
    if len(clauses) != m:
        raise ValueError(f"{path}: header says m={m} but found {len(clauses)} clauses")
    return CspInstance(n, tuple(clauses))


def read_dimacs(path) -> CspInstance:
    """DIMACS-CNF convenience reader: one OR truth-table clause per CNF clause."""
    n = 0
    clauses: list[Clause] = []
    for raw in Path(path).read_text().splitlines():
        s = raw.strip()
        if not s or s.startswith("c") or s.startswith("%") or s == "0":
            continue
        if s.startswith("p"):
            parts = s.split()
            if len(parts) < 4 or parts[1] != "cnf":
                raise ValueError(f"{path}: unsupported problem line {s!r}")
            n = int(parts[2])
            continue
        lits = [int(x) for x in s.split() if x != "0"]
        if lits:
            clauses.append(_or_clause(lits))
    if n == 0 and clauses:
        n = max(max(c.vars) for c in clauses) + 1
    return CspInstance(n, tuple(clauses))


def _or_clause(lits: list[int]) -> Clause:
    """OR of DIMACS literals (1-based, sign = polarity) as a truth table."""
    polarity: dict[int, set[int]] = {}
    for lit in lits:
        v = abs(lit) - 1
        polarity.setdefault(v, set()).add(1 if lit > 0 else 0)
    for v, pols in polarity.items():
        if len(pols) == 2:  # x OR NOT x: tautology
            return Clause((v,), frozenset({0, 1}))
    vars_ = tuple(polarity)
    k = len(vars_)
    if k > MAX_CLAUSE_VARS:
        raise ValueError(f"CNF clause touches {k} variables; at most {MAX_CLAUSE_VARS} supported")
    # unique falsifying pattern: every literal false
    falsify = 0
    for t, v in enumerate(vars_):
        want = next(iter(polarity[v]))
        falsify |= (1 - want) << (k - 1 - t)
    patterns = frozenset(range(2 ** k)) - {falsify}
    return Clause(vars_, patterns)
