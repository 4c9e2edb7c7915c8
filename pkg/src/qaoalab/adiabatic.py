"""Interpolating transverse-field dynamics and its classical samplers.

The operator family is H(s) = (1-s)*(-B) + s*(-C) with B the sum of
single-qubit bit-flips and C the clause-count operator: every off-diagonal
entry is -(1-s) on Hamming-distance-1 pairs, so the matrix stays stoquastic
for the whole interpolation and sign-problem-free sampling applies.

Worldline convention: a configuration is (z, x_1..x_L), i.e. L+1 beads on a
cycle (z sits at both ends), so the chain has ell = L+1 links.  Each link
(a, b) carries the split-slice factor

    prod_i K(a_i, b_i) * exp(cost_coeff * C(b)),
    K(equal) = cosh(tau), K(different) = sinh(tau),

with tau = beta*(1-s)/ell and cost_coeff = beta*s/ell.  Using ell = L+1
slice factors of e^{-beta*H/ell} makes the unsplit worldline sum reproduce
<z| e^{-beta*H} |z> exactly; the split factors above converge to it as L
grows.  All factors are strictly positive for s < 1, so single-bit-flip
chains are irreducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from . import csp, statevec

#: Largest n for dense-operator work (spectra, Gibbs, Schroedinger stepping).
DENSE_LIMIT = 12


class AttemptsExhausted(RuntimeError):
    """Rejection sampler hit its attempt budget without an acceptance."""


class StepSizeInstability(RuntimeError):
    """Integrator norm drifted; the time step is too coarse."""


def hamiltonian_dense(instance: csp.CspInstance, s: float) -> np.ndarray:
    """Dense real-symmetric matrix of H(s); n is capped at DENSE_LIMIT."""
    if instance.n > DENSE_LIMIT:
        raise ValueError(f"dense operator limited to n <= {DENSE_LIMIT}")
    if not 0.0 <= s <= 1.0:
        raise ValueError("schedule point s must lie in [0, 1]")
    n = instance.n
    dim = 2 ** n
    table = csp.cost_table(instance)
    mat = np.zeros((dim, dim))
    mat[np.diag_indices(dim)] = -s * table
    idx = np.arange(dim)
    for q in range(n):
        mat[idx ^ (1 << q), idx] += -(1.0 - s)
    return mat


def stoquastic_check(matrix: np.ndarray, tol: float = 1e-12) -> bool:
    """True iff every off-diagonal entry is <= tol."""
    matrix = np.asarray(matrix)
    off = matrix - np.diag(np.diag(matrix))
    return bool(np.all(off <= tol))


@dataclass(frozen=True)
class SpectralData:
    ground_energy: float
    gap: float
    ground_state: statevec.StateVector


def ground_state(instance: csp.CspInstance, s: float) -> SpectralData:
    """Lowest eigenpair of H(s); the ground vector is sign-fixed nonnegative
    (legitimate for s < 1, where the matrix is irreducible and stoquastic)."""
    mat = hamiltonian_dense(instance, s)
    vals, vecs = scipy.linalg.eigh(mat, subset_by_index=[0, 1])
    vec = vecs[:, 0]
    dominant = vec[np.argmax(np.abs(vec))]
    if dominant < 0:
        vec = -vec
    return SpectralData(
        ground_energy=float(vals[0]),
        gap=float(vals[1] - vals[0]),
        ground_state=statevec.StateVector(instance.n, vec.astype(complex)),
    )


def gibbs_distribution(instance: csp.CspInstance, s: float, beta: float) -> np.ndarray:
    """Normalized diagonal of e^{-beta*H(s)}."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    mat = hamiltonian_dense(instance, s)
    vals, vecs = scipy.linalg.eigh(mat)
    weights = np.exp(-beta * (vals - vals[0]))
    diag = (vecs ** 2) @ weights
    return diag / diag.sum()


# ---------------------------------------------------------------------------
# worldlines and Path-Integral Monte Carlo

@dataclass(frozen=True)
class Worldline:
    z: int
    x: tuple[int, ...]

    def beads(self) -> tuple[int, ...]:
        return (self.z,) + self.x


@dataclass(frozen=True)
class PimcConfig:
    beta: float
    L: int
    s: float
    sweeps: int
    seed: int

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.L < 2:
            raise ValueError("need at least two intermediate beads")
        if not 0.0 <= self.s < 1.0:
            raise ValueError("worldline sampling needs 0 <= s < 1")
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")

    @property
    def ell(self) -> int:
        """Number of slice links (beads on the cycle)."""
        return self.L + 1

    @property
    def tau(self) -> float:
        return self.beta * (1.0 - self.s) / self.ell

    @property
    def cost_coeff(self) -> float:
        return self.beta * self.s / self.ell

    def log_w_max(self, instance: csp.CspInstance) -> float:
        """Cheap provable bound: every kernel factor is <= cosh(tau) and the
        cost factors multiply to at most e^{beta*s*m}."""
        return instance.n * self.ell * math.log(math.cosh(self.tau)) \
            + self.beta * self.s * instance.m


def transfer_weight(w: Worldline, instance: csp.CspInstance,
                    config: PimcConfig) -> float:
    """log of the worldline weight (always finite for s < 1)."""
    if len(w.x) != config.L:
        raise ValueError(f"worldline carries {len(w.x)} beads, config says L={config.L}")
    beads = w.beads()
    if any(not 0 <= b < 2 ** instance.n for b in beads):
        raise ValueError("bead out of range")
    lc = math.log(math.cosh(config.tau))
    ls = math.log(math.sinh(config.tau))
    total = 0.0
    for i in range(config.ell):
        a = beads[i]
        b = beads[(i + 1) % config.ell]
        d = (a ^ b).bit_count()
        total += d * ls + (instance.n - d) * lc
        total += config.cost_coeff * csp.cost(instance, b)
    return total


def flip_log_ratio(w: Worldline, instance: csp.CspInstance, config: PimcConfig,
                   bead: int, bit: int) -> float:
    """log w(flipped)/w(current) for one bead/bit flip, from local factors only:
    the two adjacent kernel links and the bead's own cost factor."""
    beads = w.beads()
    ell = config.ell
    if not 0 <= bead < ell:
        raise ValueError("bead index out of range")
    old = beads[bead]
    new = old ^ (1 << bit)
    log_tanh = math.log(math.tanh(config.tau))
    total = 0.0
    for nb in (beads[(bead - 1) % ell], beads[(bead + 1) % ell]):
        was_equal = ((old ^ nb) >> bit) & 1 == 0
        total += log_tanh if was_equal else -log_tanh
    total += config.cost_coeff * (csp.cost(instance, new) - csp.cost(instance, old))
    return total


class _SweepPlan:
    """Precomputed index tables for vectorized single-bit Metropolis sweeps.

    One sweep makes n*(L+1) proposals.  They are evaluated in batches over
    independent sets: bead groups that are non-adjacent on the cycle, crossed
    with variable classes that share no clause, so every batched acceptance
    ratio is exact.
    """

    def __init__(self, instance: csp.CspInstance, config: PimcConfig):
        self.n = instance.n
        self.ell = config.ell
        self.log_tanh2 = 2.0 * math.log(math.tanh(config.tau))
        self.cost_coeff = config.cost_coeff
        self.pow2 = (1 << np.arange(self.n)).astype(np.int64)
        groups = self._bead_groups(self.ell)
        classes = self._variable_classes(instance)
        # one prebuilt batch per (class, bead-group) pair, scanned in fixed order
        self.batches = []
        self.column_tables = []
        for cls in classes:
            tab = self._class_tables(instance, cls)
            self.column_tables.append({"bits": cls, **tab})
            for g in groups:
                gm = (g - 1) % self.ell
                gp = (g + 1) % self.ell
                self.batches.append({
                    "ix": np.ix_(g, cls),
                    "ix_m": np.ix_(gm, cls),
                    "ix_p": np.ix_(gp, cls),
                    "rows": g,
                    **tab,
                })

    @staticmethod
    def _bead_groups(ell: int) -> list[np.ndarray]:
        evens = np.arange(0, ell - 1 if ell % 2 else ell, 2)
        odds = np.arange(1, ell, 2)
        groups = [evens, odds]
        if ell % 2:
            groups.append(np.array([ell - 1]))
        return [g for g in groups if len(g)]

    @staticmethod
    def _variable_classes(instance: csp.CspInstance) -> list[np.ndarray]:
        n = instance.n
        adj: list[set[int]] = [set() for _ in range(n)]
        for c in instance.clauses:
            for a in c.vars:
                for b in c.vars:
                    if a != b:
                        adj[a].add(b)
        color = [-1] * n
        for v in range(n):
            taken = {color[u] for u in adj[v] if color[u] >= 0}
            k = 0
            while k in taken:
                k += 1
            color[v] = k
        return [np.array([v for v in range(n) if color[v] == k])
                for k in range(max(color) + 1)]

    def _class_tables(self, instance: csp.CspInstance, cls: np.ndarray):
        """Gather tables for cost changes under flips of this class's bits.

        dlut[offset + code] holds sat(code with the bit flipped) - sat(code),
        so one gather per clause slot yields the cost delta directly.
        """
        per_bit = [[c for c in instance.clauses if v in c.vars] for v in cls]
        width = max(max((len(lst) for lst in per_bit), default=0), 1)
        dluts = [np.zeros(1, dtype=np.int8)]  # slot 0: padding (no effect)
        offsets = np.zeros((len(cls), width), dtype=np.int64)
        var_idx = np.zeros((len(cls), width, csp.MAX_CLAUSE_VARS), dtype=np.int64)
        mult = np.zeros((len(cls), width, csp.MAX_CLAUSE_VARS), dtype=np.int64)
        pos = 1
        for bi, (v, clauses) in enumerate(zip(cls, per_bit)):
            for ci, clause in enumerate(clauses):
                k = clause.arity
                lut = np.zeros(2 ** k, dtype=np.int8)
                lut[list(clause.patterns)] = 1
                t_v = clause.vars.index(v)
                fm = 1 << (k - 1 - t_v)
                codes = np.arange(2 ** k)
                dluts.append(lut[codes ^ fm] - lut[codes])
                offsets[bi, ci] = pos
                pos += 2 ** k
                for t, var in enumerate(clause.vars):
                    var_idx[bi, ci, t] = var
                    mult[bi, ci, t] = 1 << (k - 1 - t)
        return {
            "dlut": np.concatenate(dluts),
            "addr": offsets,
            "var_idx": var_idx,
            "mult": mult,
        }


@lru_cache(maxsize=8)
def _plan(instance: csp.CspInstance, beta: float, L: int, s: float) -> _SweepPlan:
    return _SweepPlan(instance, PimcConfig(beta=beta, L=L, s=s, sweeps=1, seed=0))


def _sweep(bits: np.ndarray, plan: _SweepPlan, rng: np.random.Generator) -> tuple[int, int]:
    """One in-place Metropolis sweep; returns (accepted, proposed)."""
    accepted = 0
    proposed = 0
    coeff = plan.cost_coeff
    logt2 = plan.log_tanh2
    for b in plan.batches:
        cur = bits[b["ix"]]                      # (G, B)
        eq = (bits[b["ix_m"]] == cur).astype(np.int16)
        eq += bits[b["ix_p"]] == cur
        rows = bits[b["rows"]]                   # (G, n)
        codes = (rows[:, b["var_idx"]] * b["mult"]).sum(axis=3)
        dcost = np.take(b["dlut"], b["addr"] + codes).sum(axis=2)
        dlogw = logt2 * (eq - 1) + coeff * dcost
        acc = np.log(rng.random(size=dlogw.shape)) < dlogw
        bits[b["ix"]] = cur ^ acc
        accepted += int(acc.sum())
        proposed += acc.size
    return accepted, proposed


def _column_sweep(bits: np.ndarray, plan: _SweepPlan,
                  rng: np.random.Generator) -> tuple[int, int]:
    """Lazy whole-column flip proposals (bit i on every bead at once).

    A column flip leaves every kernel link unchanged, so its ratio is the
    pure cost change; these moves restore mixing between locked worldlines
    when tau is small.  Each column is proposed with probability 1/2 (the
    lazy step keeps the accepted walk diffusive when nearly every ratio is
    1, e.g. at tiny beta) and accepted by the plain Metropolis rule.
    """
    accepted = 0
    proposed = 0
    coeff = plan.cost_coeff
    for tab in plan.column_tables:
        codes = (bits[:, tab["var_idx"]] * tab["mult"]).sum(axis=3)
        dcost = np.take(tab["dlut"], tab["addr"] + codes).sum(axis=(0, 2))
        propose = rng.random(size=dcost.shape) < 0.5
        acc = propose & (np.log(rng.random(size=dcost.shape)) < coeff * dcost)
        if acc.any():
            flip_cols = tab["bits"][acc]
            bits[:, flip_cols] ^= 1
        accepted += int(acc.sum())
        proposed += acc.size
    return accepted, proposed


def _worldline_to_bits(w: Worldline, n: int) -> np.ndarray:
    beads = np.array(w.beads(), dtype=np.int64)
    return ((beads[:, None] >> np.arange(n)) & 1).astype(np.uint8)


def _bits_to_worldline(bits: np.ndarray) -> Worldline:
    pow2 = (1 << np.arange(bits.shape[1])).astype(np.int64)
    vals = bits.astype(np.int64) @ pow2
    return Worldline(int(vals[0]), tuple(int(v) for v in vals[1:]))


def metropolis_sweep(w: Worldline, instance: csp.CspInstance, config: PimcConfig,
                     rng: np.random.Generator) -> Worldline:
    """One sweep of n*(L+1) single-bit flip proposals with local ratios."""
    plan = _plan(instance, config.beta, config.L, config.s)
    bits = _worldline_to_bits(w, instance.n)
    _sweep(bits, plan, rng)
    return _bits_to_worldline(bits)


@dataclass(frozen=True)
class PimcResult:
    marginal: np.ndarray
    counts: np.ndarray
    acceptance_rate: float
    autocorrelation_time: float
    sweeps: int
    burn_in: int


def pimc_sample(instance: csp.CspInstance, config: PimcConfig,
                column_moves: bool = True) -> PimcResult:
    """Burn in for sweeps/5, then record the z bead once per sweep.

    Each recorded sweep is the contractual n*(L+1) single-bit pass; by
    default it is chased with n column-flip proposals, which keep the chain
    mixing when small tau locks the beads together (both move classes leave
    the worldline distribution invariant).
    """
    plan = _plan(instance, config.beta, config.L, config.s)
    rng = np.random.default_rng(config.seed)
    bits = rng.integers(0, 2, size=(config.ell, instance.n), dtype=np.uint8)
    burn = config.sweeps // 5
    for _ in range(burn):
        _sweep(bits, plan, rng)
        if column_moves:
            _column_sweep(bits, plan, rng)
    counts = np.zeros(2 ** instance.n, dtype=np.int64)
    table = csp.cost_table(instance)
    cost_series = np.empty(config.sweeps, dtype=np.int16)
    accepted = proposed = 0
    pow2 = plan.pow2
    for i in range(config.sweeps):
        a, p = _sweep(bits, plan, rng)
        if column_moves:
            a2, p2 = _column_sweep(bits, plan, rng)
            a, p = a + a2, p + p2
        accepted += a
        proposed += p
        z = int(bits[0].astype(np.int64) @ pow2)
        counts[z] += 1
        cost_series[i] = table[z]
    return PimcResult(
        marginal=counts / config.sweeps,
        counts=counts,
        acceptance_rate=accepted / proposed,
        autocorrelation_time=_integrated_autocorrelation(cost_series),
        sweeps=config.sweeps,
        burn_in=burn,
    )


def _integrated_autocorrelation(series: np.ndarray, max_lag: int = 1000) -> float:
    x = series.astype(float)
    x = x - x.mean()
    var = float(np.dot(x, x))
    if var == 0.0 or len(x) < 4:
        return 1.0
    tau = 1.0
    limit = min(max_lag, len(x) - 1)
    for lag in range(1, limit):
        rho = float(np.dot(x[:-lag], x[lag:])) / var
        if rho < 0.05:
            break
        tau += 2.0 * rho
    return tau


@dataclass(frozen=True)
class SqaStep:
    s: float
    best_cost: int
    acceptance_rate: float
    mean_cost: float


@dataclass(frozen=True)
class SqaResult:
    best_z: int
    best_cost: int
    trajectory: tuple[SqaStep, ...]


def sqa_anneal(instance: csp.CspInstance, schedule, per_step_sweeps: int,
               config: PimcConfig) -> SqaResult:
    """Anneal along an increasing schedule, keeping the worldline warm between
    steps, and report the best-cost z bead seen."""
    schedule = [float(s) for s in schedule]
    if not schedule:
        raise ValueError("schedule must be nonempty")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly increasing")
    if not all(0.0 <= s < 1.0 for s in schedule):
        raise ValueError("schedule points must lie in [0, 1)")
    if per_step_sweeps < 1:
        raise ValueError("per_step_sweeps must be >= 1")
    rng = np.random.default_rng(config.seed)
    bits = rng.integers(0, 2, size=(config.ell, instance.n), dtype=np.uint8)
    table = csp.cost_table(instance)
    pow2 = (1 << np.arange(instance.n)).astype(np.int64)
    best_z = int(bits[0].astype(np.int64) @ pow2)
    best_cost = int(table[best_z])
    steps = []
    for s in schedule:
        plan = _plan(instance, config.beta, config.L, s)
        accepted = proposed = 0
        cost_sum = 0
        for _ in range(per_step_sweeps):
            a, p = _sweep(bits, plan, rng)
            a2, p2 = _column_sweep(bits, plan, rng)
            a, p = a + a2, p + p2
            accepted += a
            proposed += p
            z = int(bits[0].astype(np.int64) @ pow2)
            c = int(table[z])
            cost_sum += c
            if c > best_cost:
                best_cost = c
                best_z = z
        steps.append(SqaStep(
            s=s,
            best_cost=best_cost,
            acceptance_rate=accepted / proposed,
            mean_cost=cost_sum / per_step_sweeps,
        ))
    return SqaResult(best_z=best_z, best_cost=best_cost, trajectory=tuple(steps))


def rejection_sample_many(instance: csp.CspInstance, config: PimcConfig,
                          count: int, max_attempts: int,
                          log_w_max_extra: float = 0.0
                          ) -> tuple[list[Worldline], int]:
    """Draw uniform worldlines, accept each with probability w/w_max, until
    ``count`` acceptances.

    Accepted samples are exactly distributed as the normalized weight; any
    nonnegative slack added to the bound changes only the attempt count.
    Returns (samples, attempts consumed up to and including the last
    acceptance).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    if log_w_max_extra < 0:
        raise ValueError("bound slack must be nonnegative")
    rng = np.random.default_rng(config.seed)
    n, ell = instance.n, config.ell
    log_wmax = config.log_w_max(instance) + log_w_max_extra
    lc = math.log(math.cosh(config.tau))
    ls = math.log(math.sinh(config.tau))
    table = csp.cost_table(instance)
    samples: list[Worldline] = []
    attempts = 0
    used = 0
    batch = 4096
    while attempts < max_attempts:
        size = min(batch, max_attempts - attempts)
        beads = rng.integers(0, 2 ** n, size=(size, ell), dtype=np.int64)
        nxt = np.roll(beads, -1, axis=1)
        diff = beads ^ nxt
        dcounts = np.zeros_like(diff)
        for q in range(n):
            dcounts += (diff >> q) & 1
        logw = (dcounts * ls + (n - dcounts) * lc).sum(axis=1) \
            + config.cost_coeff * table[nxt].sum(axis=1)
        u = rng.random(size)
        acc = np.nonzero(np.log(u) < logw - log_wmax)[0]
        for hit in acc:
            samples.append(Worldline(int(beads[hit][0]),
                                     tuple(int(v) for v in beads[hit][1:])))
            if len(samples) == count:
                used = attempts + int(hit) + 1
                return samples, used
        attempts += size
    raise AttemptsExhausted(
        f"only {len(samples)} acceptances within {max_attempts} attempts")


def rejection_sample(instance: csp.CspInstance, config: PimcConfig,
                     max_attempts: int,
                     log_w_max_extra: float = 0.0) -> tuple[Worldline, int]:
    """One exactly-distributed worldline plus the attempt count it cost.

    The expected count scales like w_max * 2^{n(L+1)} / sum(w), typically
    astronomical; that is the point of the construction, not a defect.
    """
    samples, attempts = rejection_sample_many(
        instance, config, 1, max_attempts, log_w_max_extra)
    return samples[0], attempts


# ---------------------------------------------------------------------------
# dense oracles for the Trotterized chain

def trotter_transfer_matrix(instance: csp.CspInstance, config: PimcConfig) -> np.ndarray:
    """Dense one-link matrix T[a, b] = <a|e^{tau*B}|b> * e^{cost_coeff*C(b)}."""
    if instance.n > DENSE_LIMIT:
        raise ValueError(f"dense operator limited to n <= {DENSE_LIMIT}")
    k1 = np.array([[math.cosh(config.tau), math.sinh(config.tau)],
                   [math.sinh(config.tau), math.cosh(config.tau)]])
    kernel = np.array([[1.0]])
    for _ in range(instance.n):
        kernel = np.kron(kernel, k1)
    table = csp.cost_table(instance)
    return kernel * np.exp(config.cost_coeff * table)[None, :]


def trotter_marginal_dense(instance: csp.CspInstance, config: PimcConfig) -> np.ndarray:
    """Exact z-marginal of the Trotterized worldline distribution,
    diag(T^ell)/tr(T^ell), with progressive rescaling for stability."""
    t_mat = trotter_transfer_matrix(instance, config)
    acc = np.eye(t_mat.shape[0])
    for _ in range(config.ell):
        acc = acc @ t_mat
        acc /= acc.max()
    diag = np.diag(acc)
    return diag / diag.sum()


def dense_slice_matrix(instance: csp.CspInstance, s: float, beta: float,
                       slices: int) -> np.ndarray:
    """e^{-(beta/slices) * H(s)} as a dense matrix (the unsplit slice factor)."""
    return scipy.linalg.expm(-(beta / slices) * hamiltonian_dense(instance, s))


# ---------------------------------------------------------------------------
# Schroedinger evolution

def adiabatic_evolve(instance: csp.CspInstance, total_time: float,
                     dt: float = 0.005) -> statevec.StateVector:
    """Integrate i d/dt psi = H(t/T) psi from the uniform state.

    Classic fourth-order stepping on the matrix-free action of H(s); the
    norm is restored after every step and a drift beyond 1e-3 (a sign the
    step is unstable at the given dt) raises StepSizeInstability.
    """
    if instance.n > DENSE_LIMIT:
        raise ValueError(f"evolution limited to n <= {DENSE_LIMIT}")
    if total_time < 0:
        raise ValueError("total_time must be nonnegative")
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = instance.n
    table = csp.cost_table(instance).astype(float)
    psi = statevec.uniform_state(n).amps
    if total_time == 0:
        return statevec.StateVector(n, psi)

    def b_apply(vec: np.ndarray) -> np.ndarray:
        a = vec.reshape([2] * n)
        out = np.zeros_like(a)
        for q in range(n):
            out += np.flip(a, axis=n - 1 - q)
        return out.reshape(-1)

    def rhs(t: float, vec: np.ndarray) -> np.ndarray:
        s = t / total_time
        return -1j * (-s * (table * vec) - (1.0 - s) * b_apply(vec))

    steps = max(1, math.ceil(total_time / dt))
    step = total_time / steps
    for k in range(steps):
        t0 = k * step
        k1 = rhs(t0, psi)
        k2 = rhs(t0 + step / 2, psi + step / 2 * k1)
        k3 = rhs(t0 + step / 2, psi + step / 2 * k2)
        k4 = rhs(t0 + step, psi + step * k3)
        psi = psi + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        nrm = np.linalg.norm(psi)
        if abs(nrm - 1.0) > 1e-3:
            raise StepSizeInstability(
                f"norm drifted to {nrm:.6f} at t={t0 + step:.3f}; reduce dt")
        psi = psi / nrm
    return statevec.StateVector(n, psi)
