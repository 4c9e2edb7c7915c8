"""Exact model counting from cost-phase matrix elements, plus the
post-selected multiplicative-error sandwich check.

The counting pipeline evaluates e_r = <s| exp(-2*pi*i*r*C/D) |s> for
r = 0..m with modulus D = m+1, inverts the discrete Fourier transform to
recover the cost histogram, and reads off the number of fully satisfying
assignments.  The modulus must exceed m: with D = m the characters of
v = 0 and v = m coincide, so p_m could not be separated from p_0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import csp, statevec


class NonRealRecovery(ValueError):
    """Inverse transform produced imaginary parts beyond tolerance."""


class RoundingFailure(ValueError):
    """A recovered probability is too far from the exact 2**-n lattice."""


IMAG_TOL = 1e-8
LATTICE_TOL = 1e-8
COUNT_TOL = 1e-6


@dataclass(frozen=True)
class MatrixElementSeries:
    instance: csp.CspInstance
    samples: tuple[complex, ...]
    denominator: int

    def __post_init__(self):
        if self.denominator < 1:
            raise ValueError("denominator must be positive")
        if abs(self.samples[0] - 1.0) > 1e-12:
            raise ValueError("r=0 sample must equal 1")
        if any(abs(e) > 1 + 1e-12 for e in self.samples):
            raise ValueError("matrix elements cannot exceed unit modulus")

    @property
    def r_count(self) -> int:
        return len(self.samples)


def matrix_element(instance: csp.CspInstance, r: int, denominator: int) -> complex:
    """<s| exp(-2*pi*i*r*C/denominator) |s>, evaluated through the state engine."""
    gamma = 2 * np.pi * r / denominator
    state = statevec.uniform_state(instance.n)
    statevec.apply_cost_phase(state, instance, gamma)
    return statevec.inner_product(statevec.uniform_state(instance.n), state)


def matrix_element_series(instance: csp.CspInstance) -> MatrixElementSeries:
    """The m+1 samples r = 0..m at modulus m+1 (the square, invertible choice)."""
    d = instance.m + 1
    samples = tuple(matrix_element(instance, r, d) for r in range(d))
    return MatrixElementSeries(instance, samples, d)


def recover_histogram(series: MatrixElementSeries) -> csp.CostHistogram:
    """Invert the transform and snap probabilities onto the 2**-n lattice."""
    inst = series.instance
    d = series.denominator
    if series.r_count != d or d != inst.m + 1:
        raise ValueError("need exactly m+1 samples at modulus m+1 to invert")
    e = np.asarray(series.samples, dtype=complex)
    v = np.arange(d)
    r = np.arange(d)
    # p_v = (1/D) sum_r e_r exp(+2*pi*i*r*v/D)
    phases = np.exp(2j * np.pi * np.outer(v, r) / d)
    p = phases @ e / d
    if np.max(np.abs(p.imag)) > IMAG_TOL:
        raise NonRealRecovery(
            f"imaginary residue {np.max(np.abs(p.imag)):.3e} exceeds {IMAG_TOL}")
    scaled = p.real * 2 ** inst.n
    counts = np.rint(scaled)
    if np.max(np.abs(scaled - counts)) > LATTICE_TOL * 2 ** inst.n:
        raise RoundingFailure(
            f"recovered probabilities stray {np.max(np.abs(scaled - counts)) / 2 ** inst.n:.3e} "
            f"from the 2**-{inst.n} lattice")
    return csp.CostHistogram(inst.n, inst.m, tuple(int(c) for c in counts))


def fourier_count(instance: csp.CspInstance) -> int:
    """Number of assignments with cost m, read off the recovered histogram."""
    series = matrix_element_series(instance)
    inst = series.instance
    d = series.denominator
    e = np.asarray(series.samples, dtype=complex)
    p_m = (e * np.exp(2j * np.pi * inst.m * np.arange(d) / d)).sum() / d
    scaled = p_m.real * 2 ** inst.n
    count = int(np.rint(scaled))
    if abs(scaled - count) > COUNT_TOL * 2 ** inst.n:
        raise RoundingFailure(
            f"p_m * 2**n = {scaled!r} is not within {COUNT_TOL}*2**n of an integer")
    # full inversion also validates realness and the lattice constraint
    recovered = recover_histogram(series)
    if recovered.counts[inst.m] != count:
        raise RoundingFailure("direct and full-inversion counts disagree")
    return count


def postselect_distribution(joint: np.ndarray) -> tuple[float, float]:
    """Condition a (2, 2**n) joint distribution on the second register being all zeros."""
    joint = np.asarray(joint, dtype=float)
    if joint.ndim != 2 or joint.shape[0] != 2:
        raise ValueError("joint must have shape (2, 2**n)")
    if abs(joint.sum() - 1.0) > 1e-10:
        raise ValueError("joint distribution must sum to 1")
    if np.any(joint < -1e-15):
        raise ValueError("joint distribution has negative entries")
    mass = joint[0, 0] + joint[1, 0]
    if mass <= 0.0:
        raise ValueError("conditioning outcome has zero probability")
    return float(joint[0, 0] / mass), float(joint[1, 0] / mass)


@dataclass(frozen=True)
class BoundReport:
    """Outcome of the pointwise multiplicative-error comparison."""

    epsilon: float
    bound_holds: bool
    max_relative_error: float
    p_post: tuple[float, float]
    q_post: tuple[float, float]
    sandwich_holds: bool
    lower_factor: float
    upper_factor: float
    yes_threshold_ok: bool
    no_threshold_ok: bool

    #: decision thresholds implied by eps=0.1 around the 2/3 and 1/3 promises
    YES_CUTOFF = 0.54
    NO_CUTOFF = 0.41


def multiplicative_bound_check(p: np.ndarray, q: np.ndarray,
                               eps: float = 0.1) -> BoundReport:
    """Check |p - q| <= eps*q pointwise and what it forces after conditioning.

    When the pointwise bound holds, both conditioned outcomes must sit in the
    sandwich [(1-eps)/(1+eps), (1+eps)/(1-eps)] * q_post, which at eps=0.1
    turns a >=2/3 promise into p_post(1) >= 0.54 and a <=1/3 promise into
    p_post(1) <= 0.41.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("p and q must have the same support")
    diff = np.abs(p - q)
    ok = diff <= eps * q + 1e-15
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(q > 0, diff / np.where(q > 0, q, 1.0), np.where(diff > 0, np.inf, 0.0))
    bound_holds = bool(np.all(ok))
    p_post = postselect_distribution(p)
    q_post = postselect_distribution(q)
    lo = (1 - eps) / (1 + eps)
    hi = (1 + eps) / (1 - eps)
    sandwich = all(
        lo * qv - 1e-12 <= pv <= hi * qv + 1e-12
        for pv, qv in zip(p_post, q_post))
    yes_ok = (q_post[1] < 2 / 3 - 1e-12) or (p_post[1] >= BoundReport.YES_CUTOFF)
    no_ok = (q_post[1] > 1 / 3 + 1e-12) or (p_post[1] <= BoundReport.NO_CUTOFF)
    return BoundReport(
        epsilon=eps,
        bound_holds=bound_holds,
        max_relative_error=float(np.max(rel)),
        p_post=p_post,
        q_post=q_post,
        sandwich_holds=bool(sandwich),
        lower_factor=lo,
        upper_factor=hi,
        yes_threshold_ok=bool(yes_ok),
        no_threshold_ok=bool(no_ok),
    )


def perturbed_within_ball(q: np.ndarray, eps: float, rng: np.random.Generator) -> np.ndarray:
    """A random p with sum 1 and |p - q| <= eps*q pointwise.

    Draws a direction u in [-1,1]^N, recenters it against q so the total mass
    is unchanged, and halves it so the recentered values stay inside [-1,1].
    """
    q = np.asarray(q, dtype=float)
    u = rng.uniform(-1.0, 1.0, size=q.shape)
    u = (u - float((q * u).sum())) / 2.0
    return q * (1.0 + eps * u)
