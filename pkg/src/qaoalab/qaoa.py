"""Alternating cost-phase / mixer circuits, their objective, and angle search."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import csp, statevec

GOLDEN_TOL = 1e-6
_INVPHI = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class Angles:
    """2p angles; gamma reduced mod 2*pi, beta mod pi (both shifts are global phases
    for integer-valued cost operators)."""

    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self):
        g = tuple(float(x) % (2 * math.pi) for x in self.gammas)
        b = tuple(float(x) % math.pi for x in self.betas)
        object.__setattr__(self, "gammas", g)
        object.__setattr__(self, "betas", b)
        if len(self.gammas) != len(self.betas):
            raise ValueError("need the same number of gammas and betas")
        if len(self.gammas) < 1:
            raise ValueError("need at least one layer")

    @property
    def p(self) -> int:
        return len(self.gammas)

    def padded(self) -> "Angles":
        """Append a zero layer (the p+1 objective then equals the p objective)."""
        return Angles(self.gammas + (0.0,), self.betas + (0.0,))


def build_state(instance: csp.CspInstance, angles: Angles) -> statevec.StateVector:
    state = statevec.uniform_state(instance.n)
    for g, b in zip(angles.gammas, angles.betas):
        statevec.apply_cost_phase(state, instance, g)
        statevec.apply_mixer(state, b)
    return state


def objective(instance: csp.CspInstance, angles: Angles) -> float:
    return statevec.expectation_cost(build_state(instance, angles), instance)


def output_distribution(instance: csp.CspInstance, angles: Angles) -> np.ndarray:
    return build_state(instance, angles).probabilities()


def _batched_mixer(amps: np.ndarray, betas: np.ndarray, n: int) -> np.ndarray:
    """Apply exp(-i*beta*X)^(x n) to a batch of states, one beta per row."""
    rows = amps.shape[0]
    c = np.cos(betas)[:, None, None]
    s = np.sin(betas)[:, None, None]
    a = amps
    for q in range(n):
        a = a.reshape(rows, -1, 2, 2 ** q)
        x0, x1 = a[:, :, 0, :], a[:, :, 1, :]
        a = np.stack([c * x0 - 1j * s * x1, -1j * s * x0 + c * x1], axis=2)
    return a.reshape(rows, 2 ** n)


def grid_search(instance: csp.CspInstance, p: int = 1,
                resolution: int = 64) -> tuple[Angles, float]:
    """Best point of a uniform (gamma, beta) grid; p=1 only.

    Tie-break is lexicographic in (gamma, beta): the scan is row-major with
    gamma outermost, so the first maximum wins.  Doubling the resolution
    keeps every coarse grid point, so the best value cannot decrease.
    """
    if p != 1:
        raise ValueError("grid search is 2-D and only supports p=1")
    if resolution < 1:
        raise ValueError("resolution must be positive")
    table = csp.cost_table(instance, limit=statevec.STATE_CEILING).astype(float)
    gammas = 2 * math.pi * np.arange(resolution) / resolution
    betas = math.pi * np.arange(resolution) / resolution
    base = np.full(2 ** instance.n, 2.0 ** (-instance.n / 2), dtype=complex)
    best_val = -np.inf
    best_g = best_b = 0.0
    for g in gammas:
        phased = base * np.exp(-1j * g * table)
        batch = np.broadcast_to(phased, (resolution, len(table))).copy()
        batch = _batched_mixer(batch, betas, instance.n)
        vals = (np.abs(batch) ** 2) @ table
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val = float(vals[k])
            best_g, best_b = float(g), float(betas[k])
    return Angles((best_g,), (best_b,)), best_val


def _golden_max(f, lo: float, hi: float, tol: float = GOLDEN_TOL) -> tuple[float, float]:
    """Golden-section maximization on [lo, hi]; returns (argmax, max)."""
    a, b = lo, hi
    c = b - (b - a) * _INVPHI
    d = a + (b - a) * _INVPHI
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - (b - a) * _INVPHI
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + (b - a) * _INVPHI
            fd = f(d)
    return (c, fc) if fc > fd else (d, fd)


def coordinate_optimize(instance: csp.CspInstance, p: int, init: Angles,
                        rounds: int) -> tuple[Angles, float]:
    """Cyclic per-angle golden-section refinement starting from ``init``.

    Each 1-D search is taken over the angle's full canonical period and is
    adopted only when it improves the incumbent, so the objective is
    non-decreasing across rounds (and never below the initial value).
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if init.p != p:
        raise ValueError(f"init has p={init.p}, expected {p}")
    coords = list(init.gammas) + list(init.betas)
    best = objective(instance, init)
    for _ in range(rounds):
        for i in range(2 * p):
            is_gamma = i < p
            hi = 2 * math.pi if is_gamma else math.pi

            def f(x, i=i):
                trial = coords.copy()
                trial[i] = x
                return objective(instance, Angles(tuple(trial[:p]), tuple(trial[p:])))

            x_star, v_star = _golden_max(f, 0.0, hi)
            if v_star > best:
                best = v_star
                coords[i] = x_star
    return Angles(tuple(coords[:p]), tuple(coords[p:])), best
