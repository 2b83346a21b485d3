"""Finite-state Markov chain utilities.

Kernels are row-stochastic numpy matrices. The mixing constant returned by
:func:`mixing_profile` bounds the bias of a time-averaged reward over an epoch
of ``tau`` steps by ``c_mix / tau`` for any starting distribution.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.sparse.csgraph import connected_components

ROW_TOL = 1e-12
PIVOT_TOL = 1e-13


class MarkovError(ValueError):
    pass


class NonStochasticError(MarkovError):
    pass


class ReducibleChainError(MarkovError):
    pass


class InvalidStateError(MarkovError):
    pass


class ZeroStationaryMassError(MarkovError):
    pass


def as_kernel(rows) -> np.ndarray:
    """Validate and return a row-stochastic float matrix."""
    p = np.array(rows, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] == 0:
        raise NonStochasticError(f"kernel must be a non-empty square matrix, got shape {p.shape}")
    if np.any(p < 0) or np.any(p > 1):
        raise NonStochasticError("kernel entries must lie in [0, 1]")
    err = np.abs(p.sum(axis=1) - 1.0)
    if np.any(err > ROW_TOL):
        raise NonStochasticError(f"row sums deviate from 1 by up to {err.max():.3g}")
    return p


@dataclass(frozen=True)
class ChainClass:
    irreducible: bool
    aperiodic: bool


def period(p: np.ndarray, ref: int = 0) -> int:
    """Period of the communicating class of ``ref`` (gcd of cycle lengths).

    BFS levels from ``ref``; every positive edge u -> v inside the class
    contributes level[u] + 1 - level[v] to the gcd.
    """
    n = p.shape[0]
    level = np.full(n, -1)
    level[ref] = 0
    queue = [ref]
    for u in queue:
        for v in np.flatnonzero(p[u] > 0):
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(v)
    g = 0
    for u in queue:
        for v in np.flatnonzero(p[u] > 0):
            if level[v] >= 0:
                g = math.gcd(g, int(level[u] + 1 - level[v]))
    return g


def validate(rows) -> ChainClass:
    p = as_kernel(rows)
    n_comp, _ = connected_components(p > 0, directed=True, connection="strong")
    # for reducible kernels aperiodicity refers to the class of state 0
    return ChainClass(n_comp == 1, period(p) == 1)


def stationary(rows) -> np.ndarray:
    """Unique stationary distribution of an irreducible kernel.

    Solves (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    """
    p = as_kernel(rows)
    n = p.shape[0]
    if n == 1:
        return np.ones(1)
    n_comp, _ = connected_components(p > 0, directed=True, connection="strong")
    if n_comp != 1:
        raise ReducibleChainError("kernel is reducible; stationary law is not unique")
    a = p.T - np.eye(n)
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    lu, piv = lu_factor(a)
    if np.abs(np.diag(lu)).min() < PIVOT_TOL:
        raise ReducibleChainError("balance equations are singular")
    pi = lu_solve((lu, piv), b)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def time_reversal(p: np.ndarray, pi: np.ndarray) -> np.ndarray:
    return (p.T * pi[None, :]) / pi[:, None]


def reversiblization(rows, pi: np.ndarray | None = None) -> np.ndarray:
    """Multiplicative reversiblization M = P P~ with P~ the time reversal."""
    p = as_kernel(rows)
    if pi is None:
        pi = stationary(p)
    if np.any(pi <= 0):
        raise ReducibleChainError("stationary law must be strictly positive")
    return p @ time_reversal(p, pi)


def reversible_spectrum(m: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """Eigenvalues (descending) of a pi-reversible kernel via D^1/2 M D^-1/2."""
    d = np.sqrt(pi)
    s = (d[:, None] * m) / d[None, :]
    s = 0.5 * (s + s.T)
    return np.sort(np.linalg.eigvalsh(s))[::-1]


@dataclass(frozen=True)
class MixingProfile:
    """Geometric decay rate ``lam`` and epoch-bias constant ``c_mix``."""

    lam: float
    c_mix: float
    pi_min: float
    n_states: int

    def bias_bound(self, tau: int) -> float:
        return self.c_mix / tau

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "c_mix": self.c_mix,
                "pi_min": self.pi_min, "n_states": self.n_states}


def mixing_profile(rows) -> MixingProfile:
    """lam = sqrt(second eigenvalue of M(P)); c_mix from the chi-square envelope.

    c_mix = sqrt(n) (1 - pi_min) / (2 sqrt(pi_min)) / (1 - lam)
    """
    p = as_kernel(rows)
    cls = validate(p)
    if not cls.irreducible:
        raise ReducibleChainError("mixing profile needs an irreducible kernel")
    if not cls.aperiodic:
        raise MarkovError("mixing profile needs an aperiodic kernel")
    n = p.shape[0]
    pi = stationary(p)
    pi_min = float(pi.min())
    if n == 1:
        return MixingProfile(0.0, 0.0, 1.0, 1)
    ev = reversible_spectrum(reversiblization(p, pi), pi)
    lam1 = float(np.clip(ev[1], 0.0, 1.0))
    lam = math.sqrt(lam1)
    if lam >= 1.0:
        raise MarkovError("second eigenvalue of the reversiblization is 1")
    c_mix = math.sqrt(n) * (1.0 - pi_min) / (2.0 * math.sqrt(pi_min)) / (1.0 - lam)
    return MixingProfile(lam, c_mix, pi_min, n)


def chi_squared(dist, pi) -> float:
    dist = np.asarray(dist, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if np.any(pi <= 0):
        raise ZeroStationaryMassError("chi-squared distance needs a strictly positive reference law")
    return float(np.sum((dist - pi) ** 2 / pi))


def step(rows, state: int, rng: np.random.Generator) -> int:
    p = np.asarray(rows, dtype=float)
    if not (0 <= state < p.shape[0]):
        raise InvalidStateError(f"state {state} outside 0..{p.shape[0] - 1}")
    return int(cumulative(p[state:state + 1])[0].searchsorted(rng.random(), side="right"))


def cumulative(p: np.ndarray) -> np.ndarray:
    """Row-wise CDF with the last column pinned to exactly 1."""
    c = np.cumsum(p, axis=-1)
    c[..., -1] = 1.0
    return c


def distribution_after(rows, beta0, n: int) -> np.ndarray:
    p = np.asarray(rows, dtype=float)
    return np.asarray(beta0, dtype=float) @ np.linalg.matrix_power(p, n)


def kernel_to_json(rows) -> str:
    p = as_kernel(rows)
    return json.dumps({"states": p.shape[0], "rows": p.tolist()})


def kernel_from_json(text: str) -> np.ndarray:
    d = json.loads(text)
    p = as_kernel(d["rows"])
    if p.shape[0] != int(d["states"]):
        raise NonStochasticError("declared state count does not match rows")
    return p
