"""Finite-difference simulation of the 1-D stochastic heat equation with space-time white noise.

Explicit Euler on a periodic grid x_j = -L + j dx:

    u_{m+1} = u_m + (dt/2) Lap_h u_m + u_m sqrt(dt/dx) zeta_m,

with i.i.d. standard normals zeta per node and step. Nothing here uses the
Feynman-Kac machinery; the module exists to cross-check it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .moments import LogWeightStats, MCConfig, MomentEstimate, _aggregate, _Block, _run_blocks
from .rng import Stream, normal_block

__all__ = [
    "GridField",
    "SchemeParams",
    "simulate_she_1d",
    "simulate_she_batch",
    "direct_moment",
    "lattice_second_moment",
]

SPDE_DIRECT = "spde_direct"
INITIAL_DATA = ("one", "delta")


@dataclass(frozen=True)
class SchemeParams:
    dx: float
    dt: float
    L: float

    def __post_init__(self):
        if not (self.dx > 0 and self.dt > 0 and self.L > 0):
            raise DomainError("dx, dt and L must be positive")
        if self.dt > 0.5 * self.dx**2 * (1 + 1e-12):
            raise DomainError(f"explicit scheme needs dt <= dx^2/2, got dt={self.dt}, dx={self.dx}")
        n = 2.0 * self.L / self.dx
        if abs(n - round(n)) > 1e-9 * n or round(n) < 3:
            raise DomainError("2L/dx must be an integer of at least 3")

    @property
    def nodes(self) -> int:
        return int(round(2.0 * self.L / self.dx))

    @property
    def x(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.nodes)

    def steps(self, t: float) -> int:
        m = t / self.dt
        if not t > 0 or abs(m - round(m)) > 1e-9 * max(m, 1.0):
            raise DomainError(f"t must be a positive multiple of dt, got t={t}, dt={self.dt}")
        return int(round(m))

    def node(self, x: float) -> int:
        if abs(x) > 0.5 * self.L:
            raise DomainError(f"x must satisfy |x| <= L/2, got x={x}, L={self.L}")
        return int(np.argmin(np.abs(self.x - x)))

    def initial(self, u0: str) -> np.ndarray:
        if u0 == "one":
            return np.ones(self.nodes)
        if u0 == "delta":
            v = np.zeros(self.nodes)
            v[self.node(0.0)] = 1.0 / self.dx
            return v
        raise DomainError(f"u0 must be one of {INITIAL_DATA}, got {u0!r}")


@dataclass(frozen=True)
class GridField:
    dx: float
    dt: float
    L: float
    t: float
    x: np.ndarray
    values: np.ndarray

    def at(self, x: float) -> float:
        return float(self.values[SchemeParams(self.dx, self.dt, self.L).node(x)])


def _laplacian(u: np.ndarray, dx: float) -> np.ndarray:
    return (np.roll(u, 1, axis=-1) - 2.0 * u + np.roll(u, -1, axis=-1)) / (dx * dx)


def simulate_she_batch(params: SchemeParams, t: float, u0: str, seed: int, indices, noise: bool = True) -> np.ndarray:
    """Fields at time t for the replications in ``indices``, shape (len(indices), nodes).

    Replication i draws step m's normals from positions m*nodes .. (m+1)*nodes - 1
    of the stream (seed, i, lane 0).
    """
    steps = params.steps(t)
    idx = np.atleast_1d(np.asarray(indices, dtype=np.uint64))
    nodes = params.nodes
    u = np.tile(params.initial(u0), (idx.size, 1))
    sig = math.sqrt(params.dt / params.dx)
    for m in range(steps):
        drift = 0.5 * params.dt * _laplacian(u, params.dx)
        if noise:
            zeta = normal_block(seed, idx, 0, nodes, offset=m * nodes)
            u = u + drift + sig * u * zeta
        else:
            u = u + drift
    return u


def simulate_she_1d(dx: float, dt: float, t: float, L: float, u0: str, stream: Stream | None, noise: bool = True) -> GridField:
    """One replication; ``stream`` supplies nodes normals per step (unused without noise)."""
    params = SchemeParams(dx, dt, L)
    steps = params.steps(t)
    u = params.initial(u0)
    sig = math.sqrt(dt / dx)
    for _ in range(steps):
        drift = 0.5 * dt * _laplacian(u, dx)
        if noise:
            if stream is None:
                raise DomainError("a stream is required when noise is on")
            u = u + drift + sig * u * np.asarray(stream.normal(params.nodes))
        else:
            u = u + drift
    return GridField(dx, dt, L, t, params.x, u)


def direct_moment(
    k: int,
    t: float,
    x: float,
    params: SchemeParams,
    u0: str,
    reps: int,
    seed: int,
    workers: int = 1,
    block_size: int = 256,
) -> MomentEstimate:
    """Sample k-th moment of the simulated field at the grid node nearest to x."""
    if k not in (1, 2, 3):
        raise DomainError("direct_moment supports k in {1, 2, 3}")
    j = params.node(x)
    mc = MCConfig(samples=reps, seed=seed, workers=workers, block_size=block_size)

    def block(idx: np.ndarray) -> _Block:
        u = simulate_she_batch(params, t, u0, seed, idx)[:, j] ** k
        with np.errstate(divide="ignore"):
            la = np.log(np.abs(u))
        return _Block(la, np.sign(u), np.zeros(idx.size))

    details = {"dx": params.dx, "dt": params.dt, "L": params.L, "u0": u0, "node_x": float(params.x[j])}
    est = _aggregate(_run_blocks(mc, block), mc, 0.0, SPDE_DIRECT, details)
    return MomentEstimate(
        est.mean, est.standard_error, est.samples, LogWeightStats(0.0, 0.0, 0.0), SPDE_DIRECT, est.ess, False, est.details
    )


def lattice_second_moment(params: SchemeParams, t: float, x: float, u0: str) -> float:
    """Exact E[u_m(x)^2] of the scheme by the covariance recursion V <- A V A^T + (dt/dx) diag(V)."""
    steps = params.steps(t)
    n = params.nodes
    A = np.eye(n) + 0.5 * params.dt / params.dx**2 * (np.roll(np.eye(n), 1, axis=1) - 2 * np.eye(n) + np.roll(np.eye(n), -1, axis=1))
    u = params.initial(u0)
    V = np.outer(u, u)
    s2 = params.dt / params.dx
    for _ in range(steps):
        V = A @ V @ A.T + s2 * np.diag(np.diag(V))
    j = params.node(x)
    return float(V[j, j])
