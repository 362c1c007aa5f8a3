"""Heat kernel and heat-semigroup action on signed-measure initial data."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy import integrate

from .errors import DomainError, QuadratureError

__all__ = [
    "Bounded",
    "SubGaussian",
    "GaussianGrowth",
    "SignedMeasure",
    "Admissibility",
    "heat_kernel",
    "heat_kernel_points",
    "log_heat_kernel_points",
    "heat_convolve",
    "gaussian_expectation",
    "admissibility_check",
]

# Points beyond this many standard deviations carry less than 1e-15 of the
# Gaussian mass per axis.
_BASE_HALF_WIDTH = 8.0
_LOG_TAIL_TARGET = -40.0


@dataclass(frozen=True)
class Bounded:
    """|density(x)| <= bound everywhere."""

    bound: float = 1.0

    def log_bound(self, r):
        return math.log(self.bound) if self.bound > 0 else -math.inf


@dataclass(frozen=True)
class SubGaussian:
    """|density(x)| <= A exp(a |x|**gamma) with gamma < 2."""

    A: float = 1.0
    a: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if not 0 <= self.gamma < 2:
            raise DomainError("SubGaussian growth needs an exponent in [0, 2)")

    def log_bound(self, r):
        return math.log(self.A) + self.a * r**self.gamma


@dataclass(frozen=True)
class GaussianGrowth:
    """|density(x)| <= A exp(a |x|^2).

    Such data are integrable against exp(-c|x|^2) only for c > a, so they
    never satisfy the all-c admissibility condition.
    """

    A: float = 1.0
    a: float = 1.0

    def log_bound(self, r):
        return math.log(self.A) + self.a * r * r


Growth = Union[Bounded, SubGaussian, GaussianGrowth]


@dataclass(frozen=True)
class SignedMeasure:
    """Dirac atoms plus an optional density on R^d.

    ``density`` is vectorized: it maps an array of points of shape (m, d) to
    an array of shape (m,). Its growth class is declared by the caller since
    integrability cannot be read off a black-box function.
    """

    dimension: int = 1
    atom_locations: np.ndarray = field(default_factory=lambda: np.zeros((0, 1)))
    atom_weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    density: Optional[Callable[[np.ndarray], np.ndarray]] = None
    growth: Optional[Growth] = None
    name: str = ""

    def __post_init__(self):
        d = int(self.dimension)
        if d < 1:
            raise DomainError("dimension must be a positive integer")
        locs = np.asarray(self.atom_locations, dtype=float).reshape(-1, d)
        weights = np.asarray(self.atom_weights, dtype=float).reshape(-1)
        if locs.shape[0] != weights.shape[0]:
            raise DomainError("atom locations and weights differ in number")
        if not (np.all(np.isfinite(locs)) and np.all(np.isfinite(weights))):
            raise DomainError("atom locations and weights must be finite")
        if np.any(weights == 0):
            raise DomainError("atom weights must be nonzero")
        object.__setattr__(self, "dimension", d)
        object.__setattr__(self, "atom_locations", locs)
        object.__setattr__(self, "atom_weights", weights)

    @classmethod
    def dirac(cls, point=0.0, weight: float = 1.0, dimension: int | None = None) -> "SignedMeasure":
        p = np.atleast_1d(np.asarray(point, dtype=float))
        d = dimension or p.size
        p = np.broadcast_to(p, (d,)) if p.size == 1 else p
        return cls(d, p.reshape(1, d), np.array([weight]), name="dirac")

    @classmethod
    def atoms(cls, locations, weights, dimension: int = 1) -> "SignedMeasure":
        return cls(dimension, np.asarray(locations, float).reshape(-1, dimension), np.asarray(weights, float), name="atoms")

    @classmethod
    def constant(cls, value: float = 1.0, dimension: int = 1) -> "SignedMeasure":
        def density(y, _v=float(value)):
            return np.full(np.shape(y)[0], _v)

        return cls(dimension, density=density, growth=Bounded(abs(value)), name=f"constant({value:g})")

    @classmethod
    def from_density(cls, density, growth: Growth | None, dimension: int = 1, name: str = "") -> "SignedMeasure":
        return cls(dimension, density=density, growth=growth, name=name)

    @property
    def n_atoms(self) -> int:
        return self.atom_weights.shape[0]

    @property
    def has_density(self) -> bool:
        return self.density is not None

    @property
    def is_constant_one(self) -> bool:
        return self.name == "constant(1)" and self.n_atoms == 0

    def __add__(self, other: "SignedMeasure") -> "SignedMeasure":
        if self.dimension != other.dimension:
            raise DomainError("dimension mismatch")
        if self.has_density and other.has_density:
            f, g = self.density, other.density
            density = lambda y: f(y) + g(y)  # noqa: E731
            growth = _combined_growth(self.growth, other.growth)
        else:
            density = self.density or other.density
            growth = self.growth if self.has_density else other.growth
        return SignedMeasure(
            self.dimension,
            np.vstack([self.atom_locations, other.atom_locations]),
            np.concatenate([self.atom_weights, other.atom_weights]),
            density,
            growth,
            name=f"{self.name}+{other.name}",
        )

    def is_admissible(self) -> bool:
        """True when exp(-c|x|^2) integrates |u0| for every c > 0."""
        if not self.has_density:
            return True
        return isinstance(self.growth, (Bounded, SubGaussian))


def _combined_growth(g1, g2):
    if g1 is None or g2 is None:
        return None
    if isinstance(g1, Bounded) and isinstance(g2, Bounded):
        return Bounded(g1.bound + g2.bound)
    if isinstance(g1, GaussianGrowth) or isinstance(g2, GaussianGrowth):
        a = max(getattr(g, "a", 0.0) for g in (g1, g2) if isinstance(g, GaussianGrowth))
        return GaussianGrowth(_growth_A(g1) + _growth_A(g2), a)
    gamma = max(getattr(g, "gamma", 0.0) for g in (g1, g2))
    a = max(getattr(g, "a", 0.0) for g in (g1, g2))
    return SubGaussian(_growth_A(g1) + _growth_A(g2), a, gamma)


def _growth_A(g):
    return g.bound if isinstance(g, Bounded) else g.A


def _as_point(x, dimension: int | None = None) -> np.ndarray:
    p = np.atleast_1d(np.asarray(x, dtype=float))
    if p.ndim != 1:
        raise DomainError("a point must be a scalar or a 1-D array")
    if dimension is not None and p.size != dimension:
        if p.size == 1:
            return np.full(dimension, p[0])
        raise DomainError(f"point has dimension {p.size}, expected {dimension}")
    return p


def heat_kernel(t: float, x) -> float:
    """(2 pi t)^(-d/2) exp(-|x|^2 / 2t) at a single point x in R^d."""
    if not t > 0:
        raise DomainError(f"heat kernel needs t > 0, got {t}")
    p = _as_point(x)
    d = p.size
    return math.exp(-float(p @ p) / (2.0 * t) - 0.5 * d * math.log(2.0 * math.pi * t))


def log_heat_kernel_points(t, points) -> np.ndarray:
    """log p_t at points of shape (..., d); ``t`` may broadcast against (...)."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("heat kernel needs t > 0")
    pts = np.asarray(points, dtype=float)
    d = pts.shape[-1]
    r2 = np.einsum("...i,...i->...", pts, pts)
    return -r2 / (2.0 * t) - 0.5 * d * np.log(2.0 * np.pi * t)


def heat_kernel_points(t, points) -> np.ndarray:
    return np.exp(log_heat_kernel_points(t, points))


def _half_width(center: np.ndarray, scale: float, growth: Growth | None) -> float:
    if growth is None or isinstance(growth, Bounded):
        return _BASE_HALF_WIDTH
    d = center.size
    c_norm = float(np.linalg.norm(center))
    half = _BASE_HALF_WIDTH
    while half < 200.0:
        r = c_norm + scale * math.sqrt(d) * half
        if -0.5 * half * half + growth.log_bound(r) < _LOG_TAIL_TARGET:
            return half
        half += 1.0
    raise QuadratureError("no finite truncation box found for the declared growth", {"growth": repr(growth)})


def gaussian_expectation(
    f: Callable[[np.ndarray], np.ndarray],
    center,
    scale: float,
    growth: Growth | None = None,
    rtol: float = 1e-10,
    atol: float = 1e-300,
    strict: bool = True,
) -> tuple[float, float]:
    """E f(center + scale Z) for Z standard normal in R^d, with an error estimate.

    Tensor-product trapezoid on a box sized from the Gaussian tail and the
    declared growth of ``f``, refined by doubling until two successive levels
    agree to ``rtol`` relative to the integral of |f|. With ``strict=False``
    an unconverged estimate is returned with its last change as the error.
    """
    center = np.atleast_1d(np.asarray(center, dtype=float))
    d = center.size
    half = _half_width(center, scale, growth)
    max_level = {1: 20, 2: 11, 3: 7}.get(d, 5)
    prev = None
    for level in range(5, max_level + 1):
        n = 2**level + 1
        u = np.linspace(-half, half, n)
        h = u[1] - u[0]
        w1 = np.full(n, h)
        w1[0] = w1[-1] = 0.5 * h
        w1 = w1 * np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)
        grids = np.meshgrid(*([u] * d), indexing="ij")
        pts = center + scale * np.stack([g.ravel() for g in grids], axis=-1)
        weights = w1
        for _ in range(d - 1):
            weights = np.multiply.outer(weights, w1)
        weights = weights.ravel()
        vals = np.asarray(f(pts), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise QuadratureError("integrand is not finite on the quadrature box", {"level": level})
        est = float(weights @ vals)
        mag = float(weights @ np.abs(vals))
        if prev is not None:
            err = abs(est - prev)
            if err <= rtol * mag + atol:
                return est, err
        prev = est
    if not strict:
        return est, err
    raise QuadratureError(
        "trapezoid refinement did not reach the error target",
        {"estimate": prev, "last_change": err, "target": rtol * mag, "points_per_axis": n},
    )


def heat_convolve(u0: SignedMeasure, t: float, x, rtol: float = 1e-10, return_error: bool = False):
    """(p_t * u0)(x): exact sum over atoms plus trapezoid quadrature of the density part."""
    if not t > 0:
        raise DomainError(f"heat_convolve needs t > 0, got {t}")
    p = _as_point(x, u0.dimension)
    total = 0.0
    if u0.n_atoms:
        total += float(heat_kernel_points(t, p - u0.atom_locations) @ u0.atom_weights)
    err = 0.0
    if u0.has_density:
        if isinstance(u0.growth, GaussianGrowth) and u0.growth.a >= 1.0 / (2.0 * t):
            raise DomainError("density grows too fast for the heat semigroup at this time")
        part, err = gaussian_expectation(u0.density, p, math.sqrt(t), u0.growth, rtol=rtol)
        total += part
    return (total, err) if return_error else total


@dataclass(frozen=True)
class Admissibility:
    admissible: bool
    value: float
    reason: str = ""


def admissibility_check(u0: SignedMeasure, c: float) -> Admissibility:
    """Evaluate the integral of exp(-c|x|^2) against |u0| when it is provably finite."""
    if not c > 0:
        raise DomainError("c must be positive")
    atoms = float(np.exp(-c * np.sum(u0.atom_locations**2, axis=1)) @ np.abs(u0.atom_weights))
    if not u0.has_density:
        return Admissibility(True, atoms)
    g = u0.growth
    if g is None:
        return Admissibility(False, math.inf, "density carries no growth certificate; declare Bounded, SubGaussian or GaussianGrowth")
    if isinstance(g, GaussianGrowth) and c <= g.a:
        return Admissibility(False, math.inf, f"Gaussian growth rate {g.a} is not dominated by exp(-{c}|x|^2)")
    d = u0.dimension
    dens = u0.density
    if d == 1:
        # truncate where the certified integrand bound drops below e^-50
        R = 1.0
        while -c * R * R + g.log_bound(R) > -50.0:
            R *= 1.5
        val, _ = integrate.quad(
            lambda y: math.exp(-c * y * y) * abs(float(dens(np.array([[y]]))[0])),
            -R, R, points=[0.0], epsabs=0.0, epsrel=1e-10, limit=400,
        )
    else:
        # exp(-c|x|^2) dx = (pi/c)^(d/2) * N(0, I/(2c))(dx)
        val, _ = gaussian_expectation(
            lambda y: np.abs(dens(y)), np.zeros(d), 1.0 / math.sqrt(2.0 * c), g, rtol=1e-9, strict=False,
        )
        val *= (math.pi / c) ** (d / 2)
    if not math.isfinite(val):
        return Admissibility(False, math.inf, "quadrature diverged")
    return Admissibility(True, atoms + val)
