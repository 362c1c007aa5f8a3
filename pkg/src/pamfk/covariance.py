"""Spatial covariance models, their mollifications and Dalang's condition.

Fourier convention: F(nu)(xi) = int exp(-i xi.x) nu(dx), so the white noise
(covariance delta_0) has spectral measure equal to Lebesgue measure, and the
mollified covariance is

    Lambda_eps(x) = (2 pi)^-d int exp(i x.xi - eps |xi|^2) mu(dxi)
                  = (p_{2 eps} * Lambda)(x).

Every model here is radial: mu(dxi) = m(|xi|) dxi.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special
from scipy.interpolate import CubicSpline

from .errors import DomainError, QuadratureError

__all__ = [
    "CovarianceModel",
    "DalangResult",
    "covariance_at",
    "spectral_covariance",
    "dalang_integral",
    "riesz_constant",
    "sphere_area",
]

ZERO = "zero"
WHITE_NOISE = "white_noise"
RIESZ = "riesz"
GAUSSIAN = "gaussian"
RADIAL_SPECTRAL = "radial_spectral"
KINDS = (ZERO, WHITE_NOISE, RIESZ, GAUSSIAN, RADIAL_SPECTRAL)

_QUAD_RTOL = 1e-9


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d (2 for d = 1)."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def riesz_constant(d: int, beta: float) -> float:
    """c with F(|x|^-beta) = c |xi|^(beta-d), for 0 < beta < d.

    Standard Fourier transform of a homogeneous function (Stein, Singular
    Integrals, ch. V sec. 1 lemma 1), rewritten for the exp(-i xi.x)
    convention: c = 2^(d-beta) pi^(d/2) Gamma((d-beta)/2) / Gamma(beta/2).
    """
    return 2.0 ** (d - beta) * math.pi ** (d / 2) * math.gamma((d - beta) / 2) / math.gamma(beta / 2)


@dataclass(frozen=True)
class DalangResult:
    finite: bool
    value: float
    growth_exponent: Optional[float] = None
    detail: str = ""


@dataclass(frozen=True)
class CovarianceModel:
    """A radial spatial covariance, immutable once built.

    Use the classmethod constructors; they reject measures violating
    Dalang's condition.
    """

    kind: str
    dimension: int = 1
    sigma: float = 0.0
    beta: float = 0.0
    radial_density: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""

    @classmethod
    def zero(cls, dimension: int = 1) -> "CovarianceModel":
        return cls(ZERO, dimension, name="zero")

    @classmethod
    def white_noise(cls, dimension: int = 1) -> "CovarianceModel":
        if dimension != 1:
            res = _dalang_radial(lambda r: np.ones_like(r), dimension)
            raise DomainError(f"white noise violates Dalang's condition in d={dimension}: {res.detail}")
        return cls(WHITE_NOISE, 1, name="white_noise")

    @classmethod
    def riesz(cls, beta: float, dimension: int = 1) -> "CovarianceModel":
        if not 0 < beta < min(2, dimension):
            raise DomainError(f"Riesz exponent must satisfy 0 < beta < min(2, d), got beta={beta}, d={dimension}")
        return cls(RIESZ, dimension, beta=float(beta), name=f"riesz({beta:g})")

    @classmethod
    def gaussian(cls, sigma: float = 1.0, dimension: int = 1) -> "CovarianceModel":
        """Lambda = p_sigma, the heat kernel at time sigma."""
        if not sigma > 0:
            raise DomainError("Gaussian covariance needs sigma > 0")
        return cls(GAUSSIAN, dimension, sigma=float(sigma), name=f"gaussian({sigma:g})")

    @classmethod
    def radial_spectral(cls, density: Callable, dimension: int = 1, name: str = "radial_spectral") -> "CovarianceModel":
        """mu(dxi) = density(|xi|) dxi for a vectorized nonnegative ``density``."""
        res = _dalang_radial(density, dimension)
        if not res.finite:
            raise DomainError(f"spectral density violates Dalang's condition: {res.detail}")
        return cls(RADIAL_SPECTRAL, dimension, radial_density=density, name=name)

    @property
    def is_zero(self) -> bool:
        return self.kind == ZERO

    @property
    def has_closed_form(self) -> bool:
        return self.kind in (ZERO, RIESZ, GAUSSIAN)

    def spectral_density(self, r) -> np.ndarray:
        """Radial density m(r) of mu, without the (2 pi)^-d factor."""
        r = np.asarray(r, dtype=float)
        if self.kind == ZERO:
            return np.zeros_like(r)
        if self.kind == WHITE_NOISE:
            return np.ones_like(r)
        if self.kind == GAUSSIAN:
            return np.exp(-0.5 * self.sigma * r * r)
        if self.kind == RIESZ:
            with np.errstate(divide="ignore"):
                return riesz_constant(self.dimension, self.beta) * r ** (self.beta - self.dimension)
        return np.asarray(self.radial_density(r), dtype=float)

    def check_eps(self, eps: float) -> float:
        eps = float(eps)
        if eps < 0 or not math.isfinite(eps):
            raise DomainError(f"mollification parameter must be finite and >= 0, got {eps}")
        if eps == 0 and self.kind in (WHITE_NOISE, RADIAL_SPECTRAL):
            raise DomainError(f"{self.kind} has no pointwise covariance; use eps > 0")
        return eps

    def evaluator(self, eps: float) -> Callable[[np.ndarray], np.ndarray]:
        """Vectorized r2 -> Lambda_eps at points with squared norm r2."""
        return _evaluator(self, self.check_eps(eps))

    def at_zero(self, eps: float) -> float:
        return float(self.evaluator(eps)(np.zeros(1))[0])

    def dalang(self) -> DalangResult:
        return dalang_integral(self)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "dimension": self.dimension}
        if self.kind == GAUSSIAN:
            out["sigma"] = self.sigma
        if self.kind == RIESZ:
            out["beta"] = self.beta
        if self.kind == RADIAL_SPECTRAL:
            out["name"] = self.name
        return out


def _white_noise_r2(eps):
    # Lambda_eps = p_{2 eps}
    norm = 1.0 / math.sqrt(4.0 * math.pi * eps)

    def f(r2):
        return norm * np.exp(-np.asarray(r2, dtype=float) / (4.0 * eps))

    return f


def _gaussian_r2(sigma, eps, d):
    s = sigma + 2.0 * eps
    norm = (2.0 * math.pi * s) ** (-d / 2)

    def f(r2):
        return norm * np.exp(-np.asarray(r2, dtype=float) / (2.0 * s))

    return f


def _riesz_r2(beta, eps, d):
    if eps == 0:
        def f(r2):
            with np.errstate(divide="ignore"):
                return np.asarray(r2, dtype=float) ** (-beta / 2)

        return f
    # E|x + sqrt(2 eps) Z|^-beta through the noncentral chi moment
    pref = (4.0 * eps) ** (-beta / 2) * math.gamma((d - beta) / 2) / math.gamma(d / 2)

    def f(r2):
        return pref * special.hyp1f1(beta / 2, d / 2, -np.asarray(r2, dtype=float) / (4.0 * eps))

    return f


@lru_cache(maxsize=64)
def _evaluator(model: CovarianceModel, eps: float):
    d = model.dimension
    if model.kind == ZERO:
        return lambda r2: np.zeros(np.shape(r2))
    if model.kind == WHITE_NOISE:
        return _white_noise_r2(eps)
    if model.kind == GAUSSIAN:
        return _gaussian_r2(model.sigma, eps, d)
    if model.kind == RIESZ:
        return _riesz_r2(model.beta, eps, d)
    return _tabulated(model, eps)


def _tabulated(model: CovarianceModel, eps: float):
    """Spline of the radial quadrature on |x| in [0, r_max]; direct quadrature beyond."""
    r_max = 40.0 * max(math.sqrt(eps), 1.0)
    nodes = np.concatenate([np.linspace(0.0, 1.0, 201)[:-1] * min(r_max, 4.0), np.geomspace(min(r_max, 4.0), r_max, 200)])
    vals = np.array([spectral_covariance(model, eps, np.array([r] + [0.0] * (model.dimension - 1))) for r in nodes])
    spline = CubicSpline(nodes, vals, bc_type=((1, 0.0), "not-a-knot"))

    def f(r2):
        r = np.sqrt(np.asarray(r2, dtype=float))
        out = spline(np.minimum(r, r_max))
        far = r > r_max
        if np.any(far):
            out = np.array(out, copy=True)
            for i in zip(*np.nonzero(far)):
                out[i] = spectral_covariance(model, eps, np.array([r[i]] + [0.0] * (model.dimension - 1)))
        return out

    return f


def covariance_at(model: CovarianceModel, eps: float, x) -> float:
    """Lambda_eps(x) at one point; for eps = 0, Lambda(x) where it is a function."""
    p = np.atleast_1d(np.asarray(x, dtype=float))
    if p.size != model.dimension:
        if p.size == 1:
            p = np.full(model.dimension, p[0])
        else:
            raise DomainError(f"point has dimension {p.size}, model has {model.dimension}")
    return float(model.evaluator(eps)(np.array([p @ p]))[0])


def _quad(f, a, b, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            return integrate.quad(f, a, b, epsabs=0.0, epsrel=_QUAD_RTOL, limit=2000, **kw)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"radial quadrature failed: {exc}", {"interval": (a, b)}) from exc


def spectral_covariance(model: CovarianceModel, eps: float, x) -> float:
    """Lambda_eps(x) by 1-D radial quadrature of the spectral integral (eps > 0)."""
    if not eps > 0:
        raise DomainError("spectral quadrature needs eps > 0")
    if model.kind == ZERO:
        return 0.0
    d = model.dimension
    p = np.atleast_1d(np.asarray(x, dtype=float))
    rho = float(np.linalg.norm(p))
    m = model.spectral_density
    r_max = math.sqrt(60.0 / eps)  # exp(-eps r^2) < 1e-26 beyond

    def g(r):
        return float(m(np.array(r))) * math.exp(-eps * r * r)

    brk = min(1.0, r_max)
    if rho == 0.0:
        area = sphere_area(d)
        a, _ = _quad(lambda r: r ** (d - 1) * g(r), 0.0, brk)
        b, _ = _quad(lambda r: r ** (d - 1) * g(r), brk, r_max)
        return area * (a + b) / (2.0 * math.pi) ** d
    if d == 1:
        a, _ = _quad(lambda r: math.cos(rho * r) * g(r), 0.0, brk)
        b, _ = _quad(g, brk, r_max, weight="cos", wvar=rho)
        return 2.0 * (a + b) / (2.0 * math.pi)
    nu = d / 2 - 1
    scale = (2.0 * math.pi) ** (d / 2) * rho ** (1 - d / 2) / (2.0 * math.pi) ** d

    def h(r):
        return special.jv(nu, rho * r) * r ** (d / 2) * g(r)

    # split at every few Bessel periods so quad sees a smooth integrand per piece
    step = max(brk, 10.0 * math.pi / rho)
    edges = [0.0, brk] + list(np.arange(brk + step, r_max, step)) + [r_max]
    total = sum(_quad(h, lo, hi)[0] for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo)
    return scale * total


def _dalang_radial(density: Callable, d: int) -> DalangResult:
    area = sphere_area(d)

    def g(r):
        r = np.asarray(r, dtype=float)
        return r ** (d - 1) * np.asarray(density(r), dtype=float) / (1.0 + r * r)

    def slope(r1, r2):
        g1, g2 = float(g(r1)), float(g(r2))
        if g1 <= 0 or g2 <= 0:
            return -math.inf
        return (math.log(g2) - math.log(g1)) / (math.log(r2) - math.log(r1))

    s_inf = slope(1e6, 1e8)
    if s_inf >= -1.0 - 1e-6:
        kind = "logarithmic" if abs(s_inf + 1.0) < 1e-3 else f"power R^{s_inf + 1.0:.3g}"
        return DalangResult(False, math.inf, s_inf + 1.0, f"{kind} divergence at infinity")
    s_zero = slope(1e-8, 1e-6)
    if s_zero <= -1.0 + 1e-6:
        return DalangResult(False, math.inf, s_zero + 1.0, "non-integrable singularity at the origin")
    try:
        a, _ = _quad(lambda r: float(g(r)), 0.0, 1.0)
        b, _ = _quad(lambda r: float(g(r)), 1.0, math.inf)
    except QuadratureError as exc:
        return DalangResult(False, math.inf, None, str(exc))
    return DalangResult(True, area * (a + b))


def dalang_integral(model: CovarianceModel | Callable, dimension: int | None = None) -> DalangResult:
    """int mu(dxi) / (1 + |xi|^2), or a divergence verdict.

    Accepts a model, or a bare radial density together with ``dimension``.
    """
    if not isinstance(model, CovarianceModel):
        if dimension is None:
            raise DomainError("a bare spectral density needs a dimension")
        return _dalang_radial(model, dimension)
    d = model.dimension
    if model.kind == ZERO:
        return DalangResult(True, 0.0)
    if model.kind == WHITE_NOISE:
        return DalangResult(True, math.pi)
    return _dalang_radial(model.spectral_density, d)
