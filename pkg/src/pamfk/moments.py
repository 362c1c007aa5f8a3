"""Monte Carlo estimators for moments of u(t, x) and of its iterated derivatives.

Three representations are provided:

* free Brownian motions started at x, with u0 evaluated at the endpoints;
* bridges from x to theta, with theta integrated against u0 p_t(x - .);
* multi-pinned paths for the N-th derivative at pins (r_m, z_m).

Sample ``i`` draws all its randomness from streams keyed by (seed, i, lane),
samples are processed in fixed-size index blocks, and the final reduction is a
compensated sum over the buffered per-sample values in index order. Estimates
are therefore bit-identical for any number of workers.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bridges import PinSchedule, sample_pinned_paths
from .covariance import CovarianceModel
from .errors import DomainError, NumericalError
from .functionals import sqrt_eps_extrapolation, trapezoid_weights
from .kernels import Bounded, SignedMeasure, heat_convolve, log_heat_kernel_points
from .rng import normal_block, uniform_block

__all__ = [
    "MCConfig",
    "LogWeightStats",
    "MomentEstimate",
    "DerivativeSpec",
    "CorollarySweep",
    "moment_u_free",
    "moment_u_bridge",
    "moment_derivative",
    "corollary_bound",
    "corollary_sweep",
]

FREE_BM = "free_bm"
BRIDGE = "bridge_conditioned"
DERIVATIVE = "derivative"

# stream lanes: paths use lane j, endpoint draws for copy j use _THETA_LANE + j
_THETA_LANE = 256


@dataclass(frozen=True)
class MCConfig:
    samples: int = 10_000
    steps_per_segment: int = 64
    seed: int = 0
    workers: int = 1
    block_size: int = 1024
    tuple_cap: int = 4096
    ess_flag_fraction: float = 0.01

    def __post_init__(self):
        if int(self.samples) < 2:
            raise DomainError("need at least two samples for a standard error")
        if int(self.steps_per_segment) < 1:
            raise DomainError("steps_per_segment must be positive")
        if int(self.workers) < 1 or int(self.block_size) < 1 or int(self.tuple_cap) < 1:
            raise DomainError("workers, block_size and tuple_cap must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must fit in 64 bits")

    def replace(self, **kw) -> "MCConfig":
        return MCConfig(**{**self.__dict__, **kw})


@dataclass(frozen=True)
class LogWeightStats:
    max: float
    mean: float
    variance: float

    @classmethod
    def of(cls, logs: np.ndarray) -> "LogWeightStats":
        logs = np.asarray(logs, dtype=float)
        if logs.size == 0:
            return cls(0.0, 0.0, 0.0)
        m = math.fsum(logs) / logs.size
        var = math.fsum((logs - m) ** 2) / max(logs.size - 1, 1)
        return cls(float(np.max(logs)), m, var)


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    standard_error: float
    samples: int
    log_weight_stats: LogWeightStats
    representation_tag: str
    ess: float
    ess_flagged: bool = False
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.standard_error)):
            raise NumericalError(
                "non-finite moment estimate",
                {"mean": self.mean, "standard_error": self.standard_error, "log_weights": self.log_weight_stats.__dict__},
            )

    def to_record(self) -> dict:
        return {
            "mean": self.mean,
            "standard_error": self.standard_error,
            "samples": self.samples,
            "ess": self.ess,
            "ess_flagged": self.ess_flagged,
            "representation": self.representation_tag,
            "log_weight_max": self.log_weight_stats.max,
            "log_weight_mean": self.log_weight_stats.mean,
            "log_weight_variance": self.log_weight_stats.variance,
            **{k: v for k, v in self.details.items()},
        }


@dataclass(frozen=True)
class DerivativeSpec:
    """Pins 0 < r_1 < ... < r_N with points z_m, and the moment order k >= 2."""

    r: tuple
    z: np.ndarray
    k: int = 2

    def __post_init__(self):
        r = tuple(float(v) for v in np.atleast_1d(self.r))
        if len(r) < 1:
            raise DomainError("derivative order N must be at least 1")
        z = np.asarray(self.z, dtype=float)
        z = z.reshape(len(r), -1)
        if r[0] <= 0 or any(b <= a for a, b in zip(r, r[1:])):
            raise DomainError("r must satisfy 0 < r_1 < ... < r_N")
        if int(self.k) != self.k or self.k < 2:
            raise DomainError("derivative moments need an integer k >= 2")
        if not np.all(np.isfinite(z)):
            raise DomainError("pin points must be finite")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "k", int(self.k))

    @property
    def order(self) -> int:
        return len(self.r)

    @property
    def dimension(self) -> int:
        return self.z.shape[1]

    def check_horizon(self, t: float) -> None:
        if not self.r[-1] < t:
            raise DomainError(f"pin times must satisfy r_N < t, got r_N={self.r[-1]}, t={t}")

    def log_path_prefactor(self, t: float, x) -> float:
        """log of prod_m p_{r_{m+1}-r_m}(z_{m+1}-z_m) * p_{t-r_N}(x - z_N), one path copy."""
        self.check_horizon(t)
        x = np.broadcast_to(np.asarray(x, dtype=float), (self.dimension,))
        r, z = np.asarray(self.r), self.z
        total = float(log_heat_kernel_points(t - r[-1], x - z[-1]))
        if self.order > 1:
            total += math.fsum(log_heat_kernel_points(np.diff(r), np.diff(z, axis=0)))
        return total


# ---------------------------------------------------------------------------
# eps plans and the log-domain helpers


@dataclass(frozen=True)
class _EpsPlan:
    levels: tuple
    coeffs: tuple

    @property
    def extrapolated(self) -> bool:
        return len(self.levels) > 1


def _eps_plan(model: CovarianceModel, eps) -> _EpsPlan:
    levels = np.atleast_1d(np.asarray(eps, dtype=float))
    if levels.ndim != 1 or levels.size == 0:
        raise DomainError("eps must be a number or a decreasing ladder")
    for e in levels:
        model.check_eps(e)
    if levels.size == 1:
        return _EpsPlan((float(levels[0]),), (1.0,))
    c = sqrt_eps_extrapolation(levels)
    return _EpsPlan(tuple(float(e) for e in levels), tuple(float(v) for v in c))


def _signed_logsumexp(logs: np.ndarray, signs: np.ndarray, axis: int = 0):
    """log|sum signs*exp(logs)| and its sign along ``axis``."""
    with np.errstate(invalid="ignore"):
        m = np.max(np.where(signs != 0, logs, -np.inf), axis=axis, keepdims=True)
    m_safe = np.where(np.isfinite(m), m, 0.0)
    s = np.sum(signs * np.exp(logs - m_safe), axis=axis, keepdims=True)
    with np.errstate(divide="ignore"):
        out = np.log(np.abs(s)) + m_safe
    return np.squeeze(out, axis), np.squeeze(np.sign(s), axis)


def _signed_log(values: np.ndarray):
    values = np.asarray(values, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(values)), np.sign(values)


# ---------------------------------------------------------------------------
# block engine


@dataclass
class _Block:
    log_abs: np.ndarray
    sign: np.ndarray
    log_g: np.ndarray
    level_values: np.ndarray | None = None


def _run_blocks(mc: MCConfig, fn: Callable[[np.ndarray], _Block]) -> list[_Block]:
    n, size = int(mc.samples), int(mc.block_size)
    blocks = [np.arange(lo, min(lo + size, n), dtype=np.uint64) for lo in range(0, n, size)]
    if mc.workers == 1 or len(blocks) == 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=int(mc.workers)) as pool:
        return list(pool.map(fn, blocks))


def _aggregate(blocks: list[_Block], mc: MCConfig, log_prefactor: float, tag: str, details: dict) -> MomentEstimate:
    la = np.concatenate([b.log_abs for b in blocks])
    sg = np.concatenate([b.sign for b in blocks])
    lg = np.concatenate([b.log_g for b in blocks])
    n = la.size
    stats = LogWeightStats.of(lg)
    if np.any(np.isnan(la)) or np.any((sg != 0) & ~np.isfinite(la)):
        raise NumericalError("non-finite per-sample weight", {"log_weights": stats.__dict__})
    live = sg != 0
    shift = float(np.max(la[live])) if np.any(live) else 0.0
    v = np.where(live, sg * np.exp(la - shift), 0.0)
    m = math.fsum(v) / n
    var = math.fsum((v - m) ** 2) / (n - 1)
    a1 = math.fsum(np.abs(v))
    a2 = math.fsum(v * v)
    ess = a1 * a1 / a2 if a2 > 0 else float(n)
    scale_log = shift + log_prefactor
    if scale_log > 709.0:
        raise NumericalError("moment overflows double precision", {"log_scale": scale_log, "log_weights": stats.__dict__})
    scale = math.exp(scale_log)
    details = dict(details)
    if blocks and blocks[0].level_values is not None:
        lv = np.concatenate([b.level_values for b in blocks], axis=1)
        ladder = []
        for row in lv:
            mean_l = math.fsum(row) / n
            se_l = math.sqrt(math.fsum((row - mean_l) ** 2) / (n - 1) / n)
            ladder.append((mean_l * math.exp(log_prefactor), se_l * math.exp(log_prefactor)))
        details["ladder_means"] = [a for a, _ in ladder]
        details["ladder_standard_errors"] = [b for _, b in ladder]
        if len(ladder) >= 3:
            # change of the extrapolated mean when the coarsest level is dropped
            eps = details["eps"]
            means = np.array(details["ladder_means"])
            full = float(sqrt_eps_extrapolation(eps) @ means)
            reduced = float(sqrt_eps_extrapolation(eps[1:]) @ means[1:])
            details["extrapolation_residual"] = abs(full - reduced)
    return MomentEstimate(
        mean=scale * m,
        standard_error=scale * math.sqrt(var / n),
        samples=n,
        log_weight_stats=stats,
        representation_tag=tag,
        ess=ess,
        ess_flagged=ess < mc.ess_flag_fraction * n,
        details=details,
    )


def _pair_logs(paths: list[np.ndarray], weights: np.ndarray, model: CovarianceModel, plan: _EpsPlan) -> np.ndarray:
    """Interaction sums per eps level, shape (levels, batch)."""
    batch = paths[0].shape[0]
    out = np.zeros((len(plan.levels), batch))
    if model.is_zero:
        return out
    evals = [model.evaluator(e) for e in plan.levels]
    for j in range(len(paths)):
        for l in range(j + 1, len(paths)):
            diff = paths[j] - paths[l]
            r2 = np.einsum("btd,btd->bt", diff, diff)
            for i, f in enumerate(evals):
                out[i] += f(r2) @ weights
    return out


def _combine_levels(g: np.ndarray, plan: _EpsPlan):
    """log|sum_l c_l exp(G_l)| and sign, per sample."""
    if not plan.extrapolated:
        return g[0], np.ones(g.shape[1])
    c = np.asarray(plan.coeffs)[:, None]
    return _signed_logsumexp(g + np.log(np.abs(c)), np.broadcast_to(np.sign(c), g.shape), axis=0)


def _path_normals(mc: MCConfig, idx: np.ndarray, lane: int, schedule: PinSchedule) -> np.ndarray:
    m = schedule.normals_per_path(mc.steps_per_segment)
    d = schedule.dimension
    return normal_block(mc.seed, idx, lane, m * d).reshape(idx.size, m, d)


# ---------------------------------------------------------------------------
# endpoint measures for the bridge and derivative forms


@dataclass(frozen=True)
class _EndpointLaw:
    """How theta is drawn for each path copy: exact atom tuples or per-copy importance sampling."""

    center: np.ndarray
    var: float
    u0: SignedMeasure

    def atom_log_weights(self):
        lw = log_heat_kernel_points(self.var, self.center - self.u0.atom_locations)
        la, sg = _signed_log(self.u0.atom_weights)
        return lw + la, sg

    def draw(self, mc: MCConfig, idx: np.ndarray, copy: int):
        """theta of shape (B, d) with log|weight| and sign of the importance weight."""
        u0 = self.u0
        d = u0.dimension
        z = normal_block(mc.seed, idx, _THETA_LANE + copy, d)
        theta = self.center[None, :] + math.sqrt(self.var) * z
        if u0.n_atoms == 0:
            la, sg = _signed_log(u0.density(theta))
            return theta, la, sg
        # mixture: atom with probability 1/2, picked proportional to |w_a| p_var(center - a)
        la_atoms, sg_atoms = self.atom_log_weights()
        top = np.max(la_atoms)
        probs = np.exp(la_atoms - top)
        total = probs.sum()
        cdf = np.cumsum(probs) / total
        u = uniform_block(mc.seed, idx, copy, 2)
        pick = np.minimum(np.searchsorted(cdf, u[:, 1], side="right"), cdf.size - 1)
        use_atom = u[:, 0] < 0.5
        theta = np.where(use_atom[:, None], u0.atom_locations[pick], theta)
        la = np.full(idx.size, math.log(2.0) + top + math.log(total))
        sg = sg_atoms[pick].astype(float)
        dens_la, dens_sg = _signed_log(u0.density(theta[~use_atom]))
        la[~use_atom] = dens_la + math.log(2.0)
        sg[~use_atom] = dens_sg
        return theta, la, sg


def _pinned_estimate(
    k: int,
    schedule: PinSchedule,
    law: _EndpointLaw,
    model: CovarianceModel,
    plan: _EpsPlan,
    mc: MCConfig,
    log_prefactor: float,
    tag: str,
    details: dict,
) -> MomentEstimate:
    n = mc.steps_per_segment
    grid = schedule.grid(n)
    w = trapezoid_weights(grid)
    phi = schedule.terminal_profile(n)
    u0 = law.u0
    tuples = None
    if not u0.has_density:
        n_tuples = u0.n_atoms**k
        if n_tuples > mc.tuple_cap:
            raise DomainError(
                f"{u0.n_atoms} atoms give {n_tuples} endpoint tuples for k={k}, above tuple_cap={mc.tuple_cap}; "
                "raise tuple_cap or merge nearby atoms"
            )
        la_atoms, sg_atoms = law.atom_log_weights()
        tuples = np.array(list(itertools.product(range(u0.n_atoms), repeat=k)), dtype=int)
        tuple_la = la_atoms[tuples].sum(axis=1)
        tuple_sg = np.prod(sg_atoms[tuples], axis=1)
        details = {**details, "endpoint_tuples": int(n_tuples)}

    def block(idx: np.ndarray) -> _Block:
        base = [sample_pinned_paths(schedule, n, _path_normals(mc, idx, j, schedule)) for j in range(k)]
        if tuples is None:
            draws = [law.draw(mc, idx, j) for j in range(k)]
            paths = [base[j] + phi[None, :, None] * draws[j][0][:, None, :] for j in range(k)]
            g = _pair_logs(paths, w, model, plan)
            lw, sw = _combine_levels(g, plan)
            la = lw + sum(dr[1] for dr in draws)
            sg = sw * np.prod([dr[2] for dr in draws], axis=0)
            lv = np.exp(g) * np.prod([dr[2] * np.exp(dr[1]) for dr in draws], axis=0) if plan.extrapolated else None
            return _Block(la, sg, g[-1], lv)
        logs, signs, levels = [], [], []
        for ti, tup in enumerate(tuples):
            locs = u0.atom_locations[tup]
            paths = [base[j] + phi[None, :, None] * locs[j][None, None, :] for j in range(k)]
            g = _pair_logs(paths, w, model, plan)
            lw, sw = _combine_levels(g, plan)
            logs.append(lw + tuple_la[ti])
            signs.append(sw * tuple_sg[ti])
            if plan.extrapolated:
                levels.append(tuple_sg[ti] * np.exp(g + tuple_la[ti]))
            if ti == 0:
                g_first = g[-1]
        la, sg = _signed_logsumexp(np.array(logs), np.array(signs), axis=0)
        lv = np.sum(levels, axis=0) if plan.extrapolated else None
        return _Block(la, sg, g_first, lv)

    return _aggregate(_run_blocks(mc, block), mc, log_prefactor, tag, details)


def _plan_details(model: CovarianceModel, plan: _EpsPlan) -> dict:
    out = {"model": model.name, "eps": list(plan.levels) if plan.extrapolated else plan.levels[0]}
    if plan.extrapolated:
        out["extrapolation_coefficients"] = list(plan.coeffs)
    return out


def _deterministic(value: float, mc: MCConfig, tag: str, details: dict) -> MomentEstimate:
    return MomentEstimate(
        mean=value,
        standard_error=0.0,
        samples=int(mc.samples),
        log_weight_stats=LogWeightStats(0.0, 0.0, 0.0),
        representation_tag=tag,
        ess=float(mc.samples),
        details={**details, "exact": True},
    )


def _check_common(k: int, t: float, x, u0: SignedMeasure, model: CovarianceModel) -> np.ndarray:
    if int(k) != k or k < 1:
        raise DomainError("moment order k must be a positive integer")
    if not (t > 0 and math.isfinite(t)):
        raise DomainError("t must be positive and finite")
    if u0.dimension != model.dimension:
        raise DomainError(f"u0 lives in d={u0.dimension} but the covariance in d={model.dimension}")
    if not u0.is_admissible():
        raise DomainError("u0 is not admissible: its density needs a Bounded or SubGaussian growth certificate")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return np.broadcast_to(x, (u0.dimension,)).copy() if x.size == 1 else x


# ---------------------------------------------------------------------------
# public estimators


def moment_u_free(
    k: int,
    t: float,
    x,
    u0: SignedMeasure,
    model: CovarianceModel,
    eps,
    mc: MCConfig,
) -> MomentEstimate:
    """E[u(t,x)^k] as E[prod_j u0(x + B^j_t) exp(sum_{j<l} int Lambda_eps(B^j - B^l) ds)].

    ``eps`` may be a decreasing ladder; each sample is then combined across
    levels with the sqrt(eps) extrapolation weights on common random numbers
    and the per-level means are reported in ``details['ladder_means']``.
    """
    x = _check_common(k, t, x, u0, model)
    if u0.n_atoms or not u0.has_density:
        raise DomainError("the free-path form evaluates u0 along paths and cannot take atoms; use moment_u_bridge")
    if not isinstance(u0.growth, Bounded):
        raise DomainError("the free-path form needs a bounded density")
    plan = _eps_plan(model, eps)
    details = _plan_details(model, plan)
    if model.is_zero:
        return _deterministic(heat_convolve(u0, t, x) ** k, mc, FREE_BM, details)
    schedule = PinSchedule.free(t, x)
    n = mc.steps_per_segment
    w = trapezoid_weights(schedule.grid(n))

    def block(idx: np.ndarray) -> _Block:
        paths = [sample_pinned_paths(schedule, n, _path_normals(mc, idx, j, schedule)) for j in range(k)]
        ends = [_signed_log(u0.density(p[:, -1, :])) for p in paths]
        g = _pair_logs(paths, w, model, plan)
        lw, sw = _combine_levels(g, plan)
        la = lw + sum(e[0] for e in ends)
        sg = sw * np.prod([e[1] for e in ends], axis=0)
        lv = np.exp(g) * np.prod([e[1] * np.exp(e[0]) for e in ends], axis=0) if plan.extrapolated else None
        return _Block(la, sg, g[-1], lv)

    return _aggregate(_run_blocks(mc, block), mc, 0.0, FREE_BM, details)


def moment_u_bridge(
    k: int,
    t: float,
    x,
    u0: SignedMeasure,
    model: CovarianceModel,
    eps,
    mc: MCConfig,
) -> MomentEstimate:
    """E[u(t,x)^k] through bridges from x to theta_j, theta_j integrated against u0(d theta) p_t(x - theta).

    Purely atomic u0 is summed exactly over atom tuples with common random
    numbers across tuples; a density is importance sampled from N(x, t I).
    """
    x = _check_common(k, t, x, u0, model)
    plan = _eps_plan(model, eps)
    details = _plan_details(model, plan)
    if model.is_zero:
        return _deterministic(heat_convolve(u0, t, x) ** k, mc, BRIDGE, details)
    schedule = PinSchedule.bridge(t, x, np.zeros_like(x))
    law = _EndpointLaw(x, float(t), u0)
    return _pinned_estimate(int(k), schedule, law, model, plan, mc, 0.0, BRIDGE, details)


def _derivative_schedule(spec: DerivativeSpec, t: float, x: np.ndarray) -> PinSchedule:
    r = np.asarray(spec.r)
    times = np.append((t - r)[::-1], t)
    values = np.vstack([spec.z[::-1], np.zeros((1, spec.dimension))])
    return PinSchedule(spec.dimension, t, x, times, values)


def moment_derivative(
    spec: DerivativeSpec,
    t: float,
    x,
    u0: SignedMeasure,
    model: CovarianceModel,
    eps,
    mc: MCConfig,
) -> MomentEstimate:
    """E[(D^N_{r,z} u(t,x))^k] from k multi-pinned paths.

    Each copy starts at x, is pinned to z_N, ..., z_1 at times t - r_N < ... < t - r_1
    and to theta_j at time t; theta_j is integrated against u0(d theta) p_{r_1}(z_1 - theta).
    The deterministic heat-kernel prefactor is applied in log form.
    """
    x = _check_common(spec.k, t, x, u0, model)
    if spec.dimension != u0.dimension:
        raise DomainError("pin points and u0 differ in dimension")
    spec.check_horizon(t)
    k = spec.k
    plan = _eps_plan(model, eps)
    details = {**_plan_details(model, plan), "order": spec.order}
    log_pref = k * spec.log_path_prefactor(t, x)
    if model.is_zero:
        conv = heat_convolve(u0, spec.r[0], spec.z[0])
        sign = 1.0 if conv >= 0 or k % 2 == 0 else -1.0
        if conv == 0:
            return _deterministic(0.0, mc, DERIVATIVE, details)
        value = sign * math.exp(log_pref + k * math.log(abs(conv)))
        return _deterministic(value, mc, DERIVATIVE, details)
    schedule = _derivative_schedule(spec, t, x)
    law = _EndpointLaw(spec.z[0].copy(), spec.r[0], u0)
    return _pinned_estimate(k, schedule, law, model, plan, mc, log_pref, DERIVATIVE, details)


def _abs_measure(u0: SignedMeasure) -> SignedMeasure:
    dens = u0.density
    abs_dens = (lambda y: np.abs(dens(y))) if dens is not None else None
    return SignedMeasure(u0.dimension, u0.atom_locations, np.abs(u0.atom_weights), abs_dens, u0.growth, name=f"|{u0.name}|")


def corollary_bound(spec: DerivativeSpec, t: float, x, u0: SignedMeasure, C: float) -> float:
    """C^(1/k) (p_{r_1} * |u0|)(z_1) prod_m p_{r_{m+1}-r_m}(z_{m+1}-z_m) p_{t-r_N}(x - z_N)."""
    if not C > 0:
        raise DomainError("C must be positive")
    x = np.broadcast_to(np.asarray(x, dtype=float), (spec.dimension,))
    conv = heat_convolve(_abs_measure(u0), spec.r[0], spec.z[0])
    return C ** (1.0 / spec.k) * conv * math.exp(spec.log_path_prefactor(t, x))


@dataclass(frozen=True)
class CorollarySweep:
    r_values: tuple
    z_values: tuple
    ratios: np.ndarray
    standard_errors: np.ndarray
    c_root: float
    k: int = 2

    @property
    def constant(self) -> float:
        """Empirical C_{t,k}: the largest ratio raised to the power k."""
        return self.c_root**self.k


def corollary_sweep(
    t: float,
    x,
    u0: SignedMeasure,
    model: CovarianceModel,
    eps,
    mc: MCConfig,
    r_values: Sequence[float],
    z_values: Sequence,
    k: int = 2,
) -> CorollarySweep:
    """Ratios estimate^(1/k) / corollary_bound(C=1) over an (r_1, z_1) grid with N = 1.

    Each grid point gets its own seed offset so the points are independent.
    The maximum ratio is the empirical C_{t,k}^(1/k).
    """
    ratios = np.zeros((len(r_values), len(z_values)))
    ses = np.zeros_like(ratios)
    for i, r in enumerate(r_values):
        for j, z in enumerate(z_values):
            spec = DerivativeSpec((r,), np.reshape(z, (1, -1)), k)
            est = moment_derivative(spec, t, x, u0, model, eps, mc.replace(seed=(mc.seed + 7919 * (i * len(z_values) + j)) % 2**64))
            bound = corollary_bound(spec, t, x, u0, 1.0)
            m = max(est.mean, 0.0)
            ratios[i, j] = m ** (1.0 / k) / bound
            # delta method for the k-th root
            ses[i, j] = est.standard_error * (m ** (1.0 / k - 1.0) / k) / bound if m > 0 else math.inf
    return CorollarySweep(
        tuple(float(r) for r in r_values),
        tuple(np.asarray(z_values, dtype=float).tolist()),
        ratios,
        ses,
        float(ratios.max()),
        int(k),
    )
