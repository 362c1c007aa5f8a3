"""Brownian motions pinned at finitely many times, sampled on fixed grids.

Between consecutive pins the path is a Brownian bridge. Each bridge segment is
built by sequential Gaussian conditioning, which gives the exact
finite-dimensional law on the grid; the piecewise-linear interpolation of the
pins is added afterwards. If the last pin sits before the horizon, the path
runs free after it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .rng import Stream

__all__ = [
    "PinSchedule",
    "SampledPath",
    "bridge_mean",
    "sample_pinned_path",
    "sample_pinned_paths",
]


@dataclass(frozen=True)
class PinSchedule:
    """Start point at time 0 plus pins (tau_i, value_i) with 0 < tau_1 < ... <= horizon."""

    dimension: int
    horizon: float
    start: np.ndarray
    pin_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    pin_values: np.ndarray = field(default_factory=lambda: np.zeros((0, 1)))

    def __post_init__(self):
        d = int(self.dimension)
        if d < 1:
            raise DomainError("dimension must be a positive integer")
        t = float(self.horizon)
        if not (t > 0 and math.isfinite(t)):
            raise DomainError(f"horizon must be positive and finite, got {self.horizon}")
        start = np.atleast_1d(np.asarray(self.start, dtype=float))
        if start.size == 1 and d > 1:
            start = np.full(d, start[0])
        if start.shape != (d,):
            raise DomainError(f"start must be a point in R^{d}")
        times = np.atleast_1d(np.asarray(self.pin_times, dtype=float))
        values = np.asarray(self.pin_values, dtype=float).reshape(times.size, d)
        if times.size:
            if times[0] <= 0 or times[-1] > t:
                raise DomainError("pin times must lie in (0, horizon]")
            if np.any(np.diff(times) <= 0):
                raise DomainError("pin times must be strictly increasing")
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(start))):
            raise DomainError("start and pin values must be finite")
        object.__setattr__(self, "dimension", d)
        object.__setattr__(self, "horizon", t)
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "pin_times", times)
        object.__setattr__(self, "pin_values", values)

    @classmethod
    def free(cls, horizon: float, start) -> "PinSchedule":
        start = np.atleast_1d(np.asarray(start, dtype=float))
        return cls(start.size, horizon, start)

    @classmethod
    def bridge(cls, horizon: float, start, end) -> "PinSchedule":
        start = np.atleast_1d(np.asarray(start, dtype=float))
        return cls(start.size, horizon, start, [horizon], np.reshape(end, (1, -1)))

    @property
    def n_pins(self) -> int:
        return self.pin_times.size

    @property
    def terminal_pinned(self) -> bool:
        return self.n_pins > 0 and self.pin_times[-1] == self.horizon

    @property
    def knots(self) -> np.ndarray:
        """Segment endpoints: 0, the pin times and the horizon."""
        k = np.concatenate([[0.0], self.pin_times])
        return k if self.terminal_pinned else np.append(k, self.horizon)

    def with_terminal(self, value) -> "PinSchedule":
        """Same schedule with the last pin value replaced."""
        if not self.terminal_pinned:
            raise DomainError("schedule has no pin at the horizon")
        vals = self.pin_values.copy()
        vals[-1] = np.asarray(value, dtype=float)
        return PinSchedule(self.dimension, self.horizon, self.start, self.pin_times, vals)

    def grid(self, steps_per_segment: int) -> np.ndarray:
        n = _check_steps(steps_per_segment)
        k = self.knots
        parts = [np.linspace(k[i], k[i + 1], n + 1)[:-1] for i in range(k.size - 1)]
        return np.append(np.concatenate(parts), k[-1])

    def normals_per_path(self, steps_per_segment: int) -> int:
        """Standard normals consumed per coordinate by one path."""
        n = _check_steps(steps_per_segment)
        m = self.n_pins * (n - 1)
        return m if self.terminal_pinned else m + n

    def terminal_profile(self, steps_per_segment: int) -> np.ndarray:
        """Grid weights phi with mean(s) linear in the terminal pin value as phi(s) * value."""
        if not self.terminal_pinned:
            raise DomainError("schedule has no pin at the horizon")
        g = self.grid(steps_per_segment)
        a = self.knots[-2]
        phi = np.zeros_like(g)
        last = g >= a
        phi[last] = (g[last] - a) / (self.horizon - a)
        return phi


@dataclass(frozen=True)
class SampledPath:
    grid: np.ndarray
    values: np.ndarray

    @property
    def dimension(self) -> int:
        return self.values.shape[1]

    def at(self, s: float) -> np.ndarray:
        i = np.searchsorted(self.grid, s)
        if i >= self.grid.size or self.grid[i] != s:
            raise DomainError(f"time {s} is not a grid point")
        return self.values[i]


def _check_steps(steps) -> int:
    n = int(steps)
    if n < 1 or n != steps:
        raise DomainError(f"steps_per_segment must be a positive integer, got {steps}")
    return n


def bridge_mean(schedule: PinSchedule, s) -> np.ndarray:
    """Piecewise-linear interpolation of (0, start) and the pins; constant after the last pin."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0) or np.any(s_arr > schedule.horizon):
        raise DomainError(f"time must lie in [0, {schedule.horizon}]")
    times = np.concatenate([[0.0], schedule.pin_times])
    values = np.vstack([schedule.start, schedule.pin_values])
    out = np.stack([np.interp(s_arr, times, values[:, i]) for i in range(schedule.dimension)], axis=-1)
    return out


def sample_pinned_paths(schedule: PinSchedule, steps_per_segment: int, normals: np.ndarray) -> np.ndarray:
    """Paths of shape (batch, grid, d) from normals of shape (batch, normals_per_path, d)."""
    n = _check_steps(steps_per_segment)
    d = schedule.dimension
    Z = np.asarray(normals, dtype=float)
    if Z.ndim != 3 or Z.shape[1:] != (schedule.normals_per_path(n), d):
        raise DomainError("normals have the wrong shape for this schedule")
    batch = Z.shape[0]
    grid = schedule.grid(n)
    knots = schedule.knots
    out = np.empty((batch, grid.size, d))
    used = 0
    for seg in range(knots.size - 1):
        a, b = knots[seg], knots[seg + 1]
        s = grid[seg * n : (seg + 1) * n + 1]
        lo = seg * n
        if seg < schedule.n_pins:
            # bridge from 0 to 0 on [a, b]: X_i / (b - s_i) is a Gaussian random walk
            rem = b - s
            h = np.diff(s)
            if n > 1:
                scale = np.sqrt(h[:-1] * rem[1:-1] / rem[:-2]) / rem[1:-1]
                walk = np.cumsum(Z[:, used : used + n - 1, :] * scale[None, :, None], axis=1)
                out[:, lo + 1 : lo + n, :] = walk * rem[1:-1, None]
                used += n - 1
            out[:, lo, :] = 0.0
            out[:, lo + n, :] = 0.0
        else:
            # free segment after the last pin, relative to the last pin value
            inc = Z[:, used : used + n, :] * np.sqrt(np.diff(s))[None, :, None]
            out[:, lo, :] = 0.0
            out[:, lo + 1 : lo + n + 1, :] = np.cumsum(inc, axis=1)
            used += n
    out += bridge_mean(schedule, grid)[None]
    # pins are exact values, not the sum of a mean and a rounding-level zero
    out[:, 0, :] = schedule.start
    for i in range(schedule.n_pins):
        out[:, (i + 1) * n, :] = schedule.pin_values[i]
    return out


def sample_pinned_path(schedule: PinSchedule, steps_per_segment: int, stream: Stream) -> SampledPath:
    """One path; draws ``normals_per_path * d`` normals from ``stream`` in (time, coordinate) order."""
    n = _check_steps(steps_per_segment)
    m = schedule.normals_per_path(n)
    Z = np.asarray(stream.normal(m * schedule.dimension)).reshape(1, m, schedule.dimension)
    values = sample_pinned_paths(schedule, n, Z)[0]
    return SampledPath(schedule.grid(n), values)
