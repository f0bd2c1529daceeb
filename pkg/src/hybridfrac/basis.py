"""Hybrid-function (sample-and-hold + right-handed triangular) series on [0, T).

A function is carried by its node samples c_0..c_m. The sample-and-hold part
holds c_i on [ih, (i+1)h) and the triangular part ramps by c_{i+1} - c_i over
the same subinterval, so the representation is the piecewise-linear
interpolant through the nodes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    m: int
    h: float

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m!r}")
        if not (self.h > 0 and np.isfinite(self.h)):
            raise ValueError(f"h must be positive, got {self.h!r}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "h", float(self.h))

    @classmethod
    def from_T(cls, T: float, m: int | None = None, h: float | None = None) -> "Grid":
        """Build a grid on [0, T] from exactly one of ``m`` or ``h``."""
        if (m is None) == (h is None):
            raise ValueError("give exactly one of m or h")
        if not T > 0:
            raise ValueError(f"T must be positive, got {T!r}")
        if m is None:
            m_float = T / h
            m = int(round(m_float))
            if m < 1 or abs(m * h - T) > 1e-9 * T:
                raise ValueError(f"h={h} does not divide T={T}")
        return cls(m, T / m)

    @property
    def T(self) -> float:
        return self.m * self.h

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.m + 1) * self.h

    def same_as(self, other: "Grid") -> bool:
        return self.m == other.m and abs(self.h - other.h) <= 1e-12 * self.h


@dataclass(frozen=True)
class HFSeries:
    grid: Grid
    cS: np.ndarray
    cT: np.ndarray
    last_sample: float = field(default=0.0)

    def __post_init__(self):
        cS = np.array(self.cS, dtype=float)
        cT = np.array(self.cT, dtype=float)
        if cS.shape != (self.grid.m,) or cT.shape != (self.grid.m,):
            raise ValueError(
                f"coefficient vectors must have length m={self.grid.m}, "
                f"got {cS.shape} and {cT.shape}"
            )
        cS.flags.writeable = False
        cT.flags.writeable = False
        object.__setattr__(self, "cS", cS)
        object.__setattr__(self, "cT", cT)
        object.__setattr__(self, "last_sample", float(self.last_sample))

    @property
    def node_values(self) -> np.ndarray:
        """Values at t_0..t_m (length m+1)."""
        return np.append(self.cS, self.last_sample)

    def __call__(self, t):
        return hf_eval(self, t)

    def __add__(self, other: "HFSeries") -> "HFSeries":
        return hf_add(self, other)

    def __mul__(self, other):
        if isinstance(other, HFSeries):
            return hf_multiply(self, other)
        return hf_scale(self, other)

    __rmul__ = __mul__


def sample_to_hf(samples, grid: Grid) -> HFSeries:
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (grid.m + 1,):
        raise ValueError(
            f"expected {grid.m + 1} samples for m={grid.m}, got shape {samples.shape}"
        )
    return HFSeries(grid, samples[:-1], np.diff(samples), samples[-1])


def hf_from_function(f: Callable, grid: Grid) -> HFSeries:
    """Sample ``f`` (vectorised over t) at the grid nodes."""
    t = grid.nodes
    values = np.broadcast_to(np.asarray(f(t), dtype=float), t.shape)
    return sample_to_hf(values, grid)


def hf_eval(series: HFSeries, t):
    grid = series.grid
    t_arr = np.asarray(t, dtype=float)
    tol = 1e-12 * grid.T
    if np.any(t_arr < -tol) or np.any(t_arr > grid.T + tol):
        raise ValueError(f"t outside [0, {grid.T}]")
    pos = np.clip(t_arr / grid.h, 0.0, grid.m)
    # t_j / h can land an ulp below j; snap so nodes return their samples exactly
    near = np.rint(pos)
    pos = np.where(np.abs(pos - near) <= 1e-12 * np.maximum(1.0, near), near, pos)
    i =np.minimum(np.floor(pos).astype(int), grid.m - 1)
    frac = pos - i
    out = series.cS[i] + series.cT[i] * frac
    # the right end is pinned to the stored sample so node m is exact
    out = np.where(pos >= grid.m, series.last_sample, out)
    return float(out) if out.ndim == 0 else out


def _check_grids(a: HFSeries, b: HFSeries):
    if not a.grid.same_as(b.grid):
        raise GridMismatchError(f"grid mismatch: {a.grid} vs {b.grid}")


def hf_add(a: HFSeries, b: HFSeries) -> HFSeries:
    _check_grids(a, b)
    return HFSeries(a.grid, a.cS + b.cS, a.cT + b.cT, a.last_sample + b.last_sample)


def hf_scale(a: HFSeries, k: float) -> HFSeries:
    k = float(k)
    return HFSeries(a.grid, k * a.cS, k * a.cT, k * a.last_sample)


def hf_multiply(a: HFSeries, b: HFSeries) -> HFSeries:
    _check_grids(a, b)
    cS = a.cS * b.cS
    cT = a.cS * b.cT + a.cT * b.cS + a.cT * b.cT
    return HFSeries(a.grid, cS, cT, a.last_sample * b.last_sample)


def hf_power(g: HFSeries, n: int) -> HFSeries:
    if int(n) != n or n < 0:
        raise ValueError(f"power must be a nonnegative integer, got {n!r}")
    return sample_to_hf(g.node_values ** int(n), g.grid)


def hf_inner_products(grid: Grid) -> dict[str, np.ndarray]:
    """Exact Gram matrices of the two basis sets over [0, T).

    Supports are disjoint, so both matrices are diagonal: h for the
    sample-and-hold set and h/3 for the triangular set.
    """
    eye = np.eye(grid.m)
    return {"SS": grid.h * eye, "TT": (grid.h / 3.0) * eye}
