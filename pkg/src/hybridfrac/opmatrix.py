"""One-shot operational matrices for (fractional) integration in the HF domain.

Every matrix here is upper-triangular Toeplitz, so only its first row is kept.
Multiplying a row vector of HF coefficients by such a matrix is a causal
convolution truncated to m entries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .basis import Grid, GridMismatchError, HFSeries

# above this index the coefficient sequences switch to a series in 1/k
SERIES_CUTOFF = 8
_SERIES_TERMS = 32


def gamma_fn(x: float) -> float:
    if not x > 0:
        raise ValueError(f"gamma_fn is only defined here for x > 0, got {x!r}")
    return math.gamma(x)


@dataclass(frozen=True)
class UpperToeplitz:
    first_row: np.ndarray

    def __post_init__(self):
        row = np.array(self.first_row, dtype=float)
        if row.ndim != 1 or row.size == 0:
            raise ValueError("first_row must be a non-empty vector")
        row.flags.writeable = False
        object.__setattr__(self, "first_row", row)

    @property
    def m(self) -> int:
        return self.first_row.size

    def dense(self) -> np.ndarray:
        m = self.m
        i, j = np.indices((m, m))
        return np.where(j >= i, self.first_row[np.clip(j - i, 0, m - 1)], 0.0)

    def rmatvec(self, v) -> np.ndarray:
        """Row-vector product ``v @ M``; entry j only sees v[0..j]."""
        return self._rmatvec_ext(v).astype(float)

    def _rmatvec_ext(self, v) -> np.ndarray:
        # extended-precision accumulation where the platform has it
        v = np.asarray(v, dtype=float)
        if v.shape != (self.m,):
            raise ValueError(f"vector length {v.shape} != ({self.m},)")
        acc = np.convolve(v.astype(np.longdouble), self.first_row.astype(np.longdouble))
        return acc[: self.m]

    def __add__(self, other: "UpperToeplitz") -> "UpperToeplitz":
        return UpperToeplitz(self.first_row + other.first_row)

    def __mul__(self, k: float) -> "UpperToeplitz":
        return UpperToeplitz(k * self.first_row)

    __rmul__ = __mul__


@dataclass(frozen=True)
class OpMatrixSet:
    """The four matrices mapping (C_S, C_T) of f to (C_S, C_T) of J^alpha f.

    ``Pss``/``Pst`` carry the sample-and-hold set to its S and T parts,
    ``Pts``/``Ptt`` the triangular set.
    """

    alpha: float
    grid: Grid
    Pss: UpperToeplitz
    Pst: UpperToeplitz
    Pts: UpperToeplitz
    Ptt: UpperToeplitz


def build_first_order(grid: Grid) -> OpMatrixSet:
    m, h = grid.m, grid.h
    ones = np.ones(m)
    ones[0] = 0.0
    impulse = np.zeros(m)
    impulse[0] = 1.0
    return OpMatrixSet(
        1.0,
        grid,
        Pss=UpperToeplitz(h * ones),
        Pst=UpperToeplitz(h * impulse),
        Pts=UpperToeplitz(h / 2 * ones),
        Ptt=UpperToeplitz(h / 2 * impulse),
    )


def _binomials(a: float, n: int) -> np.ndarray:
    out = np.empty(n)
    out[0] = 1.0
    for r in range(1, n):
        out[r] = out[r - 1] * (a - r + 1) / r
    return out


def _series_tail(alpha: float, k: np.ndarray):
    """ς, ξ, φ, ψ for large k from binomial expansions in x = 1/k.

    Each bracket below is a difference of nearly equal powers; expanding
    removes the cancellation analytically instead of numerically.
    """
    n = _SERIES_TERMS
    x = 1.0 / k
    r = np.arange(n)
    b = _binomials(alpha, n)
    b1 = _binomials(alpha + 1.0, n)
    sign = (-1.0) ** r
    b_prev = np.concatenate(([0.0], b[:-1]))

    # 1 - (1-x)^a
    c_sig = -b * sign
    c_sig[0] = 0.0
    # (1+x)^a - 2 + (1-x)^a
    c_xi = np.where(r % 2 == 0, 2.0 * b, 0.0)
    c_xi[0] = 0.0
    # 1 - (1-x)^a (1+a x)
    c_phi = -sign * (b - alpha * b_prev)
    c_phi[:2] = 0.0
    # (1+x)^(a+1) - (1+(1+a)x) - 1 + (1+a x)(1-x)^a
    c_psi = b1 + sign * (b - alpha * b_prev)
    # the x^2 coefficient is identically zero; keep it from rounding to ~eps
    c_psi[:3] = 0.0

    powers = x[:, None] ** r[None, :]
    ka = k**alpha
    return (
        ka * (powers @ c_sig),
        ka * (powers @ c_xi),
        ka * k * (powers @ c_phi),
        ka * k * (powers @ c_psi),
    )


@lru_cache(maxsize=64)
def _coefficients(alpha: float, m: int):
    """Return ς_k, ξ_k, φ_k, ψ_k for k = 1..m-1 (each length m-1)."""
    k = np.arange(1, m, dtype=float)
    small = k <= SERIES_CUTOFF
    # the direct forms cancel; extended precision keeps them near 1 ulp
    a = np.longdouble(alpha)
    ks = k[small].astype(np.longdouble)
    sig = np.empty_like(k)
    xi = np.empty_like(k)
    phi = np.empty_like(k)
    psi = np.empty_like(k)
    sig[small] = ks**a - (ks - 1) ** a
    xi[small] = (ks + 1) ** a - 2 * ks**a + (ks - 1) ** a
    phi[small] = ks ** (a + 1) - (ks - 1) ** a * (ks + a)
    psi[small] = (
        (ks + 1) ** (a + 1)
        - (ks + 1 + a) * ks**a
        - ks ** (a + 1)
        + (ks + a) * (ks - 1) ** a
    )
    if not small.all():
        big = ~small
        sig[big], xi[big], phi[big], psi[big] = _series_tail(alpha, k[big])
    for arr in (sig, xi, phi, psi):
        arr.flags.writeable = False
    return sig, xi, phi, psi


def coefficient_sequences(alpha: float, m: int):
    """Public view of ς, ξ, φ, ψ for k = 1..m-1."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    return _coefficients(float(alpha), int(m))


def build_generalized(alpha: float, grid: Grid) -> OpMatrixSet:
    if not alpha > 0:
        raise ValueError(f"integration order must be positive, got {alpha!r}")
    alpha = float(alpha)
    m, h = grid.m, grid.h
    sig, xi, phi, psi = _coefficients(alpha, m)
    c1 = h**alpha / gamma_fn(alpha + 1)
    c2 = h**alpha / gamma_fn(alpha + 2)
    return OpMatrixSet(
        alpha,
        grid,
        Pss=UpperToeplitz(c1 * np.concatenate(([0.0], sig))),
        Pst=UpperToeplitz(c1 * np.concatenate(([1.0], xi))),
        Pts=UpperToeplitz(c2 * np.concatenate(([0.0], phi))),
        Ptt=UpperToeplitz(c2 * np.concatenate(([1.0], psi))),
    )


def frac_integrate(series: HFSeries, mats: OpMatrixSet) -> HFSeries:
    if not series.grid.same_as(mats.grid):
        raise GridMismatchError(f"grid mismatch: {series.grid} vs {mats.grid}")
    cS = mats.Pss._rmatvec_ext(series.cS) + mats.Pts._rmatvec_ext(series.cT)
    cT = mats.Pst._rmatvec_ext(series.cS) + mats.Ptt._rmatvec_ext(series.cT)
    return HFSeries(series.grid, cS.astype(float), cT.astype(float), float(cS[-1] + cT[-1]))
