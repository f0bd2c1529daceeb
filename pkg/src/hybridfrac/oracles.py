"""Independent reference solutions: RK4, fractional Adams PECE, closed forms."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import Grid
from .opmatrix import gamma_fn
from .solver import FractionalSystem, initial_shift


class OracleError(RuntimeError):
    pass


@dataclass
class OracleResult:
    grid: Grid
    nodes: np.ndarray
    method: str

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes


def rk4_solve(system: FractionalSystem, grid: Grid) -> OracleResult:
    if not np.all(system.orders == 1.0):
        raise ValueError(f"rk4 needs every order equal to 1, got {system.orders.tolist()}")
    h = grid.h
    t = grid.nodes
    Y = np.empty((grid.m + 1, system.n))
    Y[0] = system.y_initial
    f = system.evaluate
    for j in range(grid.m):
        y, tj = Y[j], t[j]
        k1 = f(tj, y)
        k2 = f(tj + h / 2, y + h / 2 * k1)
        k3 = f(tj + h / 2, y + h / 2 * k2)
        k4 = f(tj + h, y + h * k3)
        Y[j + 1] = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return OracleResult(grid, Y, "rk4")


def pece_solve(system: FractionalSystem, grid: Grid, corrector_iters: int = 1) -> OracleResult:
    """Fractional Adams-Bashforth-Moulton predictor-corrector.

    Rectangle-rule predictor and product-trapezoid corrector on the Volterra
    form y = Taylor(y0) + J^alpha f, with per-state orders.
    """
    if not 1 <= corrector_iters <= 10:
        raise ValueError("corrector_iters must be between 1 and 10")
    a = system.orders
    m, h = grid.m, grid.h
    t = grid.nodes
    shift = np.column_stack([p(t) for p in initial_shift(system)])
    F = np.empty((m + 1, system.n))
    Y = np.empty((m + 1, system.n))
    Y[0] = system.y_initial
    F[0] = system.evaluate(t[0], Y[0])
    cp = h**a / np.array([gamma_fn(x + 1) for x in a])
    cc = h**a / np.array([gamma_fn(x + 2) for x in a])
    d = np.arange(m + 2, dtype=float)[:, None]
    pw_a = d**a  # (m+2, n)
    pw_a1 = d ** (a + 1)
    for k in range(m):
        # predictor weights b_{j,k+1} ∝ (k+1-j)^a - (k-j)^a, j = 0..k
        r = k - np.arange(k + 1)
        b = pw_a[r + 1] - pw_a[r]
        pred = shift[k + 1] + cp * np.einsum("jn,jn->n", b, F[: k + 1])
        # corrector weights
        w = np.empty((k + 1, system.n))
        w[0] = pw_a1[k] - (k - a) * pw_a[k + 1]
        if k >= 1:
            rr = k - np.arange(1, k + 1)  # k - j for j = 1..k
            w[1:] = pw_a1[rr + 2] + pw_a1[rr] - 2 * pw_a1[rr + 1]
        known = shift[k + 1] + cc * np.einsum("jn,jn->n", w, F[: k + 1])
        y = pred
        for _ in range(corrector_iters):
            fy = system.evaluate(t[k + 1], y)
            y = known + cc * fy
        if not np.all(np.isfinite(y)):
            raise OracleError(f"PECE produced non-finite values at step {k + 1}")
        Y[k + 1] = y
        F[k + 1] = system.evaluate(t[k + 1], y)
    return OracleResult(grid, Y, "pece")


def exact_solutions(name: str, alpha: float | None = None):
    """Closed-form references; each returns f(t) -> array of shape (len(t), n)."""
    if name == "frac-integral-of-t":
        if alpha is None or alpha <= 0:
            raise ValueError("frac-integral-of-t needs a positive alpha")
        g = gamma_fn(2 + alpha)
        return lambda t: (np.asarray(t, float) ** (1 + alpha) / g)[:, None]
    if name == "example-6.2":
        def sol(t):
            t = np.asarray(t, float)
            return np.column_stack([np.exp(t) * np.sin(t), np.exp(t) * np.cos(t)])
        return sol
    if name in ("triple-integral-of-t", "eq-20-sum"):
        return lambda t: (
            np.asarray(t, float) ** 2 / 2
            + np.asarray(t, float) ** 3 / 6
            + np.asarray(t, float) ** 4 / 24
        )[:, None]
    raise KeyError(f"no closed form named {name!r}")


EXACT_NAMES = ("frac-integral-of-t", "example-6.2", "triple-integral-of-t")


@dataclass
class ErrorReport:
    abs_error: np.ndarray
    inf_norm: np.ndarray
    pct_final: np.ndarray


def error_report(a, b) -> ErrorReport:
    """Compare node matrices ``a`` (approximation) and ``b`` (reference)."""
    a = np.atleast_2d(np.asarray(a, float))
    b = np.atleast_2d(np.asarray(b, float))
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    err = np.abs(a - b)
    last_a, last_b = a[-1], b[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        pct = np.where(last_a == last_b, 0.0, 100 * np.abs(last_a - last_b) / np.abs(last_b))
    return ErrorReport(err, err.max(axis=0), pct)
