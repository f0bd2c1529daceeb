"""Caputo systems solved through the hybrid-function Volterra formulation.

With y_i = p_i + z_i, where p_i is the Taylor polynomial of the initial data,
each state satisfies z_i = J^{alpha_i} f_i(t, y). Expanding z_i and the
integrand in HFs and applying the one-shot matrices gives coefficient
equations whose S-part matrices have a zero diagonal, so node j depends on
nodes 0..j only. The default solver marches those equations node by node.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .basis import Grid, HFSeries, sample_to_hf
from .opmatrix import OpMatrixSet, build_generalized, frac_integrate, gamma_fn

log = logging.getLogger(__name__)

RHS = Callable[[float, np.ndarray], np.ndarray]

MAX_ORDER = 2.5
LATTICE_POINTS = 5
LATTICE_CAP = LATTICE_POINTS**5


class SolverError(RuntimeError):
    def __init__(self, message: str, node: int | None = None, residual: float | None = None):
        super().__init__(message)
        self.node = node
        self.residual = residual


class ModelError(RuntimeError):
    pass


def n_initial_conditions(alpha: float) -> int:
    """ceil(alpha), robust to alpha given as 1.0000000000000002."""
    return max(1, math.ceil(alpha - 1e-12))


@dataclass
class FractionalSystem:
    orders: Sequence[float]
    init: Sequence[Sequence[float]]
    rhs: RHS
    T: float = 1.0
    name: str = "system"
    state_names: Sequence[str] | None = None

    def __post_init__(self):
        self.orders = np.asarray(self.orders, dtype=float)
        self.init = [tuple(float(v) for v in row) for row in self.init]
        n = self.orders.size
        if n == 0:
            raise ValueError("system needs at least one state")
        if len(self.init) != n:
            raise ValueError(f"{n} orders but {len(self.init)} initial-data rows")
        for i, (a, row) in enumerate(zip(self.orders, self.init)):
            if not 0 < a <= MAX_ORDER:
                raise ValueError(f"order of state {i} must lie in (0, {MAX_ORDER}], got {a}")
            need = n_initial_conditions(a)
            if len(row) != need:
                raise ValueError(
                    f"state {i} has order {a} and needs {need} initial values, got {len(row)}"
                )
        if not self.T > 0:
            raise ValueError(f"horizon T must be positive, got {self.T}")
        if self.state_names is None:
            self.state_names = [f"y{i + 1}" for i in range(n)]
        elif len(self.state_names) != n:
            raise ValueError("state_names length does not match the number of states")
        self.state_names = list(self.state_names)

    @property
    def n(self) -> int:
        return self.orders.size

    @property
    def y_initial(self) -> np.ndarray:
        return np.array([row[0] for row in self.init])

    def evaluate(self, t: float, y: np.ndarray) -> np.ndarray:
        out = np.asarray(self.rhs(t, y), dtype=float)
        if out.shape != (self.n,):
            raise ModelError(f"{self.name}: RHS returned shape {out.shape}, expected ({self.n},)")
        if not np.all(np.isfinite(out)):
            raise ModelError(f"{self.name}: non-finite RHS at t={t:.6g}, y={y}")
        return out


@dataclass
class SolveConfig:
    m: int | None = None
    h: float | None = None
    newton_tol: float = 1e-12
    max_newton_iters: int = 50
    jacobian_step: float = 1e-7
    mode: str = "marching"
    max_global_iters: int = 5000
    lipschitz: float | None = None
    estimate_lipschitz: bool = True

    def __post_init__(self):
        if not self.newton_tol > 0:
            raise ValueError("newton_tol must be positive")
        if self.max_newton_iters < 1:
            raise ValueError("max_newton_iters must be at least 1")
        if self.mode not in ("marching", "global"):
            raise ValueError(f"mode must be 'marching' or 'global', got {self.mode!r}")
        if self.m is None and self.h is None:
            raise ValueError("give one of m or h")

    def grid_for(self, T: float) -> Grid:
        if self.m is not None and self.h is not None:
            if abs(self.m * self.h - T) > 1e-9 * T:
                raise ValueError(f"m={self.m} and h={self.h} disagree with T={T}")
            return Grid.from_T(T, m=self.m)
        return Grid.from_T(T, m=self.m, h=self.h)


@dataclass(frozen=True)
class ContractionReport:
    value: float | None
    guaranteed: bool
    status: str
    lipschitz: float | None = None
    lipschitz_source: str | None = None


@dataclass
class SolveDiagnostics:
    mode: str
    iterations: np.ndarray
    max_residual: float
    contraction: ContractionReport | None = None
    global_iterations: int | None = None

    def to_dict(self) -> dict:
        c = self.contraction
        return {
            "mode": self.mode,
            "newton_iterations": self.iterations.tolist(),
            "max_newton_iterations": int(self.iterations.max(initial=0)),
            "max_residual": self.max_residual,
            "global_iterations": self.global_iterations,
            "contraction": None
            if c is None
            else {
                "value": c.value,
                "guaranteed": c.guaranteed,
                "status": c.status,
                "lipschitz": c.lipschitz,
                "lipschitz_source": c.lipschitz_source,
            },
        }


@dataclass
class SolveResult:
    grid: Grid
    nodes: np.ndarray
    series: list[HFSeries]
    z_series: list[HFSeries]
    diagnostics: SolveDiagnostics
    state_names: list[str] = field(default_factory=list)

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes


def initial_shift(system: FractionalSystem) -> list[Polynomial]:
    """Taylor polynomials sum_k y^(k)(0) t^k / k! of each state's initial data."""
    return [
        Polynomial([v / math.factorial(k) for k, v in enumerate(row)])
        for row in system.init
    ]


def contraction_bound(n: int, L: float, alpha: float, T: float) -> ContractionReport:
    """Evaluate n L T^alpha / Gamma(alpha + 1) and the convergence verdict."""
    if n < 1 or L < 0 or not T > 0:
        raise ValueError("need n >= 1, L >= 0 and T > 0")
    if not 0 < alpha <= 1:
        return ContractionReport(None, False, "theorem not applicable (alpha outside (0, 1])", L)
    value = n * L * T**alpha / gamma_fn(alpha + 1)
    if value == 0:
        return ContractionReport(0.0, False, "degenerate: trivially constant RHS", L)
    if value < 1:
        return ContractionReport(value, True, "guaranteed", L)
    return ContractionReport(value, False, "not guaranteed", L)


def estimate_lipschitz(system: FractionalSystem, nodes: np.ndarray, T: float) -> float:
    """Largest finite-difference partial slope |df_i/dy_k| over the trajectory box.

    The box is sampled on a 5-point-per-axis lattice; above 5 states a fixed
    seeded subset of LATTICE_CAP lattice points is used instead.
    """
    n = system.n
    lo, hi = nodes.min(axis=0), nodes.max(axis=0)
    axes = [np.linspace(a, b, LATTICE_POINTS) for a, b in zip(lo, hi)]
    total = LATTICE_POINTS**n
    if total <= LATTICE_CAP:
        idx = np.indices((LATTICE_POINTS,) * n).reshape(n, -1).T
    else:
        rng = np.random.default_rng(0)
        idx = rng.integers(0, LATTICE_POINTS, size=(LATTICE_CAP, n))
    scale = np.maximum(np.maximum(1.0, hi - lo), np.maximum(abs(lo), abs(hi)))
    steps = 1e-6 * scale
    L = 0.0
    for p, row in enumerate(idx):
        y = np.array([axes[k][row[k]] for k in range(n)])
        t = T * (p % LATTICE_POINTS) / (LATTICE_POINTS - 1)
        f0 = system.evaluate(t, y)
        for k in range(n):
            yk = y.copy()
            yk[k] += steps[k]
            slope = np.abs(system.evaluate(t, yk) - f0).max() / steps[k]
            L = max(L, slope)
    return L


class _Kernels:
    """Per-state first rows of the generalized matrices, shaped (m, n)."""

    def __init__(self, orders: np.ndarray, grid: Grid):
        m, n = grid.m, orders.size
        self.Pss = np.empty((m, n))
        self.Pst = np.empty((m, n))
        self.Pts = np.empty((m, n))
        self.Ptt = np.empty((m, n))
        self.mats: dict[float, OpMatrixSet] = {}
        for a in np.unique(orders):
            mats = build_generalized(a, grid)
            self.mats[float(a)] = mats
            cols = orders == a
            self.Pss[:, cols] = mats.Pss.first_row[:, None]
            self.Pst[:, cols] = mats.Pst.first_row[:, None]
            self.Pts[:, cols] = mats.Pts.first_row[:, None]
            self.Ptt[:, cols] = mats.Ptt.first_row[:, None]


def _history(E: np.ndarray, j: int, A: np.ndarray, B: np.ndarray, offset: int) -> np.ndarray:
    """sum_{k<=j-2} E_k A[j-k-offset] + (E_{k+1}-E_k) B[j-k-offset]."""
    if j < 2:
        return np.zeros(E.shape[1])
    d = j - np.arange(j - 1) - offset
    dE = E[1:j] - E[: j - 1]
    return np.einsum("kn,kn->n", E[: j - 1], A[d]) + np.einsum("kn,kn->n", dE, B[d])


def _march(system, grid, kern, shift, cfg):
    m, n = grid.m, system.n
    t = grid.nodes
    Z = np.zeros((m + 1, n))
    E = np.zeros((m + 1, n))
    E[0] = system.evaluate(0.0, shift[0])
    iters = np.zeros(m + 1, dtype=int)
    worst = 0.0
    # node m is read from the TF-coefficient equation, whose kernels are the
    # column sums Pss+Pst and Pts+Ptt taken one index earlier
    A_tail = kern.Pss + kern.Pst
    B_tail = kern.Pts + kern.Ptt
    for j in range(1, m + 1):
        if j < m:
            A, B, off = kern.Pss, kern.Pts, 0
        else:
            A, B, off = A_tail, B_tail, 1
        a0, b0 = A[1 - off], B[1 - off]
        hist = _history(E, j, A, B, off) + a0 * E[j - 1] - b0 * E[j - 1]
        tj, pj = t[j], shift[j]

        def residual(z):
            e = system.evaluate(tj, z + pj)
            return z - hist - b0 * e, e

        z = hist + b0 * E[j - 1]
        z, e, k, res = _newton(residual, z, pj, b0, cfg, system, tj, j)
        Z[j], E[j] = z, e
        iters[j] = k
        worst = max(worst, res)
    return Z, E, iters, worst


def _scaled_norm(r, y):
    return float(np.max(np.abs(r) / np.maximum(1.0, np.abs(y))))


def _newton(residual, z, shift_j, b0, cfg, system, tj, j):
    r, e = residual(z)
    res = _scaled_norm(r, z + shift_j)
    n = z.size
    for k in range(cfg.max_newton_iters + 1):
        if res <= cfg.newton_tol:
            return z, e, k, res
        if k == cfg.max_newton_iters:
            break
        y = z + shift_j
        steps = cfg.jacobian_step * np.maximum(1.0, np.abs(y))
        jac = np.eye(n)
        for c in range(n):
            yc = y.copy()
            yc[c] += steps[c]
            jac[:, c] -= b0 * (system.evaluate(tj, yc) - e) / steps[c]
        try:
            dz = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"singular Newton matrix at node {j}", j, res) from exc
        lam = 1.0
        for _ in range(11):
            z_new = z + lam * dz
            try:
                r_new, e_new = residual(z_new)
            except ModelError:
                r_new = None
            if r_new is not None:
                res_new = _scaled_norm(r_new, z_new + shift_j)
                if res_new < res:
                    break
            lam /= 2
        else:
            raise SolverError(
                f"Newton stalled at node {j} (t={tj:.6g}) with residual {res:.3e}", j, res
            )
        z, r, e, res = z_new, r_new, e_new, res_new
    raise SolverError(
        f"Newton did not converge at node {j} (t={tj:.6g}); residual {res:.3e}", j, res
    )


def _global_fixed_point(system, grid, kern, shift, cfg):
    """Iterate the full coefficient system Z <- J^alpha f(Z) over all nodes at once."""
    m, n = grid.m, system.n
    t = grid.nodes
    Z = np.zeros((m + 1, n))
    res = np.inf
    for it in range(1, cfg.max_global_iters + 1):
        E = np.array([system.evaluate(t[j], Z[j] + shift[j]) for j in range(m + 1)])
        Z_new = np.empty_like(Z)
        for i in range(n):
            mats = kern.mats[float(system.orders[i])]
            Z_new[:, i] = frac_integrate(sample_to_hf(E[:, i], grid), mats).node_values
        res = _scaled_norm(Z_new - Z, Z_new + shift)
        Z = Z_new
        if not np.all(np.isfinite(Z)):
            raise SolverError(f"fixed-point iteration diverged at sweep {it}", None, res)
        if res <= cfg.newton_tol:
            E = np.array([system.evaluate(t[j], Z[j] + shift[j]) for j in range(m + 1)])
            return Z, E, it, res
    raise SolverError(
        f"fixed-point iteration did not converge in {cfg.max_global_iters} sweeps "
        f"(residual {res:.3e})",
        None,
        res,
    )


def solve_hf(system: FractionalSystem, config: SolveConfig) -> SolveResult:
    grid = config.grid_for(system.T)
    t = grid.nodes
    polys = initial_shift(system)
    shift = np.column_stack([p(t) for p in polys])
    kern = _Kernels(system.orders, grid)

    if config.mode == "marching":
        Z, E, iters, worst = _march(system, grid, kern, shift, config)
        sweeps = None
    else:
        Z, E, sweeps, worst = _global_fixed_point(system, grid, kern, shift, config)
        iters = np.zeros(grid.m + 1, dtype=int)

    nodes = Z + shift
    # node 0 is pinned to the initial data bit for bit
    nodes[0] = system.y_initial
    if not np.all(np.isfinite(nodes)):
        raise SolverError("non-finite node values in solution")

    contraction = _contraction_report(system, nodes, config)
    diag = SolveDiagnostics(config.mode, iters, worst, contraction, sweeps)
    return SolveResult(
        grid,
        nodes,
        [sample_to_hf(nodes[:, i], grid) for i in range(system.n)],
        [sample_to_hf(Z[:, i], grid) for i in range(system.n)],
        diag,
        list(system.state_names),
    )


def _contraction_report(system, nodes, config) -> ContractionReport | None:
    orders = np.unique(system.orders)
    if orders.size > 1:
        return ContractionReport(None, False, "theorem not applicable (mixed orders)")
    if config.lipschitz is not None:
        L, source = config.lipschitz, "supplied"
    elif config.estimate_lipschitz:
        L, source = estimate_lipschitz(system, nodes, system.T), "heuristic"
    else:
        return None
    rep = contraction_bound(system.n, L, float(orders[0]), system.T)
    return ContractionReport(rep.value, rep.guaranteed, rep.status, L, source)


@dataclass
class ConvergenceStudy:
    h: np.ndarray
    errors: np.ndarray  # (len(h), n) max-over-nodes absolute errors
    orders: np.ndarray  # per state, nan when undefined
    exact: bool

    def rows(self):
        for h, e in zip(self.h, self.errors):
            yield float(h), e


def convergence_study(
    system: FractionalSystem,
    exact_solution: Callable[[np.ndarray], np.ndarray],
    h_list: Sequence[float],
    config: SolveConfig | None = None,
) -> ConvergenceStudy:
    """Solve at each step size and fit the observed order between neighbours.

    ``exact_solution(t)`` must return an array of shape (len(t), n).
    The order between consecutive steps h1 > h2 is log(e1/e2)/log(h1/h2),
    which is log2 of the error ratio under halving.
    """
    base = config or SolveConfig(h=h_list[0])
    hs = np.asarray(h_list, dtype=float)
    errs = []
    for h in hs:
        cfg = SolveConfig(
            h=float(h),
            newton_tol=base.newton_tol,
            max_newton_iters=base.max_newton_iters,
            jacobian_step=base.jacobian_step,
            mode=base.mode,
            estimate_lipschitz=False,
        )
        res = solve_hf(system, cfg)
        ref = np.asarray(exact_solution(res.t), dtype=float).reshape(res.nodes.shape)
        errs.append(np.abs(res.nodes - ref).max(axis=0))
    errs = np.array(errs)
    if np.all(errs == 0):
        return ConvergenceStudy(hs, errs, np.full(system.n, np.nan), True)
    with np.errstate(divide="ignore", invalid="ignore"):
        pair = np.log(errs[:-1] / errs[1:]) / np.log(hs[:-1] / hs[1:])[:, None]
    orders = np.nanmean(np.where(np.isfinite(pair), pair, np.nan), axis=0) if len(hs) > 1 else np.full(system.n, np.nan)
    return ConvergenceStudy(hs, errs, orders, False)
