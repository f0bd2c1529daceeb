"""The six benchmark systems with their default parameters.

Each entry carries a native RHS and the same RHS as expression strings;
the two backends are cross-checked in the test suite.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .expr import compile_rhs
from .solver import FractionalSystem, n_initial_conditions

DENOMINATOR_FLOOR = 1e-12


def _population(total: float, name: str) -> float:
    if abs(total) < DENOMINATOR_FLOOR:
        raise ZeroDivisionError(f"{name} collapsed to {total!r}; check the parameter set")
    return total


@dataclass(frozen=True)
class ModelEntry:
    name: str
    states: tuple[str, ...]
    default_orders: tuple[float, ...]
    defaults: Mapping[str, float]
    # per state: names of the parameters holding y(0), y'(0), ...
    init_keys: tuple[tuple[str, ...], ...]
    native: Callable[[Mapping[str, float]], Callable]
    expressions: tuple[str, ...]
    doc: str
    order_names: tuple[str, ...] = field(default=())

    @property
    def n(self) -> int:
        return len(self.states)


# --- Example 6.1 ---------------------------------------------------------


def _ex61(p):
    def rhs(t, y):
        y1, y2 = y
        return np.array([y1 + y2**2, y1 + 5 * y2])

    return rhs


# --- Example 6.2 ---------------------------------------------------------


def _ex62(p):
    def rhs(t, y):
        x, yy = y
        return np.array([x + yy, -x + yy])

    return rhs


# --- Example 6.3 ---------------------------------------------------------


def _ex63(p):
    def rhs(t, y):
        x, yy, z = y
        return np.array([2 * yy**2, t * x, yy * z])

    return rhs


# --- smoking -------------------------------------------------------------


def _smoking(p):
    rho1, rho2, eps, sigma = p["rho1"], p["rho2"], p["epsilon"], p["sigma"]
    pp, f, beta, pi, mu = p["p"], p["f"], p["beta"], p["pi"], p["mu"]
    delta, eta, gamma = p["delta"], p["eta"], p["gamma"]

    def rhs(t, y):
        Sp, Sa, Ls, Cs, Q = y
        N = _population(Sp + Sa + Ls + Cs + Q, "N(t)")
        lam = beta * (Ls + eta * Cs) / N
        return np.array(
            [
                (1 - pp) * pi - (eps + lam + mu) * Sp,
                pp * pi + eps * Sp - (1 - f) * lam * Sa - mu * Sa,
                lam * Sp + (1 - f) * lam * Sa + sigma * Cs - (mu + rho1 + gamma) * Ls,
                gamma * Ls - (sigma + rho2 + delta + mu) * Cs,
                rho1 * Ls + rho2 * Cs - mu * Q,
            ]
        )

    return rhs


_LAMBDA = "(beta*(Ls + eta*Cs)/(Sp + Sa + Ls + Cs + Q))"
_SMOKING_EXPR = (
    f"(1 - p)*pi - (epsilon + {_LAMBDA} + mu)*Sp",
    f"p*pi + epsilon*Sp - (1 - f)*{_LAMBDA}*Sa - mu*Sa",
    f"{_LAMBDA}*Sp + (1 - f)*{_LAMBDA}*Sa + sigma*Cs - (mu + rho1 + gamma)*Ls",
    "gamma*Ls - (sigma + rho2 + delta + mu)*Cs",
    "rho1*Ls + rho2*Cs - mu*Q",
)


# --- lung cancer ---------------------------------------------------------


def _lung(p):
    Lam, mu, beta, pn, ps = p["Lambda"], p["mu"], p["beta"], p["p_n"], p["p_s"]
    g1, g2, p1, p2, s1 = p["gamma1"], p["gamma2"], p["p1"], p["p2"], p["sigma1"]
    dq, d1, d2, d, q, be = p["delta_q"], p["delta1"], p["delta2"], p["d"], p["q"], p["beta_e"]

    def rhs(t, y):
        N, I1, I2, Q, S, L, E = y
        T = _population(N + I1 + I2 + Q + S + L + E, "T(t)")
        I = I1 + I2
        return np.array(
            [
                (1 - q) * Lam - beta * N * I / T - mu * N,
                ((1 - pn) * beta * N + (1 - ps) * beta * S) * I / T
                - (s1 + g1 + d1 + mu) * I1,
                g1 * I1 - (g2 + d2 + mu) * I2,
                p2 * g2 * I2 + p1 * s1 * I1 - (dq + mu) * Q,
                (1 - p1) * s1 * I1 + (1 - p2) * g2 * I2 - beta * S * I / T - mu * S,
                (pn * beta * N + ps * beta * S + be * E) * I / T
                + d1 * I1 + d2 * I2 + dq * Q - (mu + d) * L,
                q * Lam - be * E * I / T - mu * E,
            ]
        )

    return rhs


_T = "(N + I1 + I2 + Q + S + L + E)"
_I = "(I1 + I2)"
_LUNG_EXPR = (
    f"(1 - q)*Lambda - beta*N*{_I}/{_T} - mu*N",
    f"((1 - p_n)*beta*N + (1 - p_s)*beta*S)*{_I}/{_T} - (sigma1 + gamma1 + delta1 + mu)*I1",
    "gamma1*I1 - (gamma2 + delta2 + mu)*I2",
    "p2*gamma2*I2 + p1*sigma1*I1 - (delta_q + mu)*Q",
    f"(1 - p1)*sigma1*I1 + (1 - p2)*gamma2*I2 - beta*S*{_I}/{_T} - mu*S",
    f"(p_n*beta*N + p_s*beta*S + beta_e*E)*{_I}/{_T} + delta1*I1 + delta2*I2 + delta_q*Q - (mu + d)*L",
    f"q*Lambda - beta_e*E*{_I}/{_T} - mu*E",
)


# --- hepatitis B ---------------------------------------------------------


def _hepb(p):
    b, mu, c, pp, eta, phi = p["b"], p["mu"], p["c"], p["p"], p["eta"], p["phi"]
    sS, sA, sC = p["sigma_s"], p["sigma_A"], p["sigma_C"]
    vU, vF, gC, dA, dC = p["varphi_U"], p["varphi_F"], p["gamma_C"], p["delta_A"], p["delta_C"]
    er, w, eC = p["eps_rho"], p["w"], p["eps_C"]
    tb, tC, tU, tF, theta = p["tau_b"], p["tau_C"], p["tau_U"], p["tau_F"], p["theta"]

    def rhs(t, y):
        SU, SF, V, AU, AF, CU, CF, R = y
        N = _population(SU + SF + V + AU + AF + CU + CF + R, "N(t)")
        birth_inf = b * theta * (AF + phi * CF) * (1 - er * tb)
        force = pp * c * (AF + eta * CF) * (1 - eC * tC) / N * SF
        return np.array(
            [
                b * N * (1 - er * tb) - birth_inf - (sS + er * tU + mu) * SU,
                sS * SU + w * V - force - (er * tF + mu) * SF,
                b * N * er * tb + er * tU * SU + er * tF * SF - (w + mu) * V,
                birth_inf - (sA + mu + dA) * AU,
                force - (sA + mu + dA) * AF,
                sA * vU * AU - (sC + mu) * CU,
                sA * vF * AF + sC * CU - (gC + mu + dC) * CF,
                sA * (1 - vU) * AU + sA * (1 - vF) * AF + gC * CF - mu * R,
            ]
        )

    return rhs


_N8 = "(SU + SF + V + AU + AF + CU + CF + R)"
_BIRTH_INF = "b*theta*(AF + phi*CF)*(1 - eps_rho*tau_b)"
_FORCE = f"p*c*(AF + eta*CF)*(1 - eps_C*tau_C)/{_N8}*SF"
_HEPB_EXPR = (
    f"b*{_N8}*(1 - eps_rho*tau_b) - {_BIRTH_INF} - (sigma_s + eps_rho*tau_U + mu)*SU",
    f"sigma_s*SU + w*V - {_FORCE} - (eps_rho*tau_F + mu)*SF",
    f"b*{_N8}*eps_rho*tau_b + eps_rho*tau_U*SU + eps_rho*tau_F*SF - (w + mu)*V",
    f"{_BIRTH_INF} - (sigma_A + mu + delta_A)*AU",
    f"{_FORCE} - (sigma_A + mu + delta_A)*AF",
    "sigma_A*varphi_U*AU - (sigma_C + mu)*CU",
    "sigma_A*varphi_F*AF + sigma_C*CU - (gamma_C + mu + delta_C)*CF",
    "sigma_A*(1 - varphi_U)*AU + sigma_A*(1 - varphi_F)*AF + gamma_C*CF - mu*R",
)


def _init_keys(states, counts):
    return tuple(
        tuple(f"{s}0" if k == 0 else f"{s}0_d{k}" for k in range(c))
        for s, c in zip(states, counts)
    )


def _entry(name, states, orders, params, inits, native, exprs, doc, order_names=()):
    counts = [len(v) for v in inits]
    keys = _init_keys(states, counts)
    defaults = dict(params)
    for ks, vals in zip(keys, inits):
        defaults.update(zip(ks, vals))
    return ModelEntry(
        name, tuple(states), tuple(orders), defaults, keys, native, tuple(exprs), doc,
        tuple(order_names),
    )


_REGISTRY = {
    e.name: e
    for e in [
        _entry(
            "example-6.1",
            ("y1", "y2"),
            (1.3, 2.4),
            {},
            [(0.0, 1.0), (0.0, 1.0, 1.0)],
            _ex61,
            ("y1 + y2^2", "y1 + 5*y2"),
            "D^a y1 = y1 + y2^2, D^b y2 = y1 + 5 y2; y1(0)=0, y1'(0)=1, "
            "y2(0)=0, y2'(0)=1, y2''(0)=1. No closed form.",
            ("alpha", "beta"),
        ),
        _entry(
            "example-6.2",
            ("x", "y"),
            (1.0, 1.0),
            {},
            [(0.0,), (1.0,)],
            _ex62,
            ("x + y", "-x + y"),
            "D^a x = x + y, D^b y = -x + y; x(0)=0, y(0)=1. "
            "Exact at a=b=1: x = e^t sin t, y = e^t cos t.",
            ("alpha", "beta"),
        ),
        _entry(
            "example-6.3",
            ("x", "y", "z"),
            (1.0, 1.0, 1.0),
            {},
            [(0.0,), (1.0,), (1.0,)],
            _ex63,
            ("2*y^2", "t*x", "y*z"),
            "D^a x = 2 y^2, D^b y = t x, D^g z = y z; x(0)=0, y(0)=1, z(0)=1.",
            ("alpha", "beta", "gamma"),
        ),
        _entry(
            "smoking",
            ("Sp", "Sa", "Ls", "Cs", "Q"),
            (1.0,) * 5,
            dict(rho1=0.5, rho2=0.25, epsilon=0.001, sigma=0.0307, p=0.8, f=1.0,
                 beta=2.0, pi=14.0, mu=0.031, delta=0.01, eta=0.0002, gamma=0.6),
            [(8000.0,), (1970.0,), (20.0,), (10.0,), (0.0,)],
            _smoking,
            _SMOKING_EXPR,
            "Smoking with pro/anti-smoking campaigns (Muhaya 2013); "
            "lambda = beta (Ls + eta Cs) / N, N the five-state total.",
        ),
        _entry(
            "lung-cancer",
            ("N", "I1", "I2", "Q", "S", "L", "E"),
            (1.0,) * 7,
            dict(Lambda=14.0, mu=0.014, beta=2.0, p_n=1e-4, gamma1=0.6, gamma2=0.25,
                 p1=0.025, p2=0.025, sigma1=0.5, p_s=1e-3, delta_q=0.005, delta2=0.03,
                 d=0.016, q=0.25, beta_e=1e-4, delta1=0.01),
            [(500.0,), (200.0,), (200.0,), (200.0,), (200.0,), (200.0,), (200.0,)],
            _lung,
            _LUNG_EXPR,
            "Lung cancer with second-hand smoke and education "
            "(Acevedo-Estefania et al. 2000); T(t) is the seven-state total.",
        ),
        _entry(
            "hepatitis-b",
            ("SU", "SF", "V", "AU", "AF", "CU", "CF", "R"),
            (1.0,) * 8,
            dict(b=0.036, mu=0.021, c=20.0, p=0.079, eta=0.667, phi=0.159,
                 sigma_s=0.067, sigma_A=2.667, sigma_C=0.068, varphi_U=0.885,
                 varphi_F=0.1, gamma_C=0.015, delta_A=0.007, delta_C=0.001,
                 eps_rho=0.9, w=0.04, eps_C=0.8, tau_b=0.66, tau_C=0.2,
                 tau_U=0.001, tau_F=0.001, theta=0.724),
            [(23148265.0,), (51967535.0,), (16528817.0,), (3012259.0,),
             (5280601.0,), (5394338.0,), (6315313.0,), (40570172.0,)],
            _hepb,
            _HEPB_EXPR,
            "Hepatitis B transmission (Abdulrahman et al. 2013); N(t) is the "
            "eight-state total.",
        ),
    ]
}


def list_models() -> list[str]:
    return list(_REGISTRY)


def model_entry(name: str) -> ModelEntry:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown model {name!r}; known: {', '.join(_REGISTRY)}") from None


def resolve_params(entry: ModelEntry, overrides: Mapping[str, float] | None) -> dict:
    params = dict(entry.defaults)
    for k, v in (overrides or {}).items():
        if k not in params:
            raise KeyError(f"model {entry.name!r} has no parameter {k!r}")
        params[k] = float(v)
    return params


def get_model(
    name: str,
    overrides: Mapping[str, float] | None = None,
    orders: Sequence[float] | float | None = None,
    T: float = 1.0,
    backend: str = "native",
) -> FractionalSystem:
    """Build a ready-to-solve system.

    ``orders`` may be one number (shared by every state) or one per state.
    Initial data are truncated to ceil(order) entries; asking for an order
    that needs more derivative data than the model supplies is an error.
    """
    entry = model_entry(name)
    params = resolve_params(entry, overrides)
    if orders is None:
        orders = entry.default_orders
    elif np.isscalar(orders):
        orders = (float(orders),) * entry.n
    orders = tuple(float(a) for a in orders)
    if len(orders) != entry.n:
        raise ValueError(f"{name} has {entry.n} states, got {len(orders)} orders")

    init = []
    for state, keys, a in zip(entry.states, entry.init_keys, orders):
        need = n_initial_conditions(a)
        if need > len(keys):
            raise ValueError(
                f"order {a} for state {state} needs {need} initial values; "
                f"{name} only defines {len(keys)}"
            )
        init.append([params[k] for k in keys[:need]])

    rhs_params = {k: v for k, v in params.items() if not _is_init_key(entry, k)}
    if backend == "native":
        rhs = entry.native(rhs_params)
    elif backend == "expr":
        rhs = compile_rhs(entry.expressions, entry.states, rhs_params)
    else:
        raise ValueError(f"backend must be 'native' or 'expr', got {backend!r}")
    return FractionalSystem(orders, init, rhs, T=T, name=name, state_names=entry.states)


def _is_init_key(entry: ModelEntry, key: str) -> bool:
    return any(key in ks for ks in entry.init_keys)
