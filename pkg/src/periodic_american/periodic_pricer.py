"""Optimal periodic exercise barriers and value functions.

Four cases are covered: put/call payoffs under spectrally negative (SN)
and spectrally positive (SP) models.  SP models are priced through their
dual (sign-flipped) SN representation, so every formula below runs on an
SN exponent.  The barrier first-order conditions are affine in the
exponentiated barrier, so the optimal barriers are computed in closed
form; the residual of the defining equation is reported as a self-check.

Numerical note: the crossing transforms combine the two second scale
functions so that the exponentially growing root cancels analytically.
The implementation performs that cancellation per root of psi = q, which
keeps the formulas stable for large exercise rates where Phi(r + lambda)
is large.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .levy_model import (
    JumpSide,
    LevyModel,
    ParameterError,
    check_call_assumption,
    psi,
    psi_prime,
)
from .scale_functions import LIMIT_TOL, ScaleBasis, W_bar, Z, build_scale_basis, int_exp_W

__all__ = [
    "OptionKind",
    "OptionSpec",
    "BarrierSolution",
    "ValueCurve",
    "AssumptionError",
    "ConsistencyError",
    "down_crossing_transform",
    "up_crossing_transform",
    "f_equation",
    "g_equation",
    "solve_barrier",
    "value",
    "value_curve",
    "value_at_optimum",
    "classical_barrier",
    "classical_value",
    "classical_curve",
    "default_grid",
    "figure_grid",
]

# Agreement required between the simplified optimal-value forms and the
# general barrier-value formula.
CROSS_CHECK_RTOL = 1e-9


class AssumptionError(ParameterError):
    """The call-option integrability condition log E[S_1] < r fails."""


class ConsistencyError(RuntimeError):
    """Two algebraically identical code paths disagree; transcription bug."""


class OptionKind(str, Enum):
    PUT = "put"
    CALL = "call"


@dataclass(frozen=True)
class OptionSpec:
    kind: OptionKind
    strike: float
    r: float
    lam: float

    def __post_init__(self):
        if self.strike <= 0 or self.r <= 0 or self.lam <= 0:
            raise ParameterError(
                f"strike, r, lambda must be positive, got {self.strike}, {self.r}, {self.lam}"
            )

    def payoff(self, s):
        if self.kind is OptionKind.PUT:
            return np.maximum(self.strike - s, 0.0)
        return np.maximum(s - self.strike, 0.0)


@dataclass(frozen=True)
class BarrierSolution:
    case: str
    log_barrier: float
    barrier: float
    residual: float
    iterations: int = 0


@dataclass(frozen=True)
class ValueCurve:
    s: np.ndarray
    values: np.ndarray
    payoffs: np.ndarray
    case: str
    log_barrier: float
    lam: float

    def csv_rows(self):
        b = math.exp(self.log_barrier) if math.isfinite(self.log_barrier) else self.log_barrier
        for s, v, g in zip(self.s, self.values, self.payoffs):
            yield (s, v, g, b, self.case, self.lam)


def _require_call_assumption(model: LevyModel, r: float) -> None:
    if not check_call_assumption(model, r):
        raise AssumptionError(f"call requires log E[S_1] < r = {r}")


def _case_tag(model: LevyModel, option: OptionSpec) -> str:
    side = "sn" if model.side is JumpSide.SPECTRALLY_NEGATIVE else "sp"
    return f"{option.kind.value}_{side}"


def _bases(sn: LevyModel, r: float, lam: float):
    return build_scale_basis(sn, r), build_scale_basis(sn, r + lam)


def _ratio_psi(sn: LevyModel, theta: float, r: float, phi_r: float) -> float:
    """(psi(theta) - r) / (theta - Phi(r)), with the theta = Phi(r) limit psi'."""
    if abs(theta - phi_r) < LIMIT_TOL:
        return psi_prime(sn, theta)
    return (psi(sn, theta) - r) / (theta - phi_r)


def down_crossing_transform(
    sn: LevyModel, r: float, lam: float, x: float, a: float, theta: float
) -> float:
    """E_x[e^{-r tau + theta X_tau}; tau < inf] for the first exercise epoch
    tau at which X is at or below the level a (spectrally negative X).

    The limiting cases psi(theta) = r and psi(theta) = r + lambda are
    evaluated as limits (the latter by a symmetric two-sided evaluation in
    theta, accurate to O(h^2) with h = 1e-5).
    """
    psit = psi(sn, theta)
    if abs(psit - (r + lam)) < LIMIT_TOL * max(1.0, r + lam):
        h = 1e-5
        return 0.5 * (
            down_crossing_transform(sn, r, lam, x, a, theta - h)
            + down_crossing_transform(sn, r, lam, x, a, theta + h)
        )
    basis_r, basis_rl = _bases(sn, r, lam)
    phi_r, phi_rl = basis_r.phi_q, basis_rl.phi_q
    ratio = _ratio_psi(sn, theta, r, phi_r)
    pre = lam * math.exp(theta * a) / (lam + r - psit)
    y = x - a
    if y <= 0:
        bracket = math.exp(theta * y) - math.exp(phi_rl * y) * ratio * (phi_rl - phi_r) / lam
        return pre * bracket
    # Combine Z(y, theta) and Z(y, Phi(r+lambda)) per root; the coefficient
    # of e^{Phi(r) y} vanishes identically and is zero in floating point too.
    total = 0.0
    for z, w in zip(basis_r.roots, basis_r.weights):
        if abs(theta - z) < LIMIT_TOL:
            a_i = psi_prime(sn, theta)
        else:
            a_i = (psit - r) / (theta - z)
        c_i = a_i - ratio * (phi_rl - phi_r) / (phi_rl - z)
        if c_i == 0.0:
            # the e^{Phi(r) y} coefficient cancels identically; skip so the
            # bare exponential cannot overflow for large exercise rates
            continue
        total += w * math.exp(z * y) * c_i
    return pre * total


def up_crossing_transform(
    sn: LevyModel, r: float, lam: float, x: float, b: float, theta: float
) -> float:
    """E_x[e^{-r tau - theta (X_tau - b)}; tau < inf] for the first exercise
    epoch tau at which X is at or above the level b (spectrally negative X)."""
    basis_r, basis_rl = _bases(sn, r, lam)
    phi_r, phi_rl = basis_r.phi_q, basis_rl.phi_q
    if abs(theta + phi_rl) < LIMIT_TOL:
        raise ParameterError(f"up-crossing transform has a pole at theta = {-phi_rl}")
    front = (phi_rl - phi_r) / (phi_rl + theta)
    y = x - b
    if y <= 0:
        return front * math.exp(phi_r * y)
    total = 0.0
    for z, w in zip(basis_rl.roots, basis_rl.weights):
        if abs(z + theta) < LIMIT_TOL:
            # removable point of the convolution integral
            total += w * math.exp(z * y) * (front / (z - phi_r) - y)
        else:
            total += (
                w * math.exp(z * y) * (front - (z - phi_r) / (z + theta)) / (z - phi_r)
                + w * math.exp(-theta * y) / (z + theta)
            )
    return lam * total


def _f_coefficients(sn: LevyModel, r: float, lam: float, K: float, theta: float):
    """C0 and C1(theta) of the put-type first-order condition."""
    basis_r, basis_rl = _bases(sn, r, lam)
    phi_r, phi_rl = basis_r.phi_q, basis_rl.phi_q
    c0 = K / (lam + r) * phi_rl * r * (phi_rl - phi_r) / phi_r
    psit = psi(sn, theta)
    if abs(psit - (r + lam)) < LIMIT_TOL * max(1.0, r + lam):
        lead = 1.0 / psi_prime(sn, theta)
    else:
        lead = (phi_rl - theta) / (lam + r - psit)
    c1 = lead * _ratio_psi(sn, theta, r, phi_r) * (phi_rl - phi_r)
    return c0, c1


def f_equation(sn: LevyModel, r: float, lam: float, K: float, a: float, theta: float):
    """f(a; theta) = C0 - C1(theta) e^a; returns (f, C0, C1)."""
    c0, c1 = _f_coefficients(sn, r, lam, K, theta)
    return c0 - c1 * math.exp(a), c0, c1


def g_equation(sn: LevyModel, r: float, lam: float, K: float, b: float, theta: float) -> float:
    """Call-type first-order condition (and SP-put analogue)."""
    basis_r, basis_rl = _bases(sn, r, lam)
    phi_r, phi_rl = basis_r.phi_q, basis_rl.phi_q
    if abs(theta + phi_rl) < LIMIT_TOL:
        raise ParameterError(f"g has a pole at theta = {-phi_rl}")
    return (
        K * phi_r * (phi_rl - phi_r) / phi_rl
        - (phi_r + theta) * (phi_rl - phi_r) / (phi_rl + theta) * math.exp(b)
    )


def _g_root(sn: LevyModel, r: float, lam: float, K: float, theta: float) -> float:
    basis_r, basis_rl = _bases(sn, r, lam)
    phi_r, phi_rl = basis_r.phi_q, basis_rl.phi_q
    return math.log(K * phi_r * (phi_rl + theta) / (phi_rl * (phi_r + theta)))


def _g_scale(sn: LevyModel, r: float, lam: float, K: float) -> float:
    basis_r, basis_rl = _bases(sn, r, lam)
    return K * basis_r.phi_q * (basis_rl.phi_q - basis_r.phi_q) / basis_rl.phi_q


def solve_barrier(model: LevyModel, option: OptionSpec) -> BarrierSolution:
    """Optimal periodic barrier for each of the four put/call x SN/SP cases.

    The first-order conditions are affine in the exponentiated barrier, so
    the roots are taken in closed form; the reported residual is the
    normalized value of the defining equation at the root.
    """
    sn = model.sn_view()
    K, r, lam = option.strike, option.r, option.lam
    case = _case_tag(model, option)
    log_k = math.log(K)

    if case == "put_sn":
        _, c0, c1 = f_equation(sn, r, lam, K, 0.0, 1.0)
        if c1 <= 0:
            raise ParameterError("C1(1) must be positive; degenerate model")
        a = math.log(c0 / c1)
        residual = abs(f_equation(sn, r, lam, K, a, 1.0)[0]) / c0
        log_barrier = a
    elif case == "call_sn":
        _require_call_assumption(model, r)
        b = _g_root(sn, r, lam, K, -1.0)
        residual = abs(g_equation(sn, r, lam, K, b, -1.0)) / _g_scale(sn, r, lam, K)
        log_barrier = b
    elif case == "put_sp":
        a = _g_root(sn, r, lam, K, 1.0)
        residual = abs(g_equation(sn, r, lam, K, a, 1.0)) / _g_scale(sn, r, lam, K)
        log_barrier = a
    else:  # call_sp
        _require_call_assumption(model, r)
        _, c0, c1 = f_equation(sn, r, lam, K, 0.0, -1.0)
        if c1 <= 0:
            raise ParameterError("C1(-1) must be positive; assumption violated")
        b = math.log(c0 / c1)
        residual = abs(f_equation(sn, r, lam, K, b, -1.0)[0]) / c0
        log_barrier = b

    if not math.isfinite(log_barrier):
        raise ParameterError(f"non-finite barrier for case {case}")
    if option.kind is OptionKind.PUT and log_barrier >= log_k:
        raise ConsistencyError(f"put barrier {math.exp(log_barrier)} not below strike {K}")
    if option.kind is OptionKind.CALL and log_barrier <= log_k:
        raise ConsistencyError(f"call barrier {math.exp(log_barrier)} not above strike {K}")
    return BarrierSolution(case, log_barrier, math.exp(log_barrier), residual)


def value(model: LevyModel, option: OptionSpec, log_barrier: float, x: float) -> float:
    """Expected discounted payoff of the periodic barrier strategy with the
    given (not necessarily optimal) log-barrier, started from log-price x."""
    K, r, lam = option.strike, option.r, option.lam
    log_k = math.log(K)
    if option.kind is OptionKind.PUT and log_barrier > log_k + 1e-12:
        raise ParameterError("put barrier must not exceed the strike")
    if option.kind is OptionKind.CALL and log_barrier < log_k - 1e-12:
        raise ParameterError("call barrier must not be below the strike")

    sn = model.sn_view()
    if model.side is JumpSide.SPECTRALLY_NEGATIVE:
        if option.kind is OptionKind.PUT:
            a = log_barrier
            return K * down_crossing_transform(sn, r, lam, x, a, 0.0) - down_crossing_transform(
                sn, r, lam, x, a, 1.0
            )
        _require_call_assumption(model, r)
        b = log_barrier
        return math.exp(b) * up_crossing_transform(sn, r, lam, x, b, -1.0) - K * up_crossing_transform(
            sn, r, lam, x, b, 0.0
        )
    # spectrally positive: price on the dual
    if option.kind is OptionKind.PUT:
        a = log_barrier
        return K * up_crossing_transform(sn, r, lam, -x, -a, 0.0) - math.exp(
            a
        ) * up_crossing_transform(sn, r, lam, -x, -a, 1.0)
    _require_call_assumption(model, r)
    b = log_barrier
    return down_crossing_transform(sn, r, lam, -x, -b, -1.0) - K * down_crossing_transform(
        sn, r, lam, -x, -b, 0.0
    )


def default_grid(strike: float, points: int = 200) -> np.ndarray:
    return np.geomspace(strike / 10.0, 10.0 * strike, points)


def figure_grid(strike: float, points: int = 250) -> np.ndarray:
    """Linear spot grid matching the paper-style plots."""
    return np.linspace(strike / 100.0, 2.5 * strike, points)


def value_curve(
    model: LevyModel, option: OptionSpec, log_barrier: float, grid=None
) -> ValueCurve:
    grid = default_grid(option.strike) if grid is None else np.asarray(grid, dtype=float)
    vals = np.array([value(model, option, log_barrier, math.log(s)) for s in grid])
    return ValueCurve(
        s=grid,
        values=vals,
        payoffs=option.payoff(grid),
        case=_case_tag(model, option),
        log_barrier=log_barrier,
        lam=option.lam,
    )


def _optimal_value_simplified(
    model: LevyModel, option: OptionSpec, log_barrier: float, x: float
) -> float:
    """The four simplified optimal-value displays (root condition applied)."""
    sn = model.sn_view()
    K, r, lam = option.strike, option.r, option.lam
    basis_r, basis_rl = _bases(sn, r, lam)
    phi_r, phi_rl = basis_r.phi_q, basis_rl.phi_q
    case = _case_tag(model, option)

    if case == "put_sn":
        a = log_barrier
        y = x - a
        psi1 = psi(sn, 1.0)
        return (
            lam * K / (lam + r) * Z(basis_r, y, 0.0)
            - lam * math.exp(a) / (lam + r - psi1) * Z(basis_r, y, 1.0)
            + Z(basis_r, y, phi_rl)
            / phi_rl
            * _ratio_psi(sn, 1.0, r, phi_r)
            * (phi_rl - phi_r)
            / (lam + r - psi1)
            * math.exp(a)
        )
    if case == "call_sn":
        b = log_barrier
        y = x - b
        return (
            math.exp(b)
            * (
                (phi_rl - phi_r) / (phi_r * (phi_rl - 1.0)) * Z(basis_rl, y, phi_r)
                - lam * int_exp_W(basis_rl, y, 1.0)
            )
            + K * lam * W_bar(basis_rl, y)
        )
    if case == "put_sp":
        a = log_barrier
        y = a - x
        return (
            math.exp(a)
            * (
                (phi_rl - phi_r) / (phi_r * (phi_rl + 1.0)) * Z(basis_rl, y, phi_r)
                + lam * int_exp_W(basis_rl, y, -1.0)
            )
            - K * lam * W_bar(basis_rl, y)
        )
    # call_sp
    b = log_barrier
    y = b - x
    psim1 = psi(sn, -1.0)
    return (
        -lam * K / (lam + r) * Z(basis_r, y, 0.0)
        + lam * math.exp(b) / (lam + r - psim1) * Z(basis_r, y, -1.0)
        + Z(basis_r, y, phi_rl)
        / phi_rl
        * _ratio_psi(sn, -1.0, r, phi_r)
        * (phi_rl - phi_r)
        / (lam + r - psim1)
        * math.exp(b)
    )


def value_at_optimum(model: LevyModel, option: OptionSpec, grid=None):
    """Optimal barrier plus the value curve at the optimum.

    Every grid point is evaluated through both the simplified optimal-value
    display and the general barrier-value formula; disagreement beyond
    CROSS_CHECK_RTOL signals a transcription bug and raises.
    Returns (BarrierSolution, ValueCurve).
    """
    sol = solve_barrier(model, option)
    grid = default_grid(option.strike) if grid is None else np.asarray(grid, dtype=float)
    vals = np.empty(len(grid))
    for i, s in enumerate(grid):
        x = math.log(s)
        simplified = _optimal_value_simplified(model, option, sol.log_barrier, x)
        general = value(model, option, sol.log_barrier, x)
        tol = CROSS_CHECK_RTOL * max(abs(general), 1e-6 * option.strike)
        if abs(simplified - general) > tol:
            raise ConsistencyError(
                f"simplified vs general value mismatch at s={s}: "
                f"{simplified} vs {general} (case {sol.case})"
            )
        vals[i] = simplified
    curve = ValueCurve(
        s=grid,
        values=vals,
        payoffs=option.payoff(grid),
        case=sol.case,
        log_barrier=sol.log_barrier,
        lam=option.lam,
    )
    return sol, curve


# ---------------------------------------------------------------------------
# Classical (continuous observation) reference case
# ---------------------------------------------------------------------------


def _classical_down(sn: LevyModel, r: float, x: float, a: float, theta: float) -> float:
    """Classical first-passage transform E_x[e^{-r tau_a^- + theta X_tau}]."""
    basis_r = build_scale_basis(sn, r)
    phi_r = basis_r.phi_q
    y = x - a
    if y <= 0:
        return math.exp(theta * x)
    psit = psi(sn, theta)
    ratio = _ratio_psi(sn, theta, r, phi_r)
    total = 0.0
    for z, w in zip(basis_r.roots, basis_r.weights):
        if abs(theta - z) < LIMIT_TOL:
            a_i = psi_prime(sn, theta)
        else:
            a_i = (psit - r) / (theta - z)
        total += w * math.exp(z * y) * (a_i - ratio)
    return math.exp(theta * a) * total


def classical_barrier(model: LevyModel, option: OptionSpec) -> float:
    """Optimal threshold of the continuously observable problem, via the
    Wiener-Hopf factors K E[exp(inf/sup of X at an independent Exp(r) time)]."""
    sn = model.sn_view()
    K, r = option.strike, option.r
    phi_r = build_scale_basis(sn, r).phi_q
    if model.side is JumpSide.SPECTRALLY_NEGATIVE:
        if option.kind is OptionKind.PUT:
            # E[exp(inf X at e_r)] = r (Phi(r) - 1) / (Phi(r) (r - psi(1)))
            return K * r / (phi_r * _ratio_psi(sn, 1.0, r, phi_r))
        _require_call_assumption(model, r)
        return K * phi_r / (phi_r - 1.0)
    if option.kind is OptionKind.PUT:
        # inf X = -sup Y with sup Y ~ Exp(Phi_Y(r))
        return K * phi_r / (phi_r + 1.0)
    _require_call_assumption(model, r)
    return K * r / (phi_r * _ratio_psi(sn, -1.0, r, phi_r))


def classical_value(model: LevyModel, option: OptionSpec, x: float) -> float:
    """Value function of the classical (lambda = infinity) problem."""
    sn = model.sn_view()
    K, r = option.strike, option.r
    level = classical_barrier(model, option)
    l = math.log(level)
    phi_r = build_scale_basis(sn, r).phi_q
    if option.kind is OptionKind.PUT:
        if model.side is JumpSide.SPECTRALLY_NEGATIVE:
            if x <= l:
                return K - math.exp(x)
            return K * _classical_down(sn, r, x, l, 0.0) - _classical_down(sn, r, x, l, 1.0)
        if x <= l:
            return K - math.exp(x)
        return (K - level) * math.exp(-phi_r * (x - l))
    _require_call_assumption(model, r)
    if x >= l:
        return math.exp(x) - K
    if model.side is JumpSide.SPECTRALLY_NEGATIVE:
        return (level - K) * math.exp(phi_r * (x - l))
    return _classical_down(sn, r, -x, -l, -1.0) - K * _classical_down(sn, r, -x, -l, 0.0)


def classical_curve(model: LevyModel, option: OptionSpec, grid=None):
    """Classical optimal level and value curve; the lambda column is inf."""
    level = classical_barrier(model, option)
    grid = default_grid(option.strike) if grid is None else np.asarray(grid, dtype=float)
    vals = np.array([classical_value(model, option, math.log(s)) for s in grid])
    curve = ValueCurve(
        s=grid,
        values=vals,
        payoffs=option.payoff(grid),
        case=_case_tag(model, option) + "_classical",
        log_barrier=math.log(level),
        lam=math.inf,
    )
    return level, curve


def barrier_solution_json(sol: BarrierSolution) -> str:
    return json.dumps(
        {
            "case": sol.case,
            "log_barrier": sol.log_barrier,
            "barrier": sol.barrier,
            "residual": sol.residual,
            "iterations": sol.iterations,
        }
    )
