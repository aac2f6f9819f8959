"""q-scale functions of the exponential jump diffusion, in closed form.

For a rational Laplace exponent (exponential jumps), 1/(psi(theta) - q) is
a proper rational function whose partial-fraction expansion inverts to an
exponential mixture

    W_q(x) = sum_i e^{zeta_i x} / psi'(zeta_i),   x >= 0,

over the (simple, real) roots zeta_i of psi = q.  Everything the pricing
formulas need -- the running integral of W_q, the second scale function
Z_q(x, theta), and the convolution kernel int_0^x e^{theta y} W_q(x-y) dy --
then has an exact antiderivative.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .levy_model import JumpSide, LevyModel, ParameterError, psi, psi_prime

__all__ = ["ScaleBasis", "MultipleRootError", "build_scale_basis", "W", "W_bar", "Z", "int_exp_W"]

ROOT_RESIDUAL_TOL = 1e-10
ROOT_GAP_TOL = 1e-8
# Threshold below which psi(theta) = q is treated as the exact limiting case.
LIMIT_TOL = 1e-9


class MultipleRootError(RuntimeError):
    """Roots of psi = q too close for the simple-root mixture formula."""


def _rational_psi(model: LevyModel, theta: float) -> float:
    """The rational continuation of the SN Laplace exponent.

    The partial-fraction roots of psi = q can lie beyond the pole -rho of
    the probabilistic exponent; the rational function itself is what they
    satisfy, so no domain guard is applied here.
    """
    jump = 0.0
    if model.jump_rate > 0:
        jump = model.jump_rate * (model.jump_param / (model.jump_param + theta) - 1.0)
    return model.drift * theta + 0.5 * model.sigma**2 * theta**2 + jump


def _rational_psi_prime(model: LevyModel, theta: float) -> float:
    jump = 0.0
    if model.jump_rate > 0:
        jump = -model.jump_rate * model.jump_param / (model.jump_param + theta) ** 2
    return model.drift + model.sigma**2 * theta + jump


@dataclass(frozen=True)
class ScaleBasis:
    """Exponential-mixture representation of W_q for one discount level q.

    roots are sorted in decreasing order, so roots[0] is the unique positive
    root Phi(q); weights[i] = 1/psi'(roots[i]).
    """

    model: LevyModel
    q: float
    roots: tuple
    weights: tuple

    @property
    def phi_q(self) -> float:
        return self.roots[0]

    def to_json(self) -> str:
        return json.dumps({"q": self.q, "roots": list(self.roots), "weights": list(self.weights)})


def _characteristic_poly(model: LevyModel, q: float) -> np.ndarray:
    """Coefficients (highest degree first) of the polynomial whose real
    roots are the solutions of psi(theta) = q, for a spectrally negative
    exponent; the pole at -rho is cleared when jumps are present."""
    sig2h = 0.5 * model.sigma**2
    c, eta, rho = model.drift, model.jump_rate, model.jump_param
    if eta == 0:
        return np.array([sig2h, c, -q])
    if sig2h == 0:
        return np.array([c, c * rho - eta - q, -q * rho])
    return np.array([sig2h, sig2h * rho + c, c * rho - eta - q, -q * rho])


@lru_cache(maxsize=256)
def build_scale_basis(model: LevyModel, q: float) -> ScaleBasis:
    """Roots and weights of the partial-fraction inversion of 1/(psi - q).

    The model must be in its spectrally negative representation; convert
    spectrally positive models with .dual() first.
    """
    if model.side is not JumpSide.SPECTRALLY_NEGATIVE:
        raise ParameterError("scale basis requires the spectrally negative view; use model.dual()")
    if q <= 0:
        raise ParameterError(f"scale basis requires q > 0, got {q}")

    raw = np.roots(_characteristic_poly(model, q))
    scale = max(1.0, np.max(np.abs(raw)))
    if np.any(np.abs(raw.imag) > 1e-7 * scale):
        raise MultipleRootError(
            f"complex roots of psi = q encountered for q={q}: {raw}; "
            "perturb the model parameters"
        )
    roots = sorted((float(z) for z in raw.real), reverse=True)

    # Newton polish each root on the rational continuation of psi - q.
    polished = []
    for z in roots:
        for _ in range(10):
            res = _rational_psi(model, z) - q
            if abs(res) <= 0.5 * ROOT_RESIDUAL_TOL * max(1.0, q):
                break
            z -= res / _rational_psi_prime(model, z)
        if abs(_rational_psi(model, z) - q) > ROOT_RESIDUAL_TOL * max(1.0, q):
            raise MultipleRootError(
                f"root polish failed for q={q}: residual {_rational_psi(model, z) - q:.3e}"
            )
        polished.append(z)

    gaps = [abs(a - b) for a, b in zip(polished, polished[1:])]
    if gaps and min(gaps) < ROOT_GAP_TOL:
        raise MultipleRootError(
            f"near-multiple roots of psi = q for q={q} (gap {min(gaps):.2e}); "
            "perturb the model parameters"
        )
    if sum(1 for z in polished if z > 0) != 1:
        raise MultipleRootError(f"expected exactly one positive root for q={q}, got {polished}")

    weights = tuple(1.0 / _rational_psi_prime(model, z) for z in polished)
    return ScaleBasis(model=model, q=q, roots=tuple(polished), weights=weights)


def _e_div(alpha: float, x: float) -> float:
    """(exp(alpha*x) - 1)/alpha, with the alpha -> 0 limit x."""
    ax = alpha * x
    if abs(ax) < 1e-14:
        return x * (1.0 + 0.5 * ax)
    return math.expm1(ax) / alpha


def W(basis: ScaleBasis, x: float) -> float:
    """The scale function W_q(x); zero on the negative half-line."""
    if x < 0:
        return 0.0
    return sum(w * math.exp(z * x) for z, w in zip(basis.roots, basis.weights))


def W_bar(basis: ScaleBasis, x: float) -> float:
    """Running integral int_0^x W_q(y) dy in closed form."""
    if x <= 0:
        return 0.0
    return sum(
        w / z * math.expm1(z * x) for z, w in zip(basis.roots, basis.weights)
    )


def int_exp_W(basis: ScaleBasis, x: float, theta: float) -> float:
    """Convolution kernel int_0^x e^{theta y} W_q(x - y) dy.

    The removable case theta = zeta_i contributes w_i * x * e^{zeta_i x}.
    """
    if x <= 0:
        return 0.0
    total = 0.0
    for z, w in zip(basis.roots, basis.weights):
        total += w * math.exp(z * x) * _e_div(theta - z, x)
    return total


def Z(basis: ScaleBasis, x: float, theta: float) -> float:
    """Second scale function Z_q(x, theta).

    Defined as e^{theta x} (1 + (q - psi(theta)) int_0^x e^{-theta z} W_q(z) dz)
    and equal to e^{theta x} for x <= 0.  Evaluated through the reduced
    partial-fraction identity

        Z_q(x, theta) = (psi(theta) - q) sum_i w_i e^{zeta_i x} / (theta - zeta_i),

    which is algebraically identical for theta outside the root set but free
    of the e^{theta x} cancellation that makes the textbook form unstable for
    large theta.  At (and within LIMIT_TOL of) a root of psi = q the limit is
    e^{theta x} exactly.
    """
    if x <= 0:
        return math.exp(theta * x)
    pole = -basis.model.jump_param if basis.model.jump_rate > 0 else -math.inf
    if theta <= pole:
        raise ParameterError(f"Z undefined at theta={theta} (pole {pole})")
    psit = psi(basis.model, theta)
    if abs(psit - basis.q) < LIMIT_TOL * max(1.0, basis.q):
        return math.exp(theta * x)
    total = 0.0
    for z, w in zip(basis.roots, basis.weights):
        total += w * math.exp(z * x) / (theta - z)
    return (psit - basis.q) * total
