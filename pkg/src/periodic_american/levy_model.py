"""One-sided exponential jump-diffusion models.

The log-price X is a Brownian motion with drift plus a compound Poisson
process whose jumps are exponentially distributed and one-sided (all down
for spectrally negative models, all up for spectrally positive ones).
This module evaluates the Laplace exponent psi, its right-inverse Phi,
and calibrates the drift so that the discounted stock is a martingale.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

from scipy.optimize import brentq

__all__ = [
    "JumpSide",
    "LevyModel",
    "ParameterError",
    "RootBracketError",
    "psi",
    "psi_prime",
    "phi",
    "calibrate_drift",
    "check_call_assumption",
    "model_from_config",
]

# Residual tolerance for the right-inverse: downstream barrier formulas
# amplify Phi errors through exponentials.
PHI_RESIDUAL_TOL = 1e-12


class ParameterError(ValueError):
    """Invalid model or option parameters."""


class RootBracketError(RuntimeError):
    """Root finder failed to converge; carries bracket and residual info."""


class JumpSide(str, Enum):
    SPECTRALLY_NEGATIVE = "sn"
    SPECTRALLY_POSITIVE = "sp"


@dataclass(frozen=True)
class LevyModel:
    """One-sided exponential jump diffusion for the log price.

    In its own coordinates the process is
        X_t = drift*t + sigma*B_t + sign * sum_{n<=N_t} J_n,
    with N a Poisson process of rate ``jump_rate``, J_n ~ Exp(jump_param),
    and sign -1 (spectrally negative) or +1 (spectrally positive).
    """

    side: JumpSide
    sigma: float
    drift: float
    jump_rate: float
    jump_param: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ParameterError(f"sigma must be >= 0, got {self.sigma}")
        if self.jump_rate < 0:
            raise ParameterError(f"jump_rate must be >= 0, got {self.jump_rate}")
        if self.jump_param <= 0:
            raise ParameterError(f"jump_param must be > 0, got {self.jump_param}")
        if self.sigma == 0 and self.jump_rate == 0:
            raise ParameterError("degenerate model: sigma and jump_rate both zero")
        if self.sigma == 0 and self.jump_rate > 0:
            # Without a Brownian part the drift must oppose the jumps,
            # otherwise the paths are a.s. monotone.
            sign = -1.0 if self.side is JumpSide.SPECTRALLY_NEGATIVE else 1.0
            if sign * self.drift >= 0:
                raise ParameterError(
                    "monotone paths: with sigma=0 the drift must oppose the jump direction"
                )

    @property
    def jump_sign(self) -> float:
        return -1.0 if self.side is JumpSide.SPECTRALLY_NEGATIVE else 1.0

    def dual(self) -> "LevyModel":
        """The sign-flipped process Y = -X (jump side swapped)."""
        other = (
            JumpSide.SPECTRALLY_POSITIVE
            if self.side is JumpSide.SPECTRALLY_NEGATIVE
            else JumpSide.SPECTRALLY_NEGATIVE
        )
        return replace(self, side=other, drift=-self.drift)

    def sn_view(self) -> "LevyModel":
        """This model if spectrally negative, otherwise its dual."""
        return self if self.side is JumpSide.SPECTRALLY_NEGATIVE else self.dual()


def psi(model: LevyModel, theta: float) -> float:
    """Laplace exponent log E[exp(theta * X_1)] in the model's own coordinates.

    For a spectrally negative model this is
        drift*theta + sigma^2 theta^2 / 2 + jump_rate*(rho/(rho+theta) - 1),
    finite for theta > -rho.  Raises at or beyond the pole.
    """
    rho = model.jump_param
    s = model.jump_sign
    if model.jump_rate > 0 and s * theta >= rho:
        raise ParameterError(
            f"psi undefined: theta={theta} at or beyond the pole {s * rho:+g}"
        )
    jump_term = 0.0
    if model.jump_rate > 0:
        jump_term = model.jump_rate * (rho / (rho - s * theta) - 1.0)
    return model.drift * theta + 0.5 * model.sigma**2 * theta**2 + jump_term


def psi_prime(model: LevyModel, theta: float) -> float:
    """Derivative of the Laplace exponent in theta."""
    rho = model.jump_param
    s = model.jump_sign
    if model.jump_rate > 0 and s * theta >= rho:
        raise ParameterError(
            f"psi' undefined: theta={theta} at or beyond the pole {s * rho:+g}"
        )
    jump_term = 0.0
    if model.jump_rate > 0:
        jump_term = model.jump_rate * s * rho / (rho - s * theta) ** 2
    return model.drift + model.sigma**2 * theta + jump_term


def phi(model: LevyModel, p: float, max_iter: int = 200) -> float:
    """Right-inverse Phi(p) = sup{s >= 0 : psi(s) = p} for p > 0.

    psi is convex with psi(0) = 0, so the level p > 0 is crossed exactly
    once on (0, inf); a doubling bracket plus Brent's method finds it, and
    a few Newton steps polish the residual below PHI_RESIDUAL_TOL.
    """
    if p <= 0:
        raise ParameterError(f"phi requires p > 0, got {p}")
    has_upper_pole = model.jump_rate > 0 and model.side is JumpSide.SPECTRALLY_POSITIVE
    pole = model.jump_param if has_upper_pole else math.inf

    f = lambda t: psi(model, t) - p
    hi = 1.0 if not has_upper_pole else 0.5 * pole
    it = 0
    while f(hi) <= 0:
        hi = 2.0 * hi if not has_upper_pole else 0.5 * (hi + pole)
        it += 1
        if it > max_iter:
            raise RootBracketError(
                f"phi bracket search failed: psi({hi}) = {psi(model, hi)} <= {p}"
            )
    root = brentq(f, 0.0, hi, xtol=1e-15, rtol=8.9e-16, maxiter=max_iter)

    # Newton polish against the residual tolerance.
    tol = PHI_RESIDUAL_TOL * max(1.0, p)
    for _ in range(8):
        res = psi(model, root) - p
        if abs(res) <= tol:
            return root
        root -= res / psi_prime(model, root)
    res = psi(model, root) - p
    if abs(res) > tol:
        raise RootBracketError(
            f"phi failed to converge: bracket [0, {hi}], residual {res:.3e}"
        )
    return root


def calibrate_drift(
    sigma: float,
    jump_rate: float,
    jump_param: float,
    side: JumpSide,
    r: float,
    delta: float,
) -> float:
    """Drift c such that log E[S_1] = r - delta, i.e. the discounted,
    dividend-adjusted stock is a martingale.

    Closed form: log E[S_1] = c + sigma^2/2 + jump_rate*(rho/(rho - s) - 1)
    with s = +-1 the jump sign, solved for c.
    """
    if not (r > delta >= 0):
        raise ParameterError(f"need r > delta >= 0, got r={r}, delta={delta}")
    s = 1.0 if side is JumpSide.SPECTRALLY_POSITIVE else -1.0
    if side is JumpSide.SPECTRALLY_POSITIVE and jump_param <= 1:
        raise ParameterError(
            f"E[S_1] infinite: upward jump rate parameter {jump_param} <= 1"
        )
    jump_term = 0.0
    if jump_rate > 0:
        jump_term = jump_rate * (jump_param / (jump_param - s) - 1.0)
    return (r - delta) - 0.5 * sigma**2 - jump_term


def check_call_assumption(model: LevyModel, r: float) -> bool:
    """True iff log E[S_1] < r (the condition that makes the call nontrivial)."""
    try:
        return psi(model, 1.0) < r
    except ParameterError:
        # E[S_1] infinite.
        return False


def model_from_config(config) -> LevyModel:
    """Build a model from a JSON-style config dict or a file path.

    Schema: {"side": "sn"|"sp", "sigma": float, "drift": float|"calibrate",
             "jump_rate": float, "jump_param": float}
    with "r" and "delta" required when drift == "calibrate".
    """
    if isinstance(config, (str, Path)):
        with open(config) as fh:
            config = json.load(fh)
    try:
        side = JumpSide(config["side"].lower())
        sigma = float(config["sigma"])
        jump_rate = float(config["jump_rate"])
        jump_param = float(config["jump_param"])
        drift = config["drift"]
    except (KeyError, ValueError, AttributeError) as exc:
        raise ParameterError(f"bad model config: {exc}") from exc
    if drift == "calibrate":
        if "r" not in config or "delta" not in config:
            raise ParameterError('drift="calibrate" requires "r" and "delta"')
        drift = calibrate_drift(
            sigma, jump_rate, jump_param, side, float(config["r"]), float(config["delta"])
        )
    return LevyModel(side, sigma, float(drift), jump_rate, jump_param)
