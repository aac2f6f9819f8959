"""Shared fixtures: the two benchmark models used throughout the tests.

Both are the sigma=0.2, rate-1, Exp(2)-jump diffusion with drift calibrated
so that the discounted dividend-paying stock is a martingale (r=0.05,
delta=0.03): drift 1/3 for downward jumps, -1 for upward jumps.
"""

import numpy as np
import pytest

from periodic_american import JumpSide, LevyModel, OptionKind, OptionSpec

K = 50.0
R = 0.05
LAM = 1.0
DELTA = 0.03


@pytest.fixture(scope="session")
def sn_model():
    return LevyModel(JumpSide.SPECTRALLY_NEGATIVE, 0.2, 1.0 / 3.0, 1.0, 2.0)


@pytest.fixture(scope="session")
def sp_model():
    return LevyModel(JumpSide.SPECTRALLY_POSITIVE, 0.2, -1.0, 1.0, 2.0)


@pytest.fixture(scope="session")
def all_cases(sn_model, sp_model):
    """(model, option) pairs for the four put/call x jump-side cases."""
    return [
        (sn_model, OptionSpec(OptionKind.PUT, K, R, LAM)),
        (sn_model, OptionSpec(OptionKind.CALL, K, R, LAM)),
        (sp_model, OptionSpec(OptionKind.PUT, K, R, LAM)),
        (sp_model, OptionSpec(OptionKind.CALL, K, R, LAM)),
    ]


@pytest.fixture(scope="session")
def spot_grid():
    return np.geomspace(K / 2.0, 2.0 * K, 5)
