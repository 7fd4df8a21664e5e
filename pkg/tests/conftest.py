"""Shared fixtures: the published sparse-regression reference network.

The reference is the 20-5-1 linear network recovered in the benchmark's
illustrating trial: the first weight matrix has exactly two nonzeros, both
in its second column, and the second weight matrix has a single nonzero in
its second row, so the whole function collapses onto one hidden unit fed
by features 3 and 10 (1-based).
"""

import numpy as np
import pytest

from neurontrim import Layer, Network

REF_W1_NONZEROS = {(2, 1): -0.6687693, (9, 1): 1.42591035}  # 0-based
REF_W2_NONZEROS = {(1, 0): -5.74600601}
REF_X0_SUPPORT = {2: 3.87308349, 9: -8.23781791}  # true coefficients, 0-based


def build_reference_net() -> Network:
    w1 = np.zeros((20, 5))
    for pos, value in REF_W1_NONZEROS.items():
        w1[pos] = value
    w2 = np.zeros((5, 1))
    for pos, value in REF_W2_NONZEROS.items():
        w2[pos] = value
    return Network([
        Layer(w1, np.zeros(5), "linear"),
        Layer(w2, np.zeros(1), "linear"),
    ])


@pytest.fixture
def reference_net() -> Network:
    return build_reference_net()
