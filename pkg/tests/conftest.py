import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from capdist.channel import ChannelSpec, random_channel  # noqa: E402
from capdist.closed_form import bmc_build_channel  # noqa: E402


@pytest.fixture
def bmc04():
    return bmc_build_channel(1, 0.4)


@pytest.fixture
def bmc03():
    return bmc_build_channel(1, 0.3)


def identity_channel(k=2):
    """Noiseless Y = X with a single state."""
    return ChannelSpec.from_arrays(np.eye(k)[:, None, :], [1.0], [[0.0]])


def state_revealing_channel(nx=2, ns=2):
    """Y = S whatever the input."""
    trans = np.zeros((nx, ns, ns))
    for x in range(nx):
        trans[x] = np.eye(ns)
    return ChannelSpec.from_arrays(trans, np.full(ns, 1.0 / ns))


def bsc_channel(eps):
    trans = np.array([[[1 - eps, eps]], [[eps, 1 - eps]]])
    return ChannelSpec.from_arrays(trans, [1.0], [[0.0]])


def noisy_xor_channel(r=0.3, eps=0.1):
    """Y = X xor S xor Z: every input has the same estimation cost."""
    trans = np.zeros((2, 2, 2))
    for x in range(2):
        for s in range(2):
            trans[x, s, x ^ s] = 1 - eps
            trans[x, s, 1 - (x ^ s)] = eps
    return ChannelSpec.from_arrays(trans, [1 - r, r])


def random_specs(count, seed, shapes=((2, 2, 2), (3, 2, 3), (2, 3, 2), (3, 3, 3)), **kw):
    rng = np.random.default_rng(seed)
    return [random_channel(rng, *shapes[i % len(shapes)], **kw) for i in range(count)]


def multiplicative_mac(r=0.3):
    """Y = S * (x1 OR x2) with binary state Pr[S=1] = r and Hamming distortion."""
    from capdist.mac import MacChannelSpec

    trans = np.zeros((2, 2, 2, 2))
    for x1 in range(2):
        for x2 in range(2):
            for s in range(2):
                trans[x1, x2, s, s * (x1 | x2)] = 1.0
    return MacChannelSpec.from_arrays(trans, [1 - r, r])


def random_mac(rng, n1=2, n2=2, ns=2, ny=2):
    from capdist.mac import MacChannelSpec

    trans = rng.dirichlet(np.ones(ny), size=(n1, n2, ns))
    dist = rng.random((ns, ns))
    np.fill_diagonal(dist, 0.0)
    return MacChannelSpec.from_arrays(trans, rng.dirichlet(np.ones(ns)), dist)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
