import sys

import numpy as np
import pytest

from l2diffusion.equilibria import equilibrium
from l2diffusion.models import Hill
from l2diffusion.orbits import find_mu_k, homoclinic

HOMOCLINIC_DELTA = 1e-9


@pytest.fixture(scope="session")
def hill_eq():
    return equilibrium(Hill())


@pytest.fixture(scope="session")
def mu2():
    return find_mu_k(2)


@pytest.fixture(scope="session")
def orbit_k2(mu2):
    return homoclinic(mu2, 2, HOMOCLINIC_DELTA)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_states(rng, n, lo=-1.6, hi=1.6, mu=None, clearance=0.05):
    """Sampled states at least ``clearance`` from both primaries."""
    out = []
    while len(out) < n:
        s = rng.uniform(lo, hi, 4)
        if mu is not None:
            if np.hypot(s[0] - mu, s[1]) < clearance or np.hypot(s[0] + 1 - mu, s[1]) < clearance:
                continue
        elif np.hypot(s[0], s[1]) < clearance:
            continue
        out.append(s)
    return np.array(out)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
