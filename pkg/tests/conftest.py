import numpy as np
import pytest

import fbcap as fb


@pytest.fixture(scope="session")
def ma05_channel():
    return fb.ChannelModel(Lambda=[[1.0]], P=1.0, noise=fb.build_ma1(0.5))


@pytest.fixture(scope="session")
def ma05_solution(ma05_channel):
    return fb.solve_capacity_scalar(ma05_channel)


@pytest.fixture(scope="session")
def ma05_policy(ma05_solution):
    return fb.extract_policy(ma05_solution)


@pytest.fixture(scope="session")
def mimo_instance():
    """Fixed 2-input/2-output instance with a random stable state matrix."""
    rng = np.random.default_rng(7)
    F = rng.standard_normal((2, 2))
    F *= 0.7 / np.max(np.abs(np.linalg.eigvals(F)))
    H = rng.standard_normal((2, 2))
    noise = fb.StateSpaceNoise(
        F=F, G=np.eye(2), H=H, W=np.eye(2), V=np.eye(2),
        L=np.zeros((2, 2)), Sigma1=np.eye(2),
    )
    return fb.ChannelModel(Lambda=np.eye(2), P=2.0, noise=noise)
