import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from seqpinn.data import generate_poiseuille
from seqpinn.network import Architecture
from seqpinn.optimize import TrainConfig


@pytest.fixture
def tiny_arch():
    return Architecture(2, 8, True)


@pytest.fixture
def tiny_cfg():
    return TrainConfig(init_epochs=30, phase1_epochs=20, batch_size=64, adapt_epochs=3,
                       posterior_k=3, adapt_lr=1e-3, uncertainty_samples=5)


@pytest.fixture
def tiny_case():
    return generate_poiseuille(n_frames=6, n_collocation=120, n_wall=8, n_inlet=5,
                               n_outlet=5, n_samples=10, truth_shape=(9, 5))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS):
            terminalreporter.write_line(line)
