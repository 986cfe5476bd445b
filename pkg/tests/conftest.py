import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable

from halfspec import TruncationSpec, default_grid_sizes, s1_benchmark_field, sample_on_grid

TWO_PI = 2.0 * np.pi


@pytest.fixture(scope="session")
def s1_vf():
    return s1_benchmark_field()


@pytest.fixture(scope="session")
def s1_trunc16():
    return TruncationSpec(1, (16,), (TWO_PI,))


@pytest.fixture(scope="session")
def s1_uniform16(s1_trunc16):
    return sample_on_grid(
        (TWO_PI,), default_grid_sizes(s1_trunc16), lambda x: np.ones_like(x)
    )
