import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from pencilpres.algebra import AlgebraElement, BlockAlgebra

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

block_dims = st.lists(st.integers(1, 4), min_size=1, max_size=3)
algebras = block_dims.map(BlockAlgebra)
seeds = st.integers(0, 2**32 - 1)


def diag(*values) -> AlgebraElement:
    return AlgebraElement(BlockAlgebra([len(values)]), [np.diag(np.asarray(values, dtype=complex))])


def mat(rows) -> AlgebraElement:
    m = np.asarray(rows, dtype=complex)
    return AlgebraElement(BlockAlgebra([m.shape[0]]), [m])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
