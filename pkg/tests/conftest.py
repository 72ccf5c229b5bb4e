import numpy as np
import pytest

from spinboltz import EnergyGrid
from spinboltz.grid import random_physical_field
from spinboltz.presets import make_preset


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_grid():
    return EnergyGrid(n=6, h=0.5)


@pytest.fixture
def beta_model():
    return make_preset("beta-decay")


@pytest.fixture
def zero_frame_model():
    return make_preset("zero-frame")


@pytest.fixture
def rotated_model():
    return make_preset("zero-frame-rotated")


@pytest.fixture
def small_field(small_grid, rng):
    return random_physical_field(small_grid, rng)


def rand_hermitian(rng, scale=1.0):
    a = rng.uniform(-scale, scale)
    d = rng.uniform(-scale, scale)
    b = rng.uniform(-scale, scale) + 1j * rng.uniform(-scale, scale)
    return np.array([[a, b], [np.conj(b), d]])


def rand_physical_block(rng):
    lam = rng.uniform(0.05, 0.95, size=2)
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    q = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
    return (q * lam) @ q.conj().T


def rand_block_stack(rng):
    """Per-species (4, 2, 2) stack of physical blocks."""
    return np.stack([rand_physical_block(rng) for _ in range(4)])


def rand_full_rank(rng, scale=1.0):
    while True:
        m = rng.uniform(-scale, scale, size=(2, 2)).astype(complex)
        if abs(np.linalg.det(m)) > 1e-3:
            return m
