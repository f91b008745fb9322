import numpy as np
import pytest
from hypothesis import settings

import collapse_recovery as cr

settings.register_profile("suite", deadline=None, max_examples=100)
settings.load_profile("suite")


class StateFactory:
    """Seeded generator of random qubit/qutrit states for bulk property loops."""

    def __init__(self, seed=20260810):
        self.gen = np.random.default_rng(seed)

    def pure(self, dim=2) -> cr.DensityMatrix:
        v = self.gen.normal(size=dim) + 1j * self.gen.normal(size=dim)
        v /= np.linalg.norm(v)
        return cr.DensityMatrix(np.outer(v, v.conj()))

    def mixed(self, dim=2) -> cr.DensityMatrix:
        a = self.gen.normal(size=(dim, dim)) + 1j * self.gen.normal(size=(dim, dim))
        m = a @ a.conj().T
        return cr.DensityMatrix(m / np.real(np.trace(m)))

    def any_state(self, dim=2) -> cr.DensityMatrix:
        return self.pure(dim) if self.gen.random() < 0.5 else self.mixed(dim)

    def hermitian(self, dim=2) -> np.ndarray:
        a = self.gen.normal(size=(dim, dim)) + 1j * self.gen.normal(size=(dim, dim))
        return a + a.conj().T

    def amplitudes(self):
        v = self.gen.normal(size=2) + 1j * self.gen.normal(size=2)
        v /= np.linalg.norm(v)
        return complex(v[0]), complex(v[1])


@pytest.fixture
def states() -> StateFactory:
    return StateFactory()
