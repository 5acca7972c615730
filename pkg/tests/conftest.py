import numpy as np
import pytest


def bell_psi_minus() -> np.ndarray:
    """|psi-><psi-| = singlet projector on two qubits."""
    psi = np.array([0.0, 1.0, -1.0, 0.0]) / np.sqrt(2.0)
    return np.outer(psi, psi).astype(complex)


def random_density(rng, d: int, batch: int | None = None) -> np.ndarray:
    shape = (batch, d, d) if batch else (d, d)
    G = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    M = G @ np.conj(np.swapaxes(G, -1, -2))
    tr = np.trace(M, axis1=-2, axis2=-1).real
    return M / (tr[..., None, None] if batch else tr)


def haar_unitary(rng, d: int) -> np.ndarray:
    G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    Q, R = np.linalg.qr(G)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)
