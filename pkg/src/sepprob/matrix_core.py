"""Dense complex-matrix kernel for small bipartite states.

Hermitian eigenvalues, partial trace, partial transpose, purity and the
positive-partial-transpose (PPT) test, for matrices up to 16x16.

Index convention: the row/column index of the composite space is
``i_A * dim_b + i_B`` (subsystem A is the slow index).  All bipartite
operations below use this convention.
"""

from __future__ import annotations

import numpy as np

HERM_TOL = 1e-10
PPT_TOL = 1e-13


class NonHermitianInput(ValueError):
    """Input matrix is not Hermitian within tolerance."""


class ShapeMismatch(ValueError):
    """Bipartition inconsistent with the matrix dimension."""


def _square(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {M.shape}")
    return M


def _check_bipartition(dim: int, dims: tuple[int, int]) -> tuple[int, int]:
    m, n = int(dims[0]), int(dims[1])
    if m < 1 or n < 1:
        raise ShapeMismatch(f"subsystem dimensions must be positive, got {dims}")
    if m * n != dim:
        raise ShapeMismatch(f"bipartition {m}x{n} does not factor dimension {dim}")
    return m, n


def check_density_matrix(rho: np.ndarray, herm_tol: float = 1e-12,
                         trace_tol: float = 1e-12, psd_tol: float = 1e-10) -> None:
    """Raise ValueError unless rho is Hermitian, unit-trace and numerically PSD."""
    rho = _square(rho)
    if np.abs(rho - rho.conj().T).max() > herm_tol:
        raise NonHermitianInput("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"trace is {tr}, expected 1")
    wmin = np.linalg.eigvalsh(rho)[0]
    if wmin < -psd_tol:
        raise ValueError(f"minimum eigenvalue {wmin} below -{psd_tol}")


def hermitian_eigenvalues(M: np.ndarray, tol: float = HERM_TOL) -> np.ndarray:
    """All eigenvalues of a Hermitian matrix, ascending."""
    M = _square(M)
    if M.shape[0] > 16:
        raise ShapeMismatch("kernel is restricted to dimensions <= 16")
    scale = max(np.abs(M).max(), 1.0)
    if np.abs(M - M.conj().T).max() > tol * scale:
        raise NonHermitianInput("matrix is not Hermitian within tolerance")
    return np.linalg.eigvalsh(M)


def partial_transpose(rho: np.ndarray, dims: tuple[int, int],
                      subsystem: str = "B") -> np.ndarray:
    """Partial transpose of a bipartite matrix over one subsystem.

    For subsystem B the entry ((i,j),(k,l)) of the result equals entry
    ((i,l),(k,j)) of rho, with the first index of each pair running over A.
    """
    rho = _square(rho)
    m, n = _check_bipartition(rho.shape[0], dims)
    T = rho.reshape(m, n, m, n)
    if subsystem == "B":
        T = T.transpose(0, 3, 2, 1)
    elif subsystem == "A":
        T = T.transpose(2, 1, 0, 3)
    else:
        raise ValueError(f"subsystem must be 'A' or 'B', got {subsystem!r}")
    return T.reshape(m * n, m * n)


def partial_transpose_batch(rhos: np.ndarray, dims: tuple[int, int],
                            subsystem: str = "B") -> np.ndarray:
    """Partial transpose applied along the leading batch axis."""
    m, n = _check_bipartition(rhos.shape[-1], dims)
    T = rhos.reshape(-1, m, n, m, n)
    if subsystem == "B":
        T = T.transpose(0, 1, 4, 3, 2)
    elif subsystem == "A":
        T = T.transpose(0, 3, 2, 1, 4)
    else:
        raise ValueError(f"subsystem must be 'A' or 'B', got {subsystem!r}")
    return np.ascontiguousarray(T).reshape(rhos.shape)


def partial_trace(rho: np.ndarray, dims: tuple[int, int],
                  keep: str = "A") -> np.ndarray:
    """Reduced matrix on the kept subsystem."""
    rho = _square(rho)
    m, n = _check_bipartition(rho.shape[0], dims)
    T = rho.reshape(m, n, m, n)
    if keep == "A":
        return np.trace(T, axis1=1, axis2=3)
    if keep == "B":
        return np.trace(T, axis1=0, axis2=2)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def partial_trace_batch(rhos: np.ndarray, dims: tuple[int, int],
                        keep: str = "A") -> np.ndarray:
    m, n = _check_bipartition(rhos.shape[-1], dims)
    T = rhos.reshape(-1, m, n, m, n)
    if keep == "A":
        return np.einsum("sijkj->sik", T)
    if keep == "B":
        return np.einsum("sijil->sjl", T)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def purity(rho: np.ndarray) -> float:
    """tr(rho^2)."""
    rho = _square(rho)
    return float(np.einsum("ij,ji->", rho, rho).real)


def purity_batch(rhos: np.ndarray) -> np.ndarray:
    return np.einsum("sij,sji->s", rhos, rhos).real


def is_ppt(rho: np.ndarray, dims: tuple[int, int],
           tol: float = PPT_TOL) -> tuple[bool, float]:
    """PPT test: (flag, minimum eigenvalue of the partial transpose over B).

    The flag equals separability for m*n <= 6 (Peres-Horodecki); for larger
    systems PPT is necessary but not sufficient.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    w = np.linalg.eigvalsh(partial_transpose(rho, dims, "B"))
    wmin = float(w[0])
    return wmin >= -tol, wmin


def min_pt_eigenvalue_batch(rhos: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    """Smallest eigenvalue of the partial transpose over B, per batch entry."""
    pt = partial_transpose_batch(rhos, dims, "B")
    return np.linalg.eigvalsh(pt)[:, 0]


def load_matrix(path) -> np.ndarray:
    """Read a matrix from the plain-text fixture format.

    First line: dim.  Then dim^2 lines "re im" in row-major order.
    """
    with open(path) as fh:
        lines = [ln for ln in (s.strip() for s in fh) if ln]
    d = int(lines[0])
    if len(lines) != 1 + d * d:
        raise ValueError(f"expected {d * d} entry lines, got {len(lines) - 1}")
    vals = [complex(float(a), float(b)) for a, b in (ln.split() for ln in lines[1:])]
    return np.array(vals, dtype=complex).reshape(d, d)


def save_matrix(path, M: np.ndarray) -> None:
    M = _square(M)
    with open(path, "w") as fh:
        fh.write(f"{M.shape[0]}\n")
        for z in M.ravel():
            fh.write(f"{z.real:.17g} {z.imag:.17g}\n")
