"""su(d) generator basis, coherence (generalized Bloch) vectors, Casimir
invariants and the two-qubit correlation invariant.

Basis order is frozen: symmetric off-diagonal generators in lexicographic
(j,k) order (j<k), then the antisymmetric ones in the same order, then the
d-1 diagonal generators.  For d=2 this is (sigma_x, sigma_y, sigma_z); for
d=3 it is (l1, l4, l6, l2, l5, l7, l3, l8) in standard Gell-Mann numbering.

Radius normalization: radius = |n| / sqrt(2(d-1)/d), so pure states sit at
exactly 1 for every d.  The cubic invariant is evaluated on the same
unit-normalized vector, giving |c3| <= 1/sqrt(3) for qutrits.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from . import matrix_core as mc


class UnsupportedDimension(ValueError):
    """Generator basis requested outside the supported range 2..8."""


def radius_scale(d: int) -> float:
    """|n| of a pure d-level state: sqrt(2(d-1)/d)."""
    return np.sqrt(2.0 * (d - 1) / d)


@dataclass(frozen=True, eq=False)
class GeneratorBasis:
    """The d^2-1 generalized Gell-Mann generators, tr(l_a l_b) = 2 delta_ab."""
    d: int
    matrices: np.ndarray  # (d^2-1, d, d), read-only


@lru_cache(maxsize=None)
def su_basis(d: int) -> GeneratorBasis:
    """Generalized Gell-Mann basis of su(d) in the frozen order above."""
    if not 2 <= d <= 8:
        raise UnsupportedDimension(f"supported dimensions are 2..8, got {d}")
    mats = []
    pairs = list(combinations(range(d), 2))
    for j, k in pairs:
        m = np.zeros((d, d), dtype=complex)
        m[j, k] = m[k, j] = 1.0
        mats.append(m)
    for j, k in pairs:
        m = np.zeros((d, d), dtype=complex)
        m[j, k] = -1j
        m[k, j] = 1j
        mats.append(m)
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        mats.append(np.diag(diag).astype(complex) * np.sqrt(2.0 / (l * (l + 1))))
    arr = np.array(mats)
    arr.setflags(write=False)
    return GeneratorBasis(d=d, matrices=arr)


@dataclass(frozen=True, eq=False)
class CoherenceVector:
    """Generalized Bloch vector n_a = tr(rho l_a) and its normalized radius."""
    d: int
    n: np.ndarray
    radius: float


def coherence_vector(rho: np.ndarray, basis: GeneratorBasis) -> CoherenceVector:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (basis.d, basis.d):
        raise mc.ShapeMismatch(
            f"state dimension {rho.shape} does not match basis d={basis.d}")
    n = np.einsum("ij,aji->a", rho, basis.matrices).real
    radius = float(np.linalg.norm(n) / radius_scale(basis.d))
    return CoherenceVector(d=basis.d, n=n, radius=radius)


def coherence_vectors_batch(rhos: np.ndarray, basis: GeneratorBasis) -> np.ndarray:
    """Coherence vectors along the leading batch axis, shape (batch, d^2-1)."""
    return np.einsum("sij,aji->sa", rhos, basis.matrices).real


@dataclass(frozen=True, eq=False)
class DTensor:
    """Totally symmetric d_abc = (1/4) tr({l_a, l_b} l_c), stored sparsely.

    entries maps canonically sorted index triples to values; dense() expands
    the full symmetrized array.
    """
    d: int
    entries: dict

    def value(self, a: int, b: int, c: int) -> float:
        return self.entries.get(tuple(sorted((a, b, c))), 0.0)

    def dense(self) -> np.ndarray:
        m = self.d * self.d - 1
        out = np.zeros((m, m, m))
        for (a, b, c), v in self.entries.items():
            for i, j, k in {(a, b, c), (a, c, b), (b, a, c),
                            (b, c, a), (c, a, b), (c, b, a)}:
                out[i, j, k] = v
        return out


@lru_cache(maxsize=None)
def d_tensor(d: int) -> DTensor:
    """Symmetric structure constants of su(d) for the module's basis."""
    basis = su_basis(d)
    lam = basis.matrices
    m = len(lam)
    entries = {}
    for a in range(m):
        for b in range(a, m):
            anti = lam[a] @ lam[b] + lam[b] @ lam[a]
            for c in range(b, m):
                v = 0.25 * np.einsum("ij,ji->", anti, lam[c]).real
                if abs(v) > 1e-12:
                    entries[(a, b, c)] = float(v)
    return DTensor(d=basis.d, entries=entries)


def cubic_casimir(v: CoherenceVector, dt: DTensor) -> float:
    """c3 = sum_abc d_abc nhat_a nhat_b nhat_c on the unit-scaled vector."""
    if v.d != dt.d:
        raise mc.ShapeMismatch(f"vector d={v.d} does not match tensor d={dt.d}")
    nhat = v.n / radius_scale(v.d)
    c3 = 0.0
    for (a, b, c), val in dt.entries.items():
        mult = len({(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)})
        c3 += mult * val * nhat[a] * nhat[b] * nhat[c]
    return c3


def cubic_casimir_batch(nvecs: np.ndarray, dt: DTensor) -> np.ndarray:
    """Cubic invariant for a batch of raw coherence vectors (unscaled)."""
    nhat = nvecs / radius_scale(dt.d)
    D = dt.dense()
    t = np.einsum("abc,sb,sc->sa", D, nhat, nhat)
    return np.einsum("sa,sa->s", t, nhat)


@lru_cache(maxsize=None)
def _pauli_pairs() -> np.ndarray:
    sig = su_basis(2).matrices  # (sigma_x, sigma_y, sigma_z)
    return np.array([np.kron(sig[i], sig[j]) for i in range(3) for j in range(3)])


def fano_correlation_invariant(rho: np.ndarray) -> float:
    """Sum of squares of the 3x3 Fano correlation matrix of a two-qubit state."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise mc.ShapeMismatch(f"expected a 4x4 state, got {rho.shape}")
    c = np.einsum("ij,aji->a", rho, _pauli_pairs()).real
    return float(np.dot(c, c))


def fano_correlation_invariant_batch(rhos: np.ndarray) -> np.ndarray:
    c = np.einsum("sij,aji->sa", rhos, _pauli_pairs()).real
    return np.einsum("sa,sa->s", c, c)


@dataclass(frozen=True)
class InvariantRecord:
    """Per-sample invariants of the two reduced subsystems plus the PPT flag."""
    r_a: float
    r_b: float
    c2_a: float
    c2_b: float
    c3_a: float | None
    c3_b: float | None
    c002: float | None
    ppt: bool


def _radius_from_purity(p: float, d: int) -> float:
    if d == 1:
        return 0.0
    return np.sqrt(max((p - 1.0 / d) / (1.0 - 1.0 / d), 0.0))


def record(rho: np.ndarray, dims: tuple[int, int],
           tol: float = mc.PPT_TOL) -> InvariantRecord:
    """Reference single-sample path; the batch path is tested against it."""
    m, n = dims
    rho_a = mc.partial_trace(rho, dims, "A")
    rho_b = mc.partial_trace(rho, dims, "B")
    va = coherence_vector(rho_a, su_basis(m)) if m >= 2 else None
    vb = coherence_vector(rho_b, su_basis(n)) if n >= 2 else None
    r_a = va.radius if va else 0.0
    r_b = vb.radius if vb else 0.0
    c3_a = cubic_casimir(va, d_tensor(m)) if m == 3 else None
    c3_b = cubic_casimir(vb, d_tensor(n)) if n == 3 else None
    c002 = fano_correlation_invariant(rho) if (m, n) == (2, 2) else None
    flag, _ = mc.is_ppt(rho, dims, tol)
    return InvariantRecord(r_a=r_a, r_b=r_b, c2_a=r_a * r_a, c2_b=r_b * r_b,
                           c3_a=c3_a, c3_b=c3_b, c002=c002, ppt=flag)


def record_batch(rhos: np.ndarray, dims: tuple[int, int],
                 tol: float = mc.PPT_TOL) -> dict:
    """Vectorized invariants for a batch of states.

    Returns arrays keyed r_a, r_b, c2_a, c2_b, ppt, min_eig and, when
    applicable, c3_a / c3_b (qutrit subsystem) and c002 (2x2 shape).
    """
    m, n = dims
    rho_a = mc.partial_trace_batch(rhos, dims, "A")
    rho_b = mc.partial_trace_batch(rhos, dims, "B")
    c2_a = np.clip((mc.purity_batch(rho_a) - 1.0 / m) / (1.0 - 1.0 / m), 0.0, None) \
        if m >= 2 else np.zeros(len(rhos))
    c2_b = np.clip((mc.purity_batch(rho_b) - 1.0 / n) / (1.0 - 1.0 / n), 0.0, None) \
        if n >= 2 else np.zeros(len(rhos))
    min_eig = mc.min_pt_eigenvalue_batch(rhos, dims)
    out = {
        "r_a": np.sqrt(c2_a),
        "r_b": np.sqrt(c2_b),
        "c2_a": c2_a,
        "c2_b": c2_b,
        "min_eig": min_eig,
        "ppt": min_eig >= -tol,
    }
    if m == 3:
        nv = coherence_vectors_batch(rho_a, su_basis(3))
        out["c3_a"] = cubic_casimir_batch(nv, d_tensor(3))
    if n == 3:
        nv = coherence_vectors_batch(rho_b, su_basis(3))
        out["c3_b"] = cubic_casimir_batch(nv, d_tensor(3))
    if (m, n) == (2, 2):
        out["c002"] = fano_correlation_invariant_batch(rhos)
    return out
