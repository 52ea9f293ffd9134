"""Hermitian-operator algebra on C^d.

Hermitian operators are plain complex ``(d, d)`` numpy arrays. Superoperators
(linear maps on Hermitian operators) are real ``(d^2, d^2)`` arrays written in
the standard Hermitian basis returned by :func:`standard_herm_basis`; in that
basis every frame-type superoperator is real symmetric and eigendecompositions
stay real. The basis ordering is frozen: identity first, then the symmetric,
antisymmetric, and diagonal-traceless blocks, each in lexicographic index
order. All vectorized fixtures in the test suite depend on this ordering.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np

HERMITICITY_TOL = 1e-12
DEFAULT_PINV_RTOL = 1e-10


def is_hermitian(x: np.ndarray, tol: float = HERMITICITY_TOL) -> bool:
    x = np.asarray(x)
    return x.ndim == 2 and x.shape[0] == x.shape[1] and np.abs(x - x.conj().T).max() <= tol


def require_hermitian(x: np.ndarray, tol: float = HERMITICITY_TOL, what: str = "operator") -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"{what} must be a square matrix, got shape {x.shape}")
    defect = np.abs(x - x.conj().T).max()
    if defect > tol:
        raise ValueError(f"{what} is not Hermitian (defect {defect:.3e} > {tol:.1e})")
    return x


def require_density(rho: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Check that ``rho`` is a valid density matrix (Hermitian, unit trace, PSD)."""
    rho = require_hermitian(rho, tol=1e-10, what="state")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise ValueError(f"state has trace {tr}, expected 1")
    min_ev = np.linalg.eigvalsh(rho)[0]
    if min_ev < -1e-10:
        raise ValueError(f"state is not PSD (min eigenvalue {min_ev:.3e})")
    return rho


def hs_inner(x: np.ndarray, y: np.ndarray) -> float:
    """Hilbert-Schmidt inner product tr(X^dag Y), real for Hermitian inputs.

    The imaginary part (roundoff for Hermitian arguments) is discarded.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return complex(np.sum(x.conj() * y)).real


def hs_norm(x: np.ndarray) -> float:
    """L2 (Frobenius) norm ||X||_2 = sqrt(tr X^dag X)."""
    return float(np.linalg.norm(x))


@dataclass
class HermBasis:
    """Orthonormal Hermitian operator basis: element 0 is I/sqrt(d), the rest traceless."""

    dim: int
    elements: np.ndarray  # (d^2, d, d) complex, read-only

    def __len__(self) -> int:
        return self.dim**2


@lru_cache(maxsize=None)
def standard_herm_basis(d: int) -> HermBasis:
    """Generalized Gell-Mann basis of Herm(C^d), orthonormal under hs_inner.

    Ordering: I/sqrt(d); then (E_ij + E_ji)/sqrt(2) for i < j; then
    (-i E_ij + i E_ji)/sqrt(2) for i < j; then the d-1 diagonal traceless
    elements. For d = 2 this is {I, X, Y, Z}/sqrt(2).
    """
    if d < 2:
        raise ValueError("basis requires d >= 2")
    els = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for i in range(d):
        for j in range(i + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[i, j] = m[j, i] = 1.0
            els.append(m / np.sqrt(2))
    for i in range(d):
        for j in range(i + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[i, j] = -1j
            m[j, i] = 1j
            els.append(m / np.sqrt(2))
    for l in range(1, d):
        m = np.zeros((d, d), dtype=complex)
        m[np.arange(l), np.arange(l)] = 1.0
        m[l, l] = -l
        els.append(m / np.sqrt(l * (l + 1)))
    arr = np.array(els)
    arr.flags.writeable = False
    return HermBasis(dim=d, elements=arr)


def vectorize(x: np.ndarray, basis: HermBasis | None = None) -> np.ndarray:
    """Real coefficient vector of a Hermitian operator in the given basis."""
    x = np.asarray(x, dtype=complex)
    basis = basis or standard_herm_basis(x.shape[0])
    if x.shape != (basis.dim, basis.dim):
        raise ValueError(f"dimension mismatch: operator {x.shape}, basis dim {basis.dim}")
    flat = basis.elements.reshape(len(basis), -1)
    return (flat.conj() @ x.ravel()).real


def devectorize(v: np.ndarray, basis: HermBasis) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    v = np.asarray(v, dtype=float)
    if v.shape != (len(basis),):
        raise ValueError(f"coefficient vector has shape {v.shape}, expected ({len(basis)},)")
    return np.tensordot(v, basis.elements, axes=1)


def outer_superop(y: np.ndarray, basis: HermBasis | None = None) -> np.ndarray:
    """Rank-one superoperator P(Y): X -> <Y, X> Y, as v v^T with v = vectorize(Y)."""
    v = vectorize(y, basis)
    return np.outer(v, v)


def superop_apply(s: np.ndarray, x: np.ndarray, basis: HermBasis | None = None) -> np.ndarray:
    """Apply a superoperator matrix to a Hermitian operator."""
    basis = basis or standard_herm_basis(np.asarray(x).shape[0])
    s = np.asarray(s, dtype=float)
    if s.shape != (len(basis), len(basis)):
        raise ValueError(f"superoperator shape {s.shape} does not match d^2 = {len(basis)}")
    return devectorize(s @ vectorize(x, basis), basis)


@dataclass
class SpectralDecomposition:
    """Real eigendecomposition of a symmetric superoperator, eigenvalues descending."""

    eigenvalues: np.ndarray   # (d^2,) descending
    vectors: np.ndarray       # (d^2, d^2), columns aligned with eigenvalues
    operators: list           # devectorized eigenvectors, as Hermitian (d, d) arrays


def superop_eig(s: np.ndarray, basis: HermBasis, sym_tol: float = 1e-10) -> SpectralDecomposition:
    s = np.asarray(s, dtype=float)
    defect = np.abs(s - s.T).max()
    if defect > sym_tol:
        raise ValueError(f"superoperator is not symmetric (defect {defect:.3e})")
    w, v = np.linalg.eigh((s + s.T) / 2)
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    ops = [devectorize(v[:, k], basis) for k in range(v.shape[1])]
    return SpectralDecomposition(eigenvalues=w, vectors=v, operators=ops)


def superop_pseudo_inverse(s: np.ndarray, rel_tol: float = DEFAULT_PINV_RTOL) -> tuple[np.ndarray, int]:
    """Moore-Penrose inverse of a symmetric superoperator; returns (matrix, numerical rank).

    Eigenvalues below ``rel_tol`` times the largest magnitude are treated as zero.
    """
    s = np.asarray(s, dtype=float)
    if np.abs(s - s.T).max() > 1e-10:
        raise ValueError("pseudo-inverse requires a symmetric superoperator")
    w, v = np.linalg.eigh((s + s.T) / 2)
    cutoff = rel_tol * np.abs(w).max() if w.size else 0.0
    keep = np.abs(w) > cutoff
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / w[keep]
    return (v * inv) @ v.T, int(keep.sum())


def traceless_projector(d: int) -> np.ndarray:
    """Superoperator projecting onto traceless operators: diag(0, 1, ..., 1)."""
    p = np.eye(d * d)
    p[0, 0] = 0.0
    return p


def _permutation_operator(d: int, perm: tuple[int, ...]) -> np.ndarray:
    """W_pi on (C^d)^{tensor k}: |i_1...i_k> -> |i_{pi(1)}...i_{pi(k)}>."""
    k = len(perm)
    idx = np.arange(d**k)
    digits = np.array(np.unravel_index(idx, (d,) * k))
    rows = np.ravel_multi_index(tuple(digits[p] for p in perm), (d,) * k)
    w = np.zeros((d**k, d**k))
    w[rows, idx] = 1.0
    return w


def sym_projector(d: int, copies: int) -> np.ndarray:
    """Projector onto the symmetric subspace of (C^d)^{tensor copies}, copies in {2, 3}."""
    if copies not in (2, 3):
        raise ValueError(f"unsupported number of copies: {copies}")
    perms = list(permutations(range(copies)))
    return sum(_permutation_operator(d, p) for p in perms) / len(perms)


def random_haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via Ginibre + QR with the R-diagonal phase fix."""
    return random_haar_unitaries(d, 1, rng)[0]


def random_haar_unitaries(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Batch of ``n`` independent Haar unitaries, shape (n, d, d)."""
    z = rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))
    q, r = np.linalg.qr(z / np.sqrt(2))
    diag = np.einsum("bii->bi", r)
    return q * (diag / np.abs(diag))[:, None, :]


def random_state(d: int, spectrum, rng: np.random.Generator) -> np.ndarray:
    """U diag(spectrum) U^dag with Haar U; purity is sum(spectrum^2) exactly."""
    spectrum = np.asarray(spectrum, dtype=float)
    if spectrum.shape != (d,):
        raise ValueError(f"spectrum must have length {d}")
    if spectrum.min() < -1e-15 or abs(spectrum.sum() - 1.0) > 1e-12:
        raise ValueError("spectrum must be nonnegative and sum to 1")
    u = random_haar_unitary(d, rng)
    rho = (u * spectrum) @ u.conj().T
    return (rho + rho.conj().T) / 2


def spectrum_with_purity(d: int, purity: float) -> np.ndarray:
    """The (q, (1-q)/(d-1), ...) spectrum with sum(s^2) = purity, 1/d <= purity <= 1."""
    if not (1.0 / d - 1e-12 <= purity <= 1.0 + 1e-12):
        raise ValueError(f"purity {purity} outside [1/{d}, 1]")
    q = (1.0 + np.sqrt(max(0.0, (d - 1) * (d * purity - 1.0)))) / d
    rest = (1.0 - q) / (d - 1)
    return np.array([q] + [rest] * (d - 1))


def spawn_rngs(seed: int, n: int) -> list[np.random.Generator]:
    """Independent generators derived from a root seed (for parallel consumers)."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]
