"""Frame superoperators and dual-frame estimators.

A POVM viewed as a frame in Herm(C^d) carries a family of frame
superoperators F_alpha = sum_b P(mu_b)/alpha_b for positive weights alpha_b;
the plain (alpha = 1), prior-rescaled (alpha_b = <mu_b, rho>), and canonical
(alpha_b = tr(mu_b)/d) members each generate an unbiased estimator
mu~_b = F_alpha^{-1}(mu_b)/alpha_b. The canonical choice minimizes the
variance averaged over unitarily equivalent states; the prior-rescaled one
minimizes it at the prior. A brute-force constrained-least-squares oracle
reproduces the minimum-variance dual without going through these closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import (
    DEFAULT_PINV_RTOL,
    devectorize,
    hs_norm,
    require_density,
    require_hermitian,
    standard_herm_basis,
    vectorize,
)
from .povms import Povm

UNBIASEDNESS_TOL = 1e-8
PROB_FLOOR = 1e-12


class NotInformationallyCompleteError(ValueError):
    """Raised when a dual frame is requested for a POVM whose frame rank is below d^2."""


class DegeneratePriorError(ValueError):
    """Raised when some outcome has (near-)zero probability under the prior."""


def element_matrix(povm: Povm) -> np.ndarray:
    """Rows are the vectorized POVM elements, shape (n_outcomes, d^2), real."""
    basis = standard_herm_basis(povm.dim)
    flat = basis.elements.reshape(len(basis), -1).conj()
    return (povm.elements.reshape(povm.n_outcomes, -1) @ flat.T).real


@dataclass
class FrameOperator:
    """A frame superoperator with cached spectrum and pseudo-inverse."""

    povm: Povm
    kind: str                  # plain | rescaled | canonical | alpha
    alpha: np.ndarray          # the per-outcome rescaling weights
    matrix: np.ndarray         # (d^2, d^2) real symmetric PSD
    eigenvalues: np.ndarray = field(init=False)   # descending
    eigenvectors: np.ndarray = field(init=False)  # columns aligned with eigenvalues
    inverse: np.ndarray = field(init=False)       # pseudo-inverse
    rank: int = field(init=False)

    def __post_init__(self):
        m = (self.matrix + self.matrix.T) / 2
        w, v = np.linalg.eigh(m)
        order = np.argsort(w)[::-1]
        self.eigenvalues, self.eigenvectors = w[order], v[:, order]
        cutoff = DEFAULT_PINV_RTOL * max(self.eigenvalues[0], 0.0)
        keep = self.eigenvalues > cutoff
        inv = np.where(keep, 1.0, 0.0)
        inv[keep] = 1.0 / self.eigenvalues[keep]
        self.inverse = (self.eigenvectors * inv) @ self.eigenvectors.T
        self.rank = int(keep.sum())

    @property
    def dim(self) -> int:
        return self.povm.dim

    @property
    def is_informationally_complete(self) -> bool:
        return self.rank == self.dim**2

    @property
    def traceless_block(self) -> np.ndarray:
        """Pi_H0 F Pi_H0 in the standard basis: drop the first row and column."""
        return self.matrix[1:, 1:]

    def apply(self, x: np.ndarray) -> np.ndarray:
        basis = standard_herm_basis(self.dim)
        return devectorize(self.matrix @ vectorize(x, basis), basis)

    def apply_inverse(self, x: np.ndarray) -> np.ndarray:
        basis = standard_herm_basis(self.dim)
        return devectorize(self.inverse @ vectorize(x, basis), basis)


def _build_frame(povm: Povm, alpha: np.ndarray, kind: str) -> FrameOperator:
    v = element_matrix(povm)
    matrix = (v.T / alpha) @ v
    return FrameOperator(povm=povm, kind=kind, alpha=alpha, matrix=matrix)


def frame_superop(povm: Povm) -> FrameOperator:
    """Plain frame superoperator F = sum_b P(mu_b); IC iff rank d^2."""
    return _build_frame(povm, np.ones(povm.n_outcomes), "plain")


def rescaled_frame_superop(povm: Povm, prior: np.ndarray, prob_floor: float | None = None) -> FrameOperator:
    """F_rho = sum_b P(mu_b)/<mu_b, rho>; satisfies F_rho(rho) = I.

    Raises :class:`DegeneratePriorError` when an outcome probability falls
    below 1e-12 unless ``prob_floor`` is given, in which case probabilities
    are clamped from below (a documented deviation: zero-probability outcomes
    are otherwise rejected rather than silently dropped).
    """
    prior = require_density(prior)
    probs = povm.probabilities(prior)
    if prob_floor is not None:
        probs = np.clip(probs, prob_floor, None)
    elif probs.min() < PROB_FLOOR:
        raise DegeneratePriorError(
            f"outcome {int(probs.argmin())} has probability {probs.min():.3e} under the prior"
        )
    return _build_frame(povm, probs, "rescaled")


def canonical_frame_superop(povm: Povm) -> FrameOperator:
    """F_{I/d} = d sum_b P(mu_b)/tr(mu_b); its first row/column is d e_0."""
    traces = povm.traces()
    if traces.min() <= 1e-14:
        raise ValueError("canonical frame operator requires elements with positive trace")
    return _build_frame(povm, traces / povm.dim, "canonical")


def alpha_rescaled_frame_superop(povm: Povm, alpha) -> FrameOperator:
    """F_alpha = sum_b P(mu_b)/alpha_b for arbitrary positive weights."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (povm.n_outcomes,) or alpha.min() <= 0:
        raise ValueError("alpha must be one positive weight per outcome")
    return _build_frame(povm, alpha, "alpha")


@dataclass
class DualFrame:
    """A dual measurement frame, i.e. an unbiased single-outcome state estimator."""

    povm: Povm
    elements: np.ndarray       # (n_outcomes, d, d) Hermitian
    kind: str                  # canonical_dual | min_variance | canonical_estimator | alpha | custom
    support_restricted: bool = False   # True when built on a rank-deficient frame

    @property
    def dim(self) -> int:
        return self.povm.dim

    def values(self, observable: np.ndarray) -> np.ndarray:
        """Single-outcome estimator values o(b) = <O, mu~_b>."""
        observable = require_hermitian(observable, what="observable")
        return np.einsum("bij,ji->b", self.elements, observable).real


def _dual_from_frame(frame: FrameOperator, kind: str, *, allow_rank_deficient: bool = False) -> DualFrame:
    povm = frame.povm
    if not frame.is_informationally_complete and not allow_rank_deficient:
        raise NotInformationallyCompleteError(
            f"frame rank {frame.rank} < d^2 = {povm.dim**2}; the dual is not well-defined"
        )
    basis = standard_herm_basis(povm.dim)
    coeffs = (frame.inverse @ element_matrix(povm).T).T / frame.alpha[:, None]
    elements = np.tensordot(coeffs, basis.elements, axes=1)
    return DualFrame(
        povm=povm,
        elements=elements,
        kind=kind,
        support_restricted=not frame.is_informationally_complete,
    )


def canonical_dual(povm: Povm, allow_rank_deficient: bool = False) -> DualFrame:
    """Canonical dual mu*_b = F^{-1}(mu_b) of the plain frame.

    With ``allow_rank_deficient`` a support-restricted pseudo-dual is built for
    non-IC POVMs and flagged on the result; by default that case errors.
    """
    return _dual_from_frame(frame_superop(povm), "canonical_dual", allow_rank_deficient=allow_rank_deficient)


def min_variance_dual(povm: Povm, prior: np.ndarray, prob_floor: float | None = None) -> DualFrame:
    """Minimum-variance unbiased estimator at the prior: F_rho^{-1}(mu_b)/<mu_b, rho>."""
    return _dual_from_frame(rescaled_frame_superop(povm, prior, prob_floor), "min_variance")


def canonical_estimator(povm: Povm) -> DualFrame:
    """Minimum average-variance estimator d F_{I/d}^{-1}(mu_b)/tr(mu_b)."""
    return _dual_from_frame(canonical_frame_superop(povm), "canonical_estimator")


def alpha_dual(povm: Povm, alpha) -> DualFrame:
    """Unbiased estimator F_alpha^{-1}(mu_b)/alpha_b from an arbitrary rescaling."""
    return _dual_from_frame(alpha_rescaled_frame_superop(povm, alpha), "alpha")


def is_informationally_complete(povm: Povm) -> bool:
    return frame_superop(povm).is_informationally_complete


@dataclass
class TightnessReport:
    """Trace data of the canonical frame operator and the tightness verdict.

    ``a`` and ``b`` are tr and tr-of-square of the traceless block; ``a_full``
    and ``b_full`` are the same traces of the whole canonical operator (the
    two conventions differ by the identity eigenvalue d).
    """

    tight: bool
    a: float
    b: float
    a_full: float
    b_full: float

    def to_dict(self) -> dict:
        return {"tight": self.tight, "a": self.a, "b": self.b,
                "a_full": self.a_full, "b_full": self.b_full}


def is_tight(povm: Povm) -> TightnessReport:
    """Tight iff (d^2-1) tr(F~^2) = tr(F~)^2; for tight rank-1 frames a = d(d-1)."""
    frame = canonical_frame_superop(povm)
    block = frame.traceless_block
    a = float(np.trace(block))
    b = float(np.sum(block * block))
    a_full = float(np.trace(frame.matrix))
    b_full = float(np.sum(frame.matrix * frame.matrix))
    m = povm.dim**2 - 1
    tight = abs(m * b - a * a) <= 1e-9 * a * a
    return TightnessReport(tight=tight, a=a, b=b, a_full=a_full, b_full=b_full)


def estimator_bound(povm: Povm, dual: DualFrame, observable: np.ndarray) -> float:
    """Uniform bound ||O||_2 ||F^{-2}||_op^{1/2} on |<O, mu~_b>|, F the plain frame operator.

    Verifies that the dual's estimator values respect the bound; a violation
    raises RuntimeError.
    """
    frame = frame_superop(povm)
    if not frame.is_informationally_complete:
        raise NotInformationallyCompleteError("the boundedness chain requires an IC POVM")
    bound = hs_norm(observable) / frame.eigenvalues[-1]
    worst = float(np.abs(dual.values(observable)).max())
    if worst > bound + 1e-9:
        raise RuntimeError(f"estimator value {worst} exceeds bound {bound}")
    return bound


def dual_quadratic_cost(povm: Povm, dual: DualFrame, prior: np.ndarray) -> float:
    """The minimized quantity Delta^2 = sum_b <mu_b, rho> tr(mu~_b^2)."""
    probs = povm.probabilities(prior)
    sq = np.einsum("bij,bji->b", dual.elements, dual.elements).real
    return float(probs @ sq)


def _dual_null_space(povm: Povm) -> np.ndarray:
    """Orthonormal basis of {z : sum_b z_b mu_b = 0}, shape (n_outcomes, n_null)."""
    m = element_matrix(povm)
    _, s, vt = np.linalg.svd(m.T, full_matrices=True)
    tol = max(m.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    return vt[np.sum(s > tol):].T


def random_dual(povm: Povm, rng: np.random.Generator, scale: float = 1.0) -> DualFrame:
    """A random valid dual frame: the canonical dual plus a null-space perturbation."""
    base = canonical_dual(povm)
    null = _dual_null_space(povm)
    if null.shape[1] == 0:
        return DualFrame(povm=povm, elements=base.elements.copy(), kind="custom")
    basis = standard_herm_basis(povm.dim)
    coeffs = np.tensordot(base.elements, basis.elements.conj(), axes=([1, 2], [1, 2])).real
    coeffs += null @ (scale * rng.standard_normal((null.shape[1], povm.dim**2)))
    return DualFrame(povm=povm, elements=np.tensordot(coeffs, basis.elements, axes=1), kind="custom")


def brute_force_min_variance_oracle(
    povm: Povm,
    prior: np.ndarray,
    observable: np.ndarray | None = None,
) -> DualFrame:
    """Minimum-variance dual by affine-constrained least squares, avoiding the closed forms.

    State case: minimizes sum_b <mu_b, rho> tr(mu~_b^2) over all duals
    satisfying the linear unbiasedness constraints, column by column via an
    SVD least-norm solve. Observable case: minimizes
    sum_b <mu_b, rho> <O, mu~_b>^2 over the estimator values directly, then
    lifts the values to a valid dual. Intended for small instances.
    """
    prior = require_density(prior)
    m = element_matrix(povm)                      # (n, d^2)
    n, dsq = m.shape
    if n * dsq > 20000:
        raise ValueError("oracle is meant for small instances")
    probs = povm.probabilities(prior)
    if probs.min() < PROB_FLOOR:
        raise DegeneratePriorError("prior gives a zero-probability outcome")
    sqrt_p = np.sqrt(probs)
    design = m.T / sqrt_p                         # constraints in whitened variables
    basis = standard_herm_basis(povm.dim)

    if observable is None:
        coeffs = np.linalg.pinv(design) / sqrt_p[:, None]   # rows vec(mu~_b)
        if np.abs(m.T @ coeffs - np.eye(dsq)).max() > 1e-6:
            raise NotInformationallyCompleteError("unbiasedness constraints are infeasible")
        return DualFrame(povm=povm, elements=np.tensordot(coeffs, basis.elements, axes=1), kind="custom")

    o = vectorize(require_hermitian(observable, what="observable"), basis)
    z, *_ = np.linalg.lstsq(design, o, rcond=None)
    values = z / sqrt_p                           # minimizing estimator values
    if np.abs(m.T @ values - o).max() > 1e-6:
        raise NotInformationallyCompleteError("value constraints are infeasible")
    base = np.linalg.pinv(m.T)                    # any particular dual, rows vec
    correction = np.outer(values - base @ o, o) / float(o @ o)
    coeffs = base + correction
    return DualFrame(povm=povm, elements=np.tensordot(coeffs, basis.elements, axes=1), kind="custom")
