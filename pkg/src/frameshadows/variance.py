"""Exact, averaged, and bounded estimation variances.

Conventions: V = tr(O^2)/d - tr(O)^2/d^2 is the variance of the observable on
the maximally mixed state; averages over input states mean Haar conjugation of
a fixed spectrum, so they depend on the state only through its purity P.
Analytic formulas are used wherever the Haar integrals have closed forms;
Monte Carlo estimates appear only as a fallback for non-canonical duals and in
the test oracles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .operators import (
    hs_inner,
    random_state,
    require_density,
    require_hermitian,
    spectrum_with_purity,
    standard_herm_basis,
    vectorize,
)
from .povms import Povm
from .frames import (
    DualFrame,
    FrameOperator,
    NotInformationallyCompleteError,
    canonical_frame_superop,
    element_matrix,
)


def mixed_state_variance(observable: np.ndarray) -> float:
    """V = tr(O^2)/d - tr(O)^2/d^2."""
    d = observable.shape[0]
    tr = np.trace(observable).real
    tr2 = np.einsum("ij,ji->", observable, observable).real
    return tr2 / d - (tr / d) ** 2


@dataclass
class MseMatrix:
    """MSE superoperator C_rho = sum_b <mu_b, rho> P(mu~_b) - P(rho)."""

    matrix: np.ndarray
    povm: Povm
    dual: DualFrame
    rho: np.ndarray

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))


def mse_matrix(povm: Povm, dual: DualFrame, rho: np.ndarray) -> MseMatrix:
    rho = require_density(rho)
    basis = standard_herm_basis(povm.dim)
    dual_vecs = element_matrix_of_dual(dual)
    probs = povm.probabilities(rho)
    r = vectorize(rho, basis)
    matrix = (dual_vecs.T * probs) @ dual_vecs - np.outer(r, r)
    return MseMatrix(matrix=matrix, povm=povm, dual=dual, rho=rho)


def element_matrix_of_dual(dual: DualFrame) -> np.ndarray:
    """Rows are the vectorized dual elements, shape (n_outcomes, d^2)."""
    basis = standard_herm_basis(dual.dim)
    flat = basis.elements.reshape(len(basis), -1).conj()
    return (dual.elements.reshape(dual.elements.shape[0], -1) @ flat.T).real


def state_error(povm: Povm, dual: DualFrame, rho: np.ndarray) -> float:
    """Expected L2 state estimation error, tr(C_rho)."""
    return mse_matrix(povm, dual, rho).trace


def variance_exact(povm: Povm, dual: DualFrame, rho: np.ndarray, observable: np.ndarray) -> float:
    """Var[o|rho] = sum_b <mu_b, rho> <O, mu~_b>^2 - <O, rho>^2."""
    rho = require_density(rho)
    vals = dual.values(observable)
    probs = povm.probabilities(rho)
    return float(probs @ vals**2 - hs_inner(observable, rho) ** 2)


def variance_exact_batch(povm: Povm, dual: DualFrame, rhos: np.ndarray, observable: np.ndarray) -> np.ndarray:
    """Vectorized :func:`variance_exact` over a stack of states (m, d, d)."""
    vals = dual.values(observable)
    probs = np.einsum("bij,mji->mb", povm.elements, rhos).real
    means = np.einsum("ij,mji->m", np.asarray(observable, dtype=complex), rhos).real
    return probs @ vals**2 - means**2


def _traceless_inverse_form(frame: FrameOperator, observable: np.ndarray) -> float:
    """<O, F~^{-1}(O)> restricted to the traceless subspace."""
    block = frame.traceless_block
    o = vectorize(observable, standard_herm_basis(frame.dim))[1:]
    return float(o @ np.linalg.solve(block, o))


def traceless_eigenvalues(frame: FrameOperator) -> np.ndarray:
    """Eigenvalues of Pi_H0 F Pi_H0 on the traceless subspace, ascending."""
    return np.linalg.eigvalsh((frame.traceless_block + frame.traceless_block.T) / 2)


def variance_averaged(povm: Povm, observable: np.ndarray, purity: float) -> float:
    """Variance of the canonical estimator averaged over unitarily equivalent states.

    Equals <O, F~_{I/d}^{-1}(O)> - (dP-1)/(d^2-1) V, which for tight rank-1
    measurements reduces to V d (d^2+d-1-P)/(d^2-1) for every observable.
    """
    observable = require_hermitian(observable, what="observable")
    d = povm.dim
    if not (1.0 / d - 1e-12 <= purity <= 1.0 + 1e-12):
        raise ValueError(f"purity {purity} outside [1/{d}, 1]")
    frame = canonical_frame_superop(povm)
    if not frame.is_informationally_complete:
        raise NotInformationallyCompleteError("averaged variance requires an IC POVM")
    v = mixed_state_variance(observable)
    return _traceless_inverse_form(frame, observable) - (d * purity - 1.0) / (d * d - 1.0) * v


def averaged_second_moment(povm: Povm, dual: DualFrame, observable: np.ndarray) -> float:
    """sum_b <mu_b, I/d> <O, mu~_b>^2, the state-averaged second moment (= tr(A)/d).

    For the canonical estimator this equals <O, F_{I/d}^{-1}(O)>; subtracting
    beta = tr(O)^2/d^2 + (dP-1)/(d^2-1) V gives the exact state-averaged
    variance of any fixed dual, which is how estimator optimality is compared
    without Monte Carlo noise.
    """
    vals = dual.values(observable)
    return float(povm.traces() / povm.dim @ vals**2)


def beta_coefficient(observable: np.ndarray, purity: float, d: int) -> float:
    """Haar average of <O, rho>^2 at fixed purity: tr(O)^2/d^2 + (dP-1)/(d^2-1) V."""
    tr = np.trace(observable).real
    v = mixed_state_variance(observable)
    return (tr / d) ** 2 + (d * purity - 1.0) / (d * d - 1.0) * v


def variance_averaged_mc(
    povm: Povm,
    dual: DualFrame,
    observable: np.ndarray,
    purity: float,
    n_states: int,
    rng: np.random.Generator,
) -> float:
    """Monte Carlo state average of :func:`variance_exact` for arbitrary duals."""
    d = povm.dim
    spectrum = spectrum_with_purity(d, purity)
    rhos = np.stack([random_state(d, spectrum, rng) for _ in range(n_states)])
    return float(variance_exact_batch(povm, dual, rhos, observable).mean())


def variance_eig_bounds(povm: Povm, observable: np.ndarray) -> tuple[float, float]:
    """(Vd/lambda_+, Vd/lambda_-) bracketing <O, F~_{I/d}^{-1}(O)>."""
    frame = canonical_frame_superop(povm)
    lams = traceless_eigenvalues(frame)
    if lams[0] <= 1e-12:
        raise NotInformationallyCompleteError("lambda_- vanishes for a non-IC POVM")
    vd = mixed_state_variance(observable) * povm.dim
    return vd / lams[-1], vd / lams[0]


def lambda1_star(a: float, b: float, d: int) -> float:
    """Largest possible smallest eigenvalue of F~ given tr(F~) = a, tr(F~^2) = b."""
    m = d * d - 1
    if not (0.0 < b <= a * a * (1 + 1e-12) and a * a <= b * m * (1 + 1e-12)):
        raise ValueError(f"(a, b) = ({a}, {b}) infeasible for d = {d} (AM-GM)")
    gap = max(0.0, b * m - a * a)
    return a / m - np.sqrt((m - 1) * gap) / (m * (m - 1))


def worst_case_lower_bound(a: float, b: float, d: int, purity: float) -> float:
    """Lower bound on max_O averaged-variance / (Vd): 1/lambda_1* - (P - 1/d)/(d^2-1)."""
    lam = lambda1_star(a, b, d)
    return 1.0 / lam - (purity - 1.0 / d) / (d * d - 1.0)


def a_operator(povm: Povm, dual: DualFrame, observable: np.ndarray) -> np.ndarray:
    """A = sum_b <O, mu~_b>^2 mu_b, so that <A, rho> = Var[o|rho] + <O, rho>^2."""
    vals = dual.values(observable)
    return np.einsum("b,bij->ij", vals**2, povm.elements)


def variance_minmax(povm: Povm, dual: DualFrame, observable: np.ndarray) -> tuple[float, float]:
    """(lambda_min(A), lambda_max(A)): the range of <A, rho> over states."""
    a = a_operator(povm, dual, observable)
    lams = np.linalg.eigvalsh((a + a.conj().T) / 2)
    return float(lams[0]), float(lams[-1])


def shadow_norm_sq(povm: Povm, dual: DualFrame, observable: np.ndarray) -> float:
    """||A||_op, the state-maximized second moment of the observable estimator."""
    return variance_minmax(povm, dual, observable)[1]


def variance_3design(rho: np.ndarray, observable: np.ndarray, d: int) -> float:
    """Closed-form Var[o|rho] for tight rank-1 3-design POVMs with the canonical estimator."""
    rho = np.asarray(rho, dtype=complex)
    o = np.asarray(observable, dtype=complex)
    tr_o = np.trace(o).real
    tr_o2 = np.einsum("ij,ji->", o, o).real
    tr_rho_o = np.einsum("ij,ji->", rho, o).real
    tr_o2_rho = np.einsum("ij,jk,ki->", o, o, rho).real
    return (
        -(tr_o**2 + 2.0 * tr_o * tr_rho_o) / (d + 2)
        + (d + 1) / (d + 2) * (tr_o2 + 2.0 * tr_o2_rho)
        - tr_rho_o**2
    )


def variance_double_averaged(povm: Povm, observable: np.ndarray, purity: float) -> float:
    """Canonical-estimator variance averaged over both states and observables.

    Vd/(d^2-1) (tr F_{I/d}^{-1} - P); bounded below by the tight-frame value
    Vd (d^2+d-1-P)/(d^2-1).
    """
    frame = canonical_frame_superop(povm)
    if not frame.is_informationally_complete:
        raise NotInformationallyCompleteError("double average requires an IC POVM")
    d = povm.dim
    vd = mixed_state_variance(observable) * d
    tr_finv = float(np.sum(1.0 / frame.eigenvalues))
    return vd / (d * d - 1.0) * (tr_finv - purity)


def tight_general_error(d: int, avg_purity: float, purity: float) -> float:
    """Best average L2 error for tight IC POVMs whose elements have the given average purity."""
    if not (1.0 / d <= avg_purity <= 1.0):
        raise ValueError(f"element average purity {avg_purity} outside [1/{d}, 1]")
    denom = d * d * avg_purity - d
    if denom <= 0:
        raise ValueError("average purity 1/d makes the error diverge")
    return (d * d - 1.0) ** 2 / denom - (purity - 1.0 / d)


@dataclass
class VarianceReport:
    """All variance figures for one (POVM, dual, state-or-purity, observable) configuration."""

    dim: int
    dual_kind: str
    purity: float
    exact: float | None
    averaged: float
    averaged_method: str                 # "analytic" (canonical estimator) or "monte_carlo"
    double_averaged: float | None
    bounds: dict[str, float]
    context: dict[str, Any]

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "dual_kind": self.dual_kind,
            "purity": self.purity,
            "exact": self.exact,
            "averaged": self.averaged,
            "averaged_method": self.averaged_method,
            "double_averaged": self.double_averaged,
            "bounds": self.bounds,
            "context": self.context,
        }


def build_variance_report(
    povm: Povm,
    dual: DualFrame,
    observable: np.ndarray,
    purity: float,
    rho: np.ndarray | None = None,
    mc_states: int = 2000,
    rng: np.random.Generator | None = None,
    context: dict[str, Any] | None = None,
) -> VarianceReport:
    """Assemble exact/averaged variances and every bound for one configuration."""
    d = povm.dim
    observable = require_hermitian(observable, what="observable")
    exact = variance_exact(povm, dual, rho, observable) if rho is not None else None

    if dual.kind == "canonical_estimator":
        averaged = variance_averaged(povm, observable, purity)
        method = "analytic"
    else:
        averaged = variance_averaged_mc(
            povm, dual, observable, purity, mc_states, rng or np.random.default_rng(0)
        )
        method = "monte_carlo"

    frame = canonical_frame_superop(povm)
    lams = traceless_eigenvalues(frame)
    v = mixed_state_variance(observable)
    vd = v * d
    beta_term = (d * purity - 1.0) / (d * d - 1.0) * v
    a_tr = float(lams.sum())
    b_tr = float((lams**2).sum())
    a_min, a_max = variance_minmax(povm, dual, observable)
    bounds = {
        "eig_lower": vd / lams[-1] - beta_term,
        "eig_upper": vd / lams[0] - beta_term,
        "condition_number": float(lams[-1] / lams[0]),
        "lambda1_star_lower": vd * worst_case_lower_bound(a_tr, b_tr, d, purity),
        "A_min": a_min,
        "A_max": a_max,
        "shadow_norm_sq": a_max,
    }
    return VarianceReport(
        dim=d,
        dual_kind=dual.kind,
        purity=purity,
        exact=exact,
        averaged=averaged,
        averaged_method=method,
        double_averaged=variance_double_averaged(povm, observable, purity),
        bounds=bounds,
        context=context or {},
    )
