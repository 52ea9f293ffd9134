"""POVM construction and structure checks.

Measurements are finite families of PSD operators summing to the identity,
optionally carrying a rank-1 weighted-state form mu_b = w_b |psi_b><psi_b|.
Besides constructors for the measurement families used throughout (projective
bases, Haar-random rank-1 POVMs, mutually unbiased bases in prime dimension,
and three single-qubit toy fixtures), the module tests whether a rank-1 POVM
forms a weighted projective 2- or 3-design, and provides a sampler for the
covariant measurement (Haar unitary followed by a computational-basis read),
which has a continuum of outcomes and is therefore never materialized.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .operators import (
    random_haar_unitary,
    require_density,
    sym_projector,
)

PSD_TOL = 1e-10
COMPLETENESS_TOL = 1e-9
RANK1_TOL = 1e-10
DESIGN_TOL = 1e-9

_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class PovmValidationError(ValueError):
    """A POVM violates positivity, completeness, or its declared rank-1 form."""


@dataclass
class Povm:
    """Outcome-indexed measurement: elements (n, d, d); optional rank-1 form."""

    elements: np.ndarray
    weights: np.ndarray | None = None   # (n,) positive, present iff rank-1 form given
    states: np.ndarray | None = None    # (n, d) unit vectors, paired with weights

    def __post_init__(self):
        self.elements = np.asarray(self.elements, dtype=complex)
        if self.elements.ndim != 3 or self.elements.shape[1] != self.elements.shape[2]:
            raise ValueError(f"elements must have shape (n, d, d), got {self.elements.shape}")
        if (self.weights is None) != (self.states is None):
            raise ValueError("weights and states must be given together")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)
            self.states = np.asarray(self.states, dtype=complex)

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.elements.shape[0]

    @property
    def has_rank1_form(self) -> bool:
        return self.weights is not None

    def probabilities(self, rho: np.ndarray) -> np.ndarray:
        """Outcome probabilities <mu_b, rho>."""
        return np.einsum("bij,ji->b", self.elements, np.asarray(rho, dtype=complex)).real

    def traces(self) -> np.ndarray:
        return np.einsum("bii->b", self.elements).real


@dataclass
class PovmValidation:
    """Defect magnitudes from :func:`validate`; ``passed`` applies the module tolerances."""

    hermiticity_defect: float
    psd_defect: float
    completeness_defect: float
    rank1_defect: float | None
    weight_sum_defect: float | None
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = (
            self.hermiticity_defect <= 1e-12
            and self.psd_defect <= PSD_TOL
            and self.completeness_defect <= COMPLETENESS_TOL
            and (self.rank1_defect is None or self.rank1_defect <= RANK1_TOL)
            and (self.weight_sum_defect is None or self.weight_sum_defect <= COMPLETENESS_TOL)
        )

    def to_dict(self) -> dict:
        return {
            "hermiticity_defect": self.hermiticity_defect,
            "psd_defect": self.psd_defect,
            "completeness_defect": self.completeness_defect,
            "rank1_defect": self.rank1_defect,
            "weight_sum_defect": self.weight_sum_defect,
            "passed": self.passed,
        }


def validate(povm: Povm) -> PovmValidation:
    """Report PSD, completeness, and rank-1 consistency defects."""
    els = povm.elements
    herm = float(np.abs(els - els.conj().transpose(0, 2, 1)).max())
    min_ev = min(np.linalg.eigvalsh((m + m.conj().T) / 2)[0] for m in els)
    psd = float(max(0.0, -min_ev))
    completeness = float(np.abs(els.sum(axis=0) - np.eye(povm.dim)).max())
    rank1 = wsum = None
    if povm.has_rank1_form:
        rebuilt = povm.weights[:, None, None] * np.einsum("bi,bj->bij", povm.states, povm.states.conj())
        rank1 = float(np.abs(els - rebuilt).max())
        wsum = float(abs(povm.weights.sum() - povm.dim))
    return PovmValidation(herm, psd, completeness, rank1, wsum)


def require_valid(povm: Povm) -> Povm:
    report = validate(povm)
    if not report.passed:
        raise PovmValidationError(f"invalid POVM: {report.to_dict()}")
    return povm


def _rank1_povm(states: np.ndarray, weights: np.ndarray) -> Povm:
    elements = weights[:, None, None] * np.einsum("bi,bj->bij", states, states.conj())
    return Povm(elements=elements, weights=weights, states=states)


def projective(basis_vectors) -> Povm:
    """Projective measurement onto an orthonormal basis, with unit weights."""
    vecs = np.asarray(basis_vectors, dtype=complex)
    d = vecs.shape[1]
    if vecs.shape != (d, d):
        raise ValueError("need exactly d orthonormal vectors of length d")
    gram = vecs @ vecs.conj().T
    if np.abs(gram - np.eye(d)).max() > 1e-10:
        raise ValueError("basis vectors are not orthonormal")
    return _rank1_povm(vecs, np.ones(d))


def random_rank1(d: int, n_outcomes: int, rng: np.random.Generator) -> Povm:
    """Rank-1 POVM mu_b = V^dag P_b V from a Haar-random (n_outcomes x d) isometry."""
    if n_outcomes < d:
        raise ValueError(f"need at least d = {d} outcomes, got {n_outcomes}")
    isometry = random_haar_unitary(n_outcomes, rng)[:, :d]
    states_raw = isometry.conj()          # mu_b = |v_b><v_b| with v_b = conj(V[b, :])
    weights = np.einsum("bi,bi->b", states_raw, states_raw.conj()).real
    states = states_raw / np.sqrt(weights)[:, None]
    return _rank1_povm(states, weights)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % k for k in range(2, int(n**0.5) + 1))


def mub_bases(d: int) -> np.ndarray:
    """d+1 mutually unbiased bases in prime dimension, shape (d+1, d, d) (basis, vector, component).

    d = 2 uses the Z/X/Y eigenbases; odd primes use the quadratic-phase
    construction over Z_d, whose inter-basis overlaps are Gauss sums of
    magnitude 1/sqrt(d).
    """
    if not _is_prime(d):
        raise ValueError(f"MUB construction requires prime dimension, got {d}")
    if d == 2:
        s = 1 / np.sqrt(2)
        return np.array([
            [[1, 0], [0, 1]],
            [[s, s], [s, -s]],
            [[s, 1j * s], [s, -1j * s]],
        ], dtype=complex)
    j = np.arange(d)
    bases = [np.eye(d, dtype=complex)]
    omega = np.exp(2j * np.pi / d)
    for a in range(d):
        phases = omega ** np.array([(a * j * j + m * j) % d for m in range(d)])
        bases.append(phases / np.sqrt(d))
    return np.array(bases)


def mub_povm(d: int) -> Povm:
    """Tight rank-1 IC-POVM from all d+1 MUBs, each vector weighted 1/(d+1)."""
    bases = mub_bases(d)
    states = bases.reshape(-1, d)
    weights = np.full(states.shape[0], d / states.shape[0])
    return _rank1_povm(states, weights)


def toy_qubit_povm(kind: str) -> Povm:
    """Three single-qubit reference measurements used as golden fixtures.

    ``projective``: {P0, P1}. ``non-ic-4``: {P0, P1, P+, P-}/2, rank 3 in
    operator space, hence not informationally complete. ``ic-4``: the minimal
    IC measurement {P0/3, P+/3, PR/3, I - rest} with |R> = (|0> + i|1>)/sqrt(2).
    """
    kind = kind.replace("_", "-")
    s = 1 / np.sqrt(2)
    if kind == "projective":
        return projective(np.eye(2, dtype=complex))
    if kind == "non-ic-4":
        states = np.array([[1, 0], [0, 1], [s, s], [s, -s]], dtype=complex)
        return _rank1_povm(states, np.full(4, 0.5))
    if kind == "ic-4":
        states = np.array([[1, 0], [s, s], [s, 1j * s]], dtype=complex)
        first3 = np.einsum("bi,bj->bij", states, states.conj()) / 3
        last = np.eye(2, dtype=complex) - first3.sum(axis=0)
        return Povm(elements=np.concatenate([first3, last[None]], axis=0))
    raise ValueError(f"unknown toy POVM kind: {kind!r}")


def _pair_moment(povm: Povm, copies: int) -> np.ndarray:
    states = povm.states
    phi = states[:, :, None]
    for _ in range(copies - 1):
        phi = (phi[:, :, :, None] * states[:, None, None, :]).reshape(states.shape[0], -1, 1)
    phi = phi[:, :, 0]
    return np.einsum("b,bi,bj->ij", povm.weights, phi, phi.conj())


def _design_residual(povm: Povm, copies: int) -> float:
    if not povm.has_rank1_form:
        raise ValueError("design check requires a rank-1 weighted-state form")
    d = povm.dim
    from math import comb

    target = d * sym_projector(d, copies) / comb(d + copies - 1, copies)
    return float(np.abs(_pair_moment(povm, copies) - target).max())


def is_2design(povm: Povm) -> tuple[bool, float]:
    """Whether sum_b w_b P(psi_b)^{x2} equals d Pi_sym / C(d+1, 2); returns (flag, residual)."""
    res = _design_residual(povm, 2)
    return res <= DESIGN_TOL, res


def is_3design(povm: Povm) -> tuple[bool, float]:
    """Same check against the symmetric projector on three copies."""
    res = _design_residual(povm, 3)
    return res <= DESIGN_TOL, res


class CovariantDraw(NamedTuple):
    element: np.ndarray   # U^dag |b><b| U, unit trace
    outcome: int
    unitary: np.ndarray


@dataclass
class CovariantSampler:
    """Sampler for the covariant measurement mu_{U,b} = U^dag |b><b| U.

    Holds mutable RNG state; confine one sampler to one thread and derive
    per-worker seeds for parallel use.
    """

    dim: int
    rng: np.random.Generator

    def draw(self, rho: np.ndarray, unitary: np.ndarray | None = None) -> CovariantDraw:
        """Sample U ~ Haar (unless given) then b with probability <b|U rho U^dag|b>."""
        rho = require_density(rho)
        u = random_haar_unitary(self.dim, self.rng) if unitary is None else np.asarray(unitary)
        probs = np.einsum("bi,ij,bj->b", u, rho, u.conj()).real
        probs = np.clip(probs, 0.0, None)
        b = int(np.searchsorted(np.cumsum(probs / probs.sum()), self.rng.random()))
        b = min(b, self.dim - 1)
        row = u[b]
        element = np.outer(row.conj(), row)
        return CovariantDraw(element=element, outcome=b, unitary=u)
