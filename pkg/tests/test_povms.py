import numpy as np
import pytest

from frameshadows.operators import random_haar_unitary
from frameshadows.povms import (
    CovariantSampler,
    Povm,
    is_2design,
    is_3design,
    mub_bases,
    mub_povm,
    projective,
    random_rank1,
    require_valid,
    toy_qubit_povm,
    validate,
)

from conftest import I2, P0, P1, PPLUS, PMINUS


def test_validate_projective_passes():
    assert validate(toy_qubit_povm("projective")).passed


def test_validate_incomplete_fails():
    report = validate(Povm(elements=np.array([P0, P0])))
    assert not report.passed
    assert report.completeness_defect > 0.5


def test_validate_ic4_passes():
    assert validate(toy_qubit_povm("ic-4")).passed


def test_projective_constructor():
    povm = projective(np.eye(2, dtype=complex))
    assert np.abs(povm.elements[0] - P0).max() < 1e-15
    assert np.abs(povm.elements[1] - P1).max() < 1e-15
    x_basis = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    povm_x = projective(x_basis)
    assert np.abs(povm_x.elements[0] - PPLUS).max() < 1e-12
    assert np.abs(povm_x.elements[1] - PMINUS).max() < 1e-12
    with pytest.raises(ValueError):
        projective(np.array([[1, 0], [1, 0]], dtype=complex))


@pytest.mark.parametrize("d", [2, 3, 5, 7])
def test_constructors_validate_many_seeds(d):
    for seed in range(50):
        rng = np.random.default_rng(seed)
        require_valid(random_rank1(d, d * d + 2, rng))
        require_valid(projective(random_haar_unitary(d, rng).T))
    require_valid(mub_povm(d))


def test_random_rank1_trace_sum(rng):
    povm = random_rank1(5, 100, rng)
    assert povm.traces().sum() == pytest.approx(5.0, abs=1e-9)
    assert povm.n_outcomes == 100
    with pytest.raises(ValueError):
        random_rank1(3, 2, rng)


def test_random_rank1_fig1_shapes(rng):
    povm = random_rank1(2, 10, rng)
    assert povm.n_outcomes == 10 and povm.dim == 2
    assert validate(povm).passed


@pytest.mark.parametrize("d", [2, 3, 5, 7, 11, 13])
def test_mub_overlaps(d):
    bases = mub_bases(d)
    assert bases.shape == (d + 1, d, d)
    flat = bases.reshape(-1, d)
    gram = np.abs(flat @ flat.conj().T) ** 2
    for a in range(d + 1):
        for b in range(d + 1):
            block = gram[a * d:(a + 1) * d, b * d:(b + 1) * d]
            target = np.eye(d) if a == b else np.full((d, d), 1.0 / d)
            assert np.abs(block - target).max() < 1e-10


def test_mub_povm_qubit():
    povm = mub_povm(2)
    assert povm.n_outcomes == 6
    assert np.allclose(povm.weights, 1 / 3)
    assert validate(povm).passed


def test_mub_requires_prime():
    for bad in (4, 6, 9, 1):
        with pytest.raises(ValueError):
            mub_povm(bad)


@pytest.mark.parametrize("d", [2, 3, 5, 7, 11, 13])
def test_mub_is_2design(d):
    flag, residual = is_2design(mub_povm(d))
    assert flag and residual < 1e-10


def test_projective_not_2design():
    flag, residual = is_2design(toy_qubit_povm("projective"))
    assert not flag
    assert residual == pytest.approx(1 / 3, abs=1e-12)


def test_random_rank1_not_2design(rng):
    flag, residual = is_2design(random_rank1(2, 10, rng))
    assert not flag and residual > 1e-3


def test_3design_flags():
    assert is_3design(mub_povm(2))[0]
    assert not is_3design(mub_povm(3))[0]
    assert not is_3design(toy_qubit_povm("projective"))[0]


def test_design_check_requires_rank1_form():
    with pytest.raises(ValueError):
        is_2design(toy_qubit_povm("ic-4"))


def test_toy_non_ic_traces():
    povm = toy_qubit_povm("non-ic-4")
    assert np.allclose(povm.traces(), 0.5)
    assert validate(povm).passed


def test_toy_ic4_last_element():
    povm = toy_qubit_povm("ic-4")
    rest = povm.elements[:3].sum(axis=0)
    assert np.abs(povm.elements[3] - (I2 - rest)).max() < 1e-15
    assert np.linalg.eigvalsh(povm.elements[3])[0] > 0  # strictly PSD here
    with pytest.raises(ValueError):
        toy_qubit_povm("nope")


def test_covariant_element_trace(rng):
    sampler = CovariantSampler(dim=3, rng=rng)
    rho = np.eye(3, dtype=complex) / 3
    for _ in range(20):
        draw = sampler.draw(rho)
        assert np.trace(draw.element).real == pytest.approx(1.0, abs=1e-10)
        assert np.abs(draw.element - draw.element.conj().T).max() < 1e-12


def test_covariant_rejects_bad_state(rng):
    sampler = CovariantSampler(dim=2, rng=rng)
    with pytest.raises(ValueError):
        sampler.draw(np.array([[2, 0], [0, 0]], dtype=complex))


def test_covariant_fixed_unitary_frequencies():
    # conditional outcome frequencies reproduce <b|U rho U^dag|b> within 5 SE
    rng = np.random.default_rng(321)
    d = 3
    sampler = CovariantSampler(dim=d, rng=rng)
    u = random_haar_unitary(d, np.random.default_rng(7))
    rho = np.diag([0.6, 0.3, 0.1]).astype(complex)
    n = 100_000
    counts = np.zeros(d)
    for _ in range(n):
        counts[sampler.draw(rho, unitary=u).outcome] += 1
    expected = np.einsum("bi,ij,bj->b", u, rho, u.conj()).real
    freq = counts / n
    se = np.sqrt(expected * (1 - expected) / n)
    assert np.all(np.abs(freq - expected) <= 5 * se)


def test_covariant_overlap_moment():
    # E[<mu_{U,b}, P0>] = 2/(d+1) for rho = P0 at d = 2
    rng = np.random.default_rng(99)
    sampler = CovariantSampler(dim=2, rng=rng)
    n = 20_000
    vals = np.empty(n)
    for k in range(n):
        draw = sampler.draw(P0)
        vals[k] = np.einsum("ij,ji->", draw.element, P0).real
    se = vals.std(ddof=1) / np.sqrt(n)
    assert abs(vals.mean() - 2 / 3) < 5 * se


def test_covariant_mixed_state_uniform_outcomes():
    rng = np.random.default_rng(5)
    d = 2
    sampler = CovariantSampler(dim=d, rng=rng)
    rho = np.eye(d, dtype=complex) / d
    n = 20_000
    counts = np.zeros(d)
    for _ in range(n):
        counts[sampler.draw(rho).outcome] += 1
    assert np.abs(counts / n - 1 / d).max() < 5 * np.sqrt(0.25 / n)
