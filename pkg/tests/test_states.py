import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_state, spectrum
from renyi_cstar.errors import BlockStructureViolated, NotHermitian, NotPositive, TraceNotOne
from renyi_cstar.states import (
    AlgebraModel,
    block_weights,
    direct_sum,
    majorizes,
    maximally_mixed,
    orthogonal_states,
    pure_state,
    random_density_matrix,
    schatten,
    tensor,
    validate_state,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
KET_PLUS = np.array([1, 1]) / np.sqrt(2)


# ---------------------------------------------------------------- algebra


def test_algebra_dimensions():
    alg = AlgebraModel((2, 3))
    assert alg.total_dim == 5 and alg.n_blocks == 2 and alg.dimension == 13
    assert len(list(alg.matrix_units())) == 13


@pytest.mark.parametrize("dims", [(), (0,), (2, -1)])
def test_algebra_rejects_bad_blocks(dims):
    with pytest.raises(ValueError):
        AlgebraModel(dims)


def test_coords_roundtrip():
    alg = AlgebraModel((1, 2))
    x = np.zeros((3, 3), dtype=complex)
    x[0, 0], x[1:, 1:] = 2.0, [[1, 1j], [-1j, 3]]
    assert np.allclose(alg.element(alg.coords(x)), x)
    assert alg.is_element(x)
    x[0, 1] = 1.0
    assert not alg.is_element(x)


# ---------------------------------------------------------------- validation


def test_validate_half_identity():
    rho = validate_state(np.eye(2) / 2)
    assert np.allclose(rho.eigenvalues, [0.5, 0.5])


def test_validate_diag():
    rho = validate_state(np.diag([0.7, 0.3]))
    assert rho.rank == 2 and rho.is_faithful()


def test_trace_not_one():
    with pytest.raises(TraceNotOne):
        validate_state(np.diag([1.0, 0.1]))


def test_not_hermitian():
    with pytest.raises(NotHermitian):
        validate_state(np.array([[0.5, 0.2], [0.0, 0.5]]))


def test_not_positive():
    with pytest.raises(NotPositive):
        validate_state(np.diag([1.2, -0.2]))


def test_block_structure():
    m = np.full((2, 2), 0.25) + np.eye(2) * 0.25
    with pytest.raises(BlockStructureViolated):
        validate_state(m, AlgebraModel((1, 1)))


def test_symmetrizes_tiny_asymmetry():
    m = np.array([[0.5, 0.1 + 1e-12], [0.1, 0.5]])
    rho = validate_state(m)
    assert np.allclose(rho.matrix, rho.matrix.conj().T, atol=0)


def test_validated_matrix_is_read_only():
    rho = validate_state(np.eye(2) / 2)
    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 1.0


# ---------------------------------------------------------------- schatten


def test_schatten_reorders():
    sd = schatten(validate_state(np.diag([0.3, 0.7])))
    assert np.allclose(sd.eigenvalues, [0.7, 0.3])


def test_schatten_bloch_vector():
    # oracle: eigenvalues (1 +- r) / 2 with r = 0.6
    sd = schatten(validate_state(0.5 * (np.eye(2) + 0.6 * SX)))
    assert np.allclose(sd.eigenvalues, [0.8, 0.2], atol=1e-12)


def test_schatten_pure():
    sd = schatten(pure_state(KET_PLUS))
    assert np.allclose(sd.eigenvalues, [1.0, 0.0], atol=1e-12)
    assert sd.rank == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_schatten_roundtrip(n, seed):
    m = random_state(np.random.default_rng(seed), n)
    rho = validate_state(m)
    sd = schatten(rho)
    assert np.max(np.abs(sd.reconstruct() - m)) <= 1e-9
    assert np.all(np.diff(sd.eigenvalues) <= 0)
    v = sd.eigenvectors
    assert np.max(np.abs(v.conj().T @ v - np.eye(n))) <= 1e-10
    assert np.allclose(sd.eigenvalues, spectrum(m), atol=1e-10)


def test_schatten_clamps_and_keeps_basis():
    rho = validate_state(np.diag([1.0 - 1e-14, 1e-14, 0.0]))
    sd = schatten(rho)
    assert list(sd.eigenvalues[1:]) == [0.0, 0.0]
    assert sd.eigenvectors.shape == (3, 3)


def test_schatten_respects_blocks():
    alg = AlgebraModel((2, 1))
    rho = random_density_matrix(alg, np.random.default_rng(5))
    sd = schatten(rho)
    for k, b in enumerate(sd.blocks):
        outside = np.ones(3, bool)
        outside[alg.block_slice(b)] = False
        assert np.all(sd.eigenvectors[outside, k] == 0)


# ---------------------------------------------------------------- majorization


def test_majorizes_examples():
    assert majorizes([0.7, 0.3], [0.5, 0.5])
    assert not majorizes([0.5, 0.5], [0.7, 0.3])
    p = [0.6, 0.3, 0.1]
    assert majorizes(p, p)


def test_majorizes_pads_shorter():
    assert majorizes([1.0], [0.5, 0.5])
    assert not majorizes([0.5, 0.5], [1.0])


# ---------------------------------------------------------------- orthogonality


def test_orthogonal_examples():
    d0, d1 = validate_state(np.diag([1.0, 0.0])), validate_state(np.diag([0.0, 1.0]))
    assert orthogonal_states(d0, d1) and orthogonal_states(d1, d0)
    assert not orthogonal_states(pure_state(KET_PLUS), d0)
    faithful = validate_state(np.diag([0.6, 0.4]))
    assert not orthogonal_states(faithful, faithful)


def test_orthogonal_pure_states_have_zero_overlap():
    rng = np.random.default_rng(11)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    a, b = pure_state(q[:, 0]), pure_state(q[:, 1])
    assert orthogonal_states(a, b)
    assert abs(np.vdot(q[:, 0], q[:, 1])) <= 1e-9


# ---------------------------------------------------------------- tensor, sums


def test_tensor_examples():
    half = maximally_mixed(AlgebraModel.full(2))
    assert np.allclose(tensor(half, half).matrix, np.eye(4) / 4)
    assert tensor(pure_state([1, 0]), pure_state(KET_PLUS)).is_pure()
    t = tensor(validate_state(np.diag([0.7, 0.3])), validate_state(np.diag([0.5, 0.5])))
    assert np.allclose(np.diag(t.matrix).real, [0.35, 0.35, 0.15, 0.15])


def test_tensor_rejects_blocks():
    rho = maximally_mixed(AlgebraModel((1, 1)))
    with pytest.raises(ValueError):
        tensor(rho, rho)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_tensor_spectrum_is_outer_product(n1, n2, seed):
    rng = np.random.default_rng(seed)
    a, b = validate_state(random_state(rng, n1)), validate_state(random_state(rng, n2))
    got = np.sort(tensor(a, b).eigenvalues)
    want = np.sort(np.outer(a.eigenvalues, b.eigenvalues).ravel())
    assert np.allclose(got, want, atol=1e-9)


def test_block_weights():
    assert np.allclose(block_weights(validate_state(np.eye(2) / 2)).probs, [1.0])
    equal = maximally_mixed(AlgebraModel((2, 2)))
    assert np.allclose(block_weights(equal).probs, [0.5, 0.5])
    rho = direct_sum([maximally_mixed(AlgebraModel.full(2)), pure_state([1, 0])], [0.25, 0.75])
    assert rho.algebra.block_dims == (2, 2)
    assert np.allclose(block_weights(rho).probs, [0.25, 0.75])


def test_random_density_matrix_rank():
    alg = AlgebraModel((2, 2))
    rho = random_density_matrix(alg, np.random.default_rng(0), rank=2)
    assert rho.rank == 2
