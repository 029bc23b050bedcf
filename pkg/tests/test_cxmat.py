import numpy as np
import pytest

from covertbeam import cxmat
from covertbeam.exceptions import InvalidInputError

from helpers import rand_herm


def test_outer_basis_vector():
    assert np.allclose(cxmat.outer(np.array([1.0, 0.0])), [[1, 0], [0, 0]])


def test_outer_zero():
    assert np.allclose(cxmat.outer(np.zeros(2)), np.zeros((2, 2)))


def test_outer_hand_oracle():
    # v = (1, i)/sqrt(2): conjugate outer product worked by hand.
    v = np.array([1.0, 1.0j]) / np.sqrt(2.0)
    expected = np.array([[0.5, -0.5j], [0.5j, 0.5]])
    got = cxmat.outer(v)
    assert np.allclose(got, expected, atol=1e-15)
    assert abs(np.trace(got) - 1.0) < 1e-15


def test_outer_psd_and_trace_property():
    rng = np.random.default_rng(7)
    for _ in range(50):
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        m = cxmat.outer(v)
        vals = np.linalg.eigvalsh(m)
        assert vals.min() >= -1e-12 * max(1.0, vals.max())
        assert abs(np.trace(m).real - np.linalg.norm(v) ** 2) < 1e-10


def test_eig_identity():
    vals, vecs = cxmat.eig_hermitian(np.eye(3))
    assert np.allclose(vals, [1, 1, 1])
    assert np.allclose(vecs @ vecs.conj().T, np.eye(3), atol=1e-12)


def test_eig_diag_sorted_descending():
    vals, vecs = cxmat.eig_hermitian(np.diag([1.0, 3.0]))
    assert np.allclose(vals, [3.0, 1.0])
    assert abs(abs(vecs[1, 0]) - 1.0) < 1e-12  # eigenvector for 3 is e2


def test_eig_reconstruction_oracle():
    rng = np.random.default_rng(3)
    for _ in range(20):
        m = rand_herm(rng, 5)
        vals, vecs = cxmat.eig_hermitian(m)
        recon = (vecs * vals) @ vecs.conj().T
        assert np.linalg.norm(recon - m) <= 1e-9 * max(1.0, np.linalg.norm(m))
        assert np.linalg.norm(vecs.conj().T @ vecs - np.eye(5)) < 1e-10
        assert np.all(np.diff(vals) <= 1e-12)


def test_eig_rejects_non_hermitian():
    bad = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(InvalidInputError):
        cxmat.eig_hermitian(bad)


def test_null_projector_single_basis_column():
    p = cxmat.null_projector([np.array([1.0, 0, 0])])
    assert np.allclose(p, np.diag([0.0, 1.0, 1.0]), atol=1e-14)


def test_null_projector_two_basis_columns():
    p = cxmat.null_projector([np.eye(3)[0], np.eye(3)[1]])
    assert np.allclose(p, np.diag([0.0, 0.0, 1.0]), atol=1e-14)


def test_null_projector_random_columns_residual_oracle():
    rng = np.random.default_rng(11)
    for _ in range(20):
        cols = [rng.standard_normal(5) + 1j * rng.standard_normal(5) for _ in range(2)]
        p = cxmat.null_projector(cols)
        assert np.linalg.norm(p @ p - p) < 1e-10
        assert np.linalg.norm(p - p.conj().T) < 1e-12
        for c in cols:
            assert np.linalg.norm(p @ c) < 1e-10 * np.linalg.norm(c)


def test_null_projector_handles_dependent_columns():
    rng = np.random.default_rng(5)
    c = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    p = cxmat.null_projector([c, 2.0 * c, np.zeros(4)])
    # span is one-dimensional: projector has rank 3
    assert abs(np.trace(p).real - 3.0) < 1e-10
    assert np.linalg.norm(p @ c) < 1e-10 * np.linalg.norm(c)


def test_null_projector_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        cxmat.null_projector([np.ones(3), np.ones(4)])
    with pytest.raises(InvalidInputError):
        cxmat.null_projector([])


def test_real_embed_real_matrix_is_block_diagonal():
    m = np.array([[2.0, 1.0], [1.0, 3.0]])
    e = cxmat.real_embed(m)
    assert np.allclose(e, np.block([[m, np.zeros((2, 2))], [np.zeros((2, 2)), m]]))


def test_real_embed_pauli_like_eigenvalue_oracle():
    m = np.array([[0.0, 1.0j], [-1.0j, 0.0]])
    e = cxmat.real_embed(m)
    assert np.allclose(np.sort(np.linalg.eigvalsh(e)), [-1.0, -1.0, 1.0, 1.0], atol=1e-12)


def test_real_embed_identity():
    assert np.allclose(cxmat.real_embed(np.eye(2)), np.eye(4))


def test_real_embed_preserves_psd_sign():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        m = rand_herm(rng, int(rng.integers(2, 6)))
        lam = float(np.linalg.eigvalsh(m).min())
        lam_e = float(np.linalg.eigvalsh(cxmat.real_embed(m)).min())
        assert abs(lam - lam_e) < 1e-10 * max(1.0, abs(lam))


def test_real_extract_roundtrip():
    rng = np.random.default_rng(9)
    m = rand_herm(rng, 4)
    assert np.allclose(cxmat.real_extract(cxmat.real_embed(m)), m, atol=1e-14)
    with pytest.raises(InvalidInputError):
        cxmat.real_extract(np.eye(3))
