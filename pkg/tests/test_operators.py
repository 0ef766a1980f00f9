import numpy as np
import pytest

from entbound.errors import DimensionError, ValidationError
from entbound.operators import (
    DickeBasis,
    HermitianOperator,
    collective_spectral_bounds,
    collective_spin,
    collective_spin_embedded,
    commutator,
    eigen_bounds,
    partial_transpose,
    tensor_embed,
)

from brute_force import char_poly_roots, collective_full, symmetric_isometry


def test_hermitian_operator_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        HermitianOperator(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_hermitian_operator_rejects_non_square():
    with pytest.raises(DimensionError):
        HermitianOperator(np.zeros((2, 3)))


def test_single_spin_jz():
    jz = collective_spin(1, "z")
    assert np.allclose(jz.entries, np.diag([0.5, -0.5]))


def test_jz_spectrum_n4():
    jz = collective_spin(4, "z")
    assert np.allclose(np.diag(jz.entries).real, [2, 1, 0, -1, -2])


def test_su2_algebra_example_n2():
    jx = collective_spin(2, "x")
    jy = collective_spin(2, "y")
    jz = collective_spin(2, "z")
    assert np.max(np.abs(commutator(jz, jy) + 1j * jx.entries)) < 1e-10


@pytest.mark.parametrize("n", list(range(1, 41)))
def test_su2_algebra_and_casimir(n):
    ops = {a: collective_spin(n, a) for a in "xyz"}
    for a, b, c in (("x", "y", "z"), ("y", "z", "x"), ("z", "x", "y")):
        err = np.max(np.abs(commutator(ops[a], ops[b]) - 1j * ops[c].entries))
        assert err < 1e-10
    j = n / 2
    total = sum(op.entries @ op.entries for op in ops.values())
    assert np.max(np.abs(total - j * (j + 1) * np.eye(n + 1))) < 1e-10 * max(1.0, j * j)


def test_operations_preserve_hermiticity():
    for n in (1, 3, 7):
        for a in "xyz":
            op = collective_spin(n, a)
            assert np.max(np.abs(op.entries - op.entries.conj().T)) == 0.0


def test_eigen_bounds_diag():
    sb = eigen_bounds(HermitianOperator(np.diag([1.0, 2.0, 3.0])))
    assert sb.lambda_min == pytest.approx(1.0)
    assert sb.lambda_max == pytest.approx(3.0)
    assert not sb.exact


def test_eigen_bounds_random_vs_char_poly():
    rng = np.random.default_rng(11)
    a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    h = HermitianOperator(0.5 * (a + a.conj().T))
    sb = eigen_bounds(h)
    roots = np.sort(char_poly_roots(h.entries).real)
    assert sb.lambda_min == pytest.approx(roots[0], abs=1e-9)
    assert sb.lambda_max == pytest.approx(roots[-1], abs=1e-9)


def test_collective_spectral_bounds_analytic():
    sb = collective_spectral_bounds(476, "x")
    assert (sb.lambda_min, sb.lambda_max, sb.exact) == (-238.0, 238.0, True)
    sb1 = collective_spectral_bounds(1, "z")
    assert (sb1.lambda_min, sb1.lambda_max) == (-0.5, 0.5)


@pytest.mark.parametrize("n", list(range(1, 41, 3)))
@pytest.mark.parametrize("axis", ["x", "y", "z"])
def test_collective_bounds_match_eigensolve(n, axis):
    analytic = collective_spectral_bounds(n, axis)
    numeric = eigen_bounds(collective_spin(n, axis))
    assert analytic.lambda_min == pytest.approx(numeric.lambda_min, abs=1e-10)
    assert analytic.lambda_max == pytest.approx(numeric.lambda_max, abs=1e-10)


def test_tensor_embed_single_site():
    sz = HermitianOperator(np.diag([0.5, -0.5]))
    embedded = tensor_embed([sz], [0], [2, 2])
    assert np.allclose(embedded.entries, np.kron(sz.entries, np.eye(2)))


def test_tensor_embed_identity():
    eye = HermitianOperator(np.eye(2))
    embedded = tensor_embed([eye, eye], [0, 1], [2, 2])
    assert np.allclose(embedded.entries, np.eye(4))


def test_tensor_embed_guard():
    eye = HermitianOperator(np.eye(2))
    with pytest.raises(DimensionError):
        tensor_embed([eye], [0], [2] * 13)
    with pytest.raises(DimensionError):
        tensor_embed([eye], [5], [2, 2])
    with pytest.raises(DimensionError):
        tensor_embed([eye, eye], [0, 0], [2, 2])


def test_collective_embedded_symmetric_sector_spectrum():
    # J_z restricted to the symmetric subspace has the Dicke spectrum.
    n = 4
    full = collective_spin_embedded(n, "z")
    iso = symmetric_isometry(n)
    restricted = iso.T @ full.entries @ iso
    vals = np.sort(np.linalg.eigvalsh(restricted))
    assert np.allclose(vals, [-2, -1, 0, 1, 2], atol=1e-10)
    assert np.allclose(full.entries, collective_full(n, "z"))


def test_partial_transpose_bell():
    v = np.array([1, 0, 0, 1]) / np.sqrt(2)
    rho = HermitianOperator(np.outer(v, v.conj()))
    pt = partial_transpose(rho, (2, 2))
    assert np.linalg.eigvalsh(pt.entries)[0] == pytest.approx(-0.5, abs=1e-12)


def test_partial_transpose_product_state_spectrum():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    ra = a @ a.conj().T
    ra /= np.trace(ra).real
    b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    rb = b @ b.conj().T
    rb /= np.trace(rb).real
    rho = HermitianOperator(np.kron(ra, rb))
    pt = partial_transpose(rho, (2, 2))
    assert np.allclose(
        np.sort(np.linalg.eigvalsh(pt.entries)), np.sort(np.linalg.eigvalsh(rho.entries))
    )


def test_partial_transpose_involution():
    rng = np.random.default_rng(5)
    for da, db in ((2, 2), (2, 3), (3, 2)):
        a = rng.normal(size=(da * db, da * db)) + 1j * rng.normal(size=(da * db, da * db))
        h = HermitianOperator(0.5 * (a + a.conj().T))
        twice = partial_transpose(partial_transpose(h, (da, db)), (da, db))
        assert np.allclose(twice.entries, h.entries)


def test_werner_ppt_threshold():
    # p |Phi+><Phi+| + (1-p) I/4 stays PPT exactly up to p = 1/3.
    v = np.array([1, 0, 0, 1]) / np.sqrt(2)
    bell = np.outer(v, v.conj())
    for p in (0.0, 0.2, 1 / 3, 0.34, 0.8):
        rho = HermitianOperator(p * bell + (1 - p) * np.eye(4) / 4)
        min_eig = np.linalg.eigvalsh(partial_transpose(rho, (2, 2)).entries)[0]
        expected = (1 - 3 * p) / 4
        assert min_eig == pytest.approx(expected, abs=1e-12)
        assert (min_eig >= -1e-12) == (p <= 1 / 3)


def test_partial_transpose_dim_mismatch():
    with pytest.raises(DimensionError):
        partial_transpose(HermitianOperator(np.eye(6)), (2, 2))


def test_dicke_basis_validation():
    assert DickeBasis(4).dim == 5
    with pytest.raises(ValidationError):
        DickeBasis(0)
