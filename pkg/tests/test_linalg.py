import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pepslhv import linalg
from pepslhv.basis import phase_point_basis
from pepslhv.errors import UsageError

X = np.array([[0, 1], [1, 0]], dtype=complex)


def random_hermitian(rng, d):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return m + m.conj().T


class TestTensorProduct:
    def test_identity_times_x(self):
        out = linalg.tensor_product([np.eye(2), X])
        expected = np.zeros((4, 4))
        expected[:2, :2] = X.real
        expected[2:, 2:] = X.real
        assert np.array_equal(out, expected)

    def test_single_factor_unchanged(self):
        a = np.arange(4).reshape(2, 2).astype(complex)
        assert np.array_equal(linalg.tensor_product([a]), a)

    def test_phase_point_with_transpose_has_unit_trace(self):
        # tr(A (x) A^T) = tr(A)^2 = 1 for unit-trace phase points
        a = phase_point_basis().elements[0]
        out = linalg.tensor_product([a, a.T])
        assert abs(np.trace(out) - 1.0) < 1e-12

    def test_empty_list_rejected(self):
        with pytest.raises(UsageError):
            linalg.tensor_product([])

    @given(
        a=arrays(np.int64, (2, 2), elements=st.integers(-5, 5)).map(
            lambda m: m.astype(complex)
        ),
        b=arrays(np.int64, (2, 2), elements=st.integers(-5, 5)).map(
            lambda m: m.astype(complex)
        ),
        c=arrays(np.int64, (2, 2), elements=st.integers(-5, 5)).map(
            lambda m: m.astype(complex)
        ),
    )
    def test_associative_for_integer_entries(self, a, b, c):
        left = linalg.tensor_product([linalg.tensor_product([a, b]), c])
        right = linalg.tensor_product([a, linalg.tensor_product([b, c])])
        assert np.array_equal(left, right)


class TestPartialTrace:
    def test_bell_marginal_is_maximally_mixed(self):
        phi = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
        red = linalg.partial_trace(np.outer(phi, phi.conj()), [2, 2], [0])
        assert np.allclose(red, np.eye(2) / 2, atol=1e-12)

    def test_product_input_factorizes(self):
        rng = np.random.default_rng(3)
        sigma = random_hermitian(rng, 2)
        tau = random_hermitian(rng, 3)
        red = linalg.partial_trace(np.kron(sigma, tau), [2, 3], [0])
        assert np.allclose(red, sigma * np.trace(tau), atol=1e-10)

    def test_phase_point_pair_sum(self):
        # (1/4) sum_k A_k (x) A_k^T reduces to I/2 on either factor
        elems = phase_point_basis().elements
        total = sum(np.kron(a, a.T) for a in elems) / 4
        for keep in ([0], [1]):
            red = linalg.partial_trace(total, [2, 2], keep)
            assert np.allclose(red, np.eye(2) / 2, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(UsageError):
            linalg.partial_trace(np.eye(4), [2, 3], [0])

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=25)
    def test_trace_preserved(self, seed):
        rng = np.random.default_rng(seed)
        op = random_hermitian(rng, 6)
        red = linalg.partial_trace(op, [2, 3], [1])
        assert abs(np.trace(red) - np.trace(op)) < 1e-12


class TestMinEigenvalue:
    def test_identity(self):
        assert linalg.min_eigenvalue(np.eye(2)) == pytest.approx(1.0)

    def test_phase_point_operator(self):
        a = phase_point_basis().elements[0]
        assert linalg.min_eigenvalue(a) == pytest.approx((1 - np.sqrt(3)) / 2, abs=1e-10)

    def test_projector(self):
        assert linalg.min_eigenvalue(np.diag([1.0, 0.0])) == pytest.approx(0.0, abs=1e-12)

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=25)
    def test_unitary_invariance(self, seed):
        rng = np.random.default_rng(seed)
        op = random_hermitian(rng, 4)
        q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
        rotated = q @ op @ q.conj().T
        rotated = (rotated + rotated.conj().T) / 2
        assert linalg.min_eigenvalue(rotated) == pytest.approx(
            linalg.min_eigenvalue(op), abs=1e-9
        )


class TestEntanglementEntropy:
    def test_bell_pair(self):
        phi = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
        assert linalg.entanglement_entropy(phi, [2, 2], [0]) == pytest.approx(1.0)

    def test_product_state(self):
        zz = np.array([1, 0, 0, 0], dtype=complex)
        assert linalg.entanglement_entropy(zz, [2, 2], [0]) == pytest.approx(0.0, abs=1e-12)

    def test_weakly_entangled_pair(self):
        eps = 0.5
        vec = np.array([1, 0, 0, eps**2], dtype=complex)
        vec /= np.linalg.norm(vec)
        # Schmidt weights (1, eps^4) / (1 + eps^4)
        p = np.array([1, eps**4]) / (1 + eps**4)
        expected = -np.sum(p * np.log2(p))
        ent = linalg.entanglement_entropy(vec, [2, 2], [0])
        assert ent == pytest.approx(expected, abs=1e-12)
        assert ent == pytest.approx(0.32276, abs=1e-4)

    def test_dimension_mismatch(self):
        with pytest.raises(UsageError):
            linalg.entanglement_entropy(np.array([1, 0, 0, 0.0]), [2, 3], [0])

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=25)
    def test_cut_complement_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        vec = rng.normal(size=8) + 1j * rng.normal(size=8)
        vec /= np.linalg.norm(vec)
        left = linalg.entanglement_entropy(vec, [2, 2, 2], [0])
        right = linalg.entanglement_entropy(vec, [2, 2, 2], [1, 2])
        assert left == pytest.approx(right, abs=1e-9)


class TestHermiticityPolicy:
    def test_non_hermitian_rejected_not_symmetrized(self):
        with pytest.raises(UsageError):
            linalg.check_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))

    def test_state_norm_enforced(self):
        with pytest.raises(UsageError):
            linalg.as_state(np.array([1.0, 1.0]))


class TestJsonRoundTrips:
    def test_matrix(self):
        rng = np.random.default_rng(11)
        m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        back = linalg.matrix_from_json(linalg.matrix_to_json(m))
        assert np.allclose(back, m, atol=0)

    def test_state(self):
        vec = np.array([1, 1j], dtype=complex) / np.sqrt(2)
        back = linalg.state_from_json(linalg.state_to_json(vec))
        assert np.allclose(back, vec, atol=0)
