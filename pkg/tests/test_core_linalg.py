import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from krein_canon import catalog
from krein_canon.core_linalg import (
    OperatorPair,
    SubspaceBasis,
    TolerancePolicy,
    h_adjoint,
    h_orth_complement,
    indefinite_product,
    is_h_normal,
    is_h_unitary,
    is_neutral,
    is_nondegenerate,
    kernel,
    pair_transform,
    real_spectrum,
    signature,
)
from krein_canon.errors import NondegenerateViolation, SingularTransform, ValidationError
from krein_canon.oracle import random_h_unitary

from conftest import D


def e(n, i):
    v = np.zeros((n, 1))
    v[i, 0] = 1.0
    return v


class TestTolerancePolicy:
    def test_defaults(self):
        t = TolerancePolicy()
        assert t.residual_abs == 1e-9

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("KREIN_CANON_TOL", "1e-7")
        assert TolerancePolicy.from_env().residual_abs == 1e-7
        assert TolerancePolicy.from_env(residual_abs=1e-5).residual_abs == 1e-5

    @pytest.mark.parametrize("kw", [{"residual_abs": 0}, {"rank_rel": -1}, {"eig_cluster_rel": 1.5}])
    def test_rejects_bad_values(self, kw):
        with pytest.raises(ValidationError):
            TolerancePolicy(**kw)


class TestHAdjoint:
    def test_identity_is_self_adjoint(self):
        assert np.allclose(h_adjoint(np.eye(3), D(3)), np.eye(3))

    def test_jordan_block_d2(self):
        A = np.array([[0.7, 1.0], [0.0, 0.7]])
        assert np.allclose(h_adjoint(A, D(2)), A)

    def test_euclidean_symmetric(self, rng):
        A = rng.standard_normal((4, 4))
        A = A + A.T
        assert np.allclose(h_adjoint(A, np.eye(4)), A)

    def test_singular_h(self):
        with pytest.raises(NondegenerateViolation):
            h_adjoint(np.eye(2), np.diag([1.0, 0.0]))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 2**31 - 1))
    def test_defining_identity(self, n, seed):
        r = np.random.default_rng(seed)
        A = r.standard_normal((n, n))
        H = np.diag(r.choice([-1.0, 1.0], n)) + 0.1 * (lambda S: S + S.T)(r.standard_normal((n, n)))
        x, y = r.standard_normal(n), r.standard_normal(n)
        As = h_adjoint(A, H)
        assert np.isclose(indefinite_product(As @ x, y, H), indefinite_product(x, A @ y, H), atol=1e-8)


class TestNormalUnitary:
    def test_r16_pair_is_normal(self):
        p = catalog.construct("R1.6", {"lambda": 1.0, "alpha": np.pi / 3})
        assert is_h_normal(p)[0]

    def test_jordan_not_normal(self):
        ok, res = is_h_normal(OperatorPair(np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2)))
        assert not ok and res > 1

    def test_triangular_n4_normality_condition(self):
        alpha = 0.9
        a, b, c, d, ee = 1.0, 0.0, 0.3, np.cos(alpha), np.sin(alpha)
        N = np.array([[0, a, b, c], [0, 0, 0, d], [0, 0, 0, ee], [0, 0, 0, 0.0]])
        H = np.array([[0, 0, 0, 1], [0, 1, 0, 0], [0, 0, 1, 0], [1, 0, 0, 0.0]])
        assert is_h_normal(OperatorPair(N, H))[0]

    def test_unitary_examples(self):
        assert is_h_unitary(np.eye(3), D(3))[0]
        assert is_h_unitary(D(2), D(2))[0]
        assert not is_h_unitary(np.diag([2.0, 1.0]), np.eye(2))[0]


class TestSignature:
    def test_examples(self):
        assert signature(D(2)) == (1, 1)
        assert signature(D(3)) == (1, 2)
        assert signature(np.eye(3)) == (0, 3)

    def test_singular(self):
        with pytest.raises(NondegenerateViolation):
            signature(np.diag([1.0, 0.0, -1.0]))

    def test_pair_flips_to_convention(self):
        p = OperatorPair(np.zeros((3, 3)), -np.eye(3))
        assert p.flipped and p.signature == (0, 3)
        assert np.allclose(p.H, np.eye(3))

    def test_rank(self):
        assert OperatorPair(np.zeros((4, 4)), np.diag([1.0, 1.0, -1.0, -1.0])).rank == 2

    def test_asymmetric_h(self):
        with pytest.raises(NondegenerateViolation):
            OperatorPair(np.zeros((2, 2)), np.array([[1.0, 1.0], [0.0, 1.0]]))


class TestPairTransform:
    def test_identity(self):
        p = catalog.construct("R1.1", {"lambda1": 0.0, "lambda2": 1.0})
        q = pair_transform(p, np.eye(2))
        assert np.allclose(q.N, p.N) and np.allclose(q.H, p.H)

    def test_reversal_swaps_eigenvalues(self):
        p = catalog.construct("R1.1", {"lambda1": 0.0, "lambda2": 1.0})
        q = pair_transform(p, D(2))
        assert np.allclose(q.N, np.diag([1.0, 0.0])) and np.allclose(q.H, D(2))

    def test_singular(self):
        p = catalog.construct("R1.1", {"lambda1": 0.0, "lambda2": 1.0})
        with pytest.raises(SingularTransform):
            pair_transform(p, np.ones((2, 2)))

    @settings(max_examples=30, deadline=None)
    @given(st.sampled_from([f.id for f in catalog.families()]), st.integers(0, 2**31 - 1))
    def test_normality_preserved_and_round_trip(self, fid, seed):
        r = np.random.default_rng(seed)
        p = catalog.construct(fid, catalog.sample_params(fid, r))
        T = random_h_unitary(p.H, rng=r, magnitude=1.0)
        q = pair_transform(p, T)
        assert is_h_normal(q)[0]
        back = pair_transform(q, np.linalg.inv(T))
        assert np.allclose(back.N, p.N, atol=1e-8) and np.allclose(back.H, p.H, atol=1e-8)


class TestSubspaces:
    def test_products(self):
        assert indefinite_product(e(2, 0).ravel(), e(2, 1).ravel(), D(2)) == 1.0
        assert indefinite_product(e(2, 0).ravel(), e(2, 0).ravel(), D(2)) == 0.0
        x, y = np.arange(3.0), np.ones(3)
        assert indefinite_product(x, y, np.eye(3)) == x @ y

    def test_neutral(self):
        assert is_neutral(SubspaceBasis(e(2, 0)), D(2))
        assert not is_neutral(SubspaceBasis(e(2, 0)), np.eye(2))
        assert not is_neutral(SubspaceBasis(np.eye(2)), D(2))

    def test_nondegenerate(self):
        assert not is_nondegenerate(SubspaceBasis(e(2, 0)), D(2))
        assert is_nondegenerate(SubspaceBasis(np.eye(2)), D(2))
        assert is_nondegenerate(SubspaceBasis(e(3, 1)), np.eye(3))

    def test_orth_complement(self):
        c = h_orth_complement(SubspaceBasis(e(2, 0)), D(2))
        assert c.dim == 1 and abs(abs(c.vectors[0, 0]) - 1) < 1e-12
        assert h_orth_complement(SubspaceBasis(np.eye(3)), D(3)).dim == 0
        c = h_orth_complement(SubspaceBasis(e(4, 0)), np.eye(4))
        assert c.dim == 3 and np.allclose(c.vectors[0], 0)

    def test_kernel(self):
        assert kernel(np.zeros((3, 3))).dim == 3
        assert kernel(np.eye(3)).dim == 0
        k = kernel(np.array([[0.0, 1.0], [0.0, 0.0]]))
        assert k.dim == 1 and abs(abs(k.vectors[0, 0]) - 1) < 1e-12

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 7), st.integers(1, 3), st.integers(0, 2**31 - 1))
    def test_complement_dimension(self, n, k, seed):
        r = np.random.default_rng(seed)
        k = min(k, n - 1)
        H = np.diag(r.choice([-1.0, 1.0], n))
        V = SubspaceBasis(r.standard_normal((n, k)))
        if is_nondegenerate(V, H):
            W = h_orth_complement(V, H)
            assert W.dim == n - k
            assert np.linalg.matrix_rank(np.hstack([V.vectors, W.vectors])) == n


class TestRealSpectrum:
    def test_clusters_defective_eigenvalue(self):
        N = catalog.construct("R1.6", {"lambda": 0.5, "alpha": 1.0}).N
        s = real_spectrum(N)
        assert s.p == 1 and s.real_mults == [4] and np.isclose(s.real_eigs[0], 0.5)

    def test_pairs(self):
        N = catalog.construct("R2.L13", {"alpha1": 0.0, "beta1": 1.0, "alpha2": 1.0, "beta2": 2.0, "z": 1}).N
        s = real_spectrum(N)
        assert s.p == 0 and s.q == 2 and all(b > 0 for _, b in s.complex_pairs)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.integers(-5, 5), min_size=1, max_size=6, unique=True), st.integers(0, 2**31 - 1))
    def test_diagonalizable_reals(self, lams, seed):
        r = np.random.default_rng(seed)
        Q, _ = np.linalg.qr(r.standard_normal((len(lams), len(lams))))
        s = real_spectrum(Q @ np.diag(np.array(lams, float)) @ Q.T)
        assert np.allclose(s.real_eigs, sorted(lams), atol=1e-8)
        assert sum(s.real_mults) == len(lams)
