import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from krein_canon import catalog
from krein_canon import decomposition as dc
from krein_canon.core_linalg import OperatorPair, SubspaceBasis, direct_sum, gram, pair_transform, real_spectrum
from krein_canon.errors import NotHNormal
from krein_canon.oracle import random_h_unitary

from conftest import D


def two_block_pair():
    N = direct_sum(np.diag([0.0, 1.0]), np.array([[3.0, 2.0], [-2.0, 3.0]]))
    return OperatorPair(N, direct_sum(D(2), D(2)))


class TestPolynomials:
    def test_phi_roots(self):
        spec = real_spectrum(np.diag([1.0, 2.0]))
        phi = dc.phi_polynomial(1, spec, 2)
        assert abs(phi(1.0)) < 1e-12 and abs(phi(2.0)) > 0.5

    def test_horner_matches_power(self, rng):
        spec = real_spectrum(np.diag([0.5, -1.0, 2.0]))
        phi = dc.phi_polynomial(2, spec, 3)
        A = rng.standard_normal((3, 3))
        lam = spec.real_eigs[1]
        ref = np.linalg.matrix_power(A - lam * np.eye(3), 3)
        assert np.allclose(phi.horner(A), ref)


class TestQSubspace:
    def test_two_real_eigenvalues(self):
        p = catalog.construct("R1.1", {"lambda1": 0.0, "lambda2": 1.0})
        spec = real_spectrum(p.N)
        assert dc.q_subspace(p, spec, 1, 2).dim == 1
        assert dc.q_subspace(p, spec, 2, 1).dim == 1
        assert dc.q_subspace(p, spec, 1, 1).dim == 0
        assert dc.q_subspace(p, spec, 2, 2).dim == 0

    def test_scalar_operator(self):
        p = OperatorPair(2.0 * np.eye(3), np.eye(3))
        assert dc.q_subspace(p, real_spectrum(p.N), 1, 1).dim == 3

    def test_real_plus_pair(self):
        p = catalog.construct("R2.L12", catalog.sample_params("R2.L12", np.random.default_rng(1)))
        spec = real_spectrum(p.N)
        dims = {(i, j): dc.q_subspace(p, spec, i, j).dim for i in (1, 2) for j in (1, 2)}
        assert sum(dims.values()) == 4 and dims[(1, 2)] > 0


class TestBlockDecompose:
    def test_classes_b_and_c(self):
        blocks = dc.block_decompose(two_block_pair())
        assert sorted(b.eigenvalue_class for b in blocks) == ["b", "c"]

    def test_scalar_single_block(self):
        blocks = dc.block_decompose(OperatorPair(1.5 * np.eye(3), np.diag([1.0, -1.0, 1.0])))
        assert len(blocks) == 1 and blocks[0].eigenvalue_class == "a"

    def test_real_plus_pair_single_block(self):
        p = catalog.construct("R2.L12", catalog.sample_params("R2.L12", np.random.default_rng(2)))
        blocks = dc.block_decompose(p)
        assert len(blocks) == 1 and blocks[0].eigenvalue_class == "d"

    def test_not_normal(self):
        with pytest.raises(NotHNormal):
            dc.block_decompose(OperatorPair(np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2)))

    def test_blocks_orthonormal(self):
        blocks = dc.block_decompose(two_block_pair())
        W = np.hstack([b.basis.vectors for b in blocks])
        G = gram(W, two_block_pair().H)
        assert np.allclose(G, np.diag(np.diag(G)), atol=1e-9)
        assert np.allclose(np.abs(np.diag(G)), 1.0)

    @pytest.mark.parametrize("fid", ["R1.6", "R2.L16", "R2.L13", "R2.L6a"])
    def test_idempotent(self, fid):
        p = catalog.construct(fid, catalog.sample_params(fid, np.random.default_rng(3)))
        blocks = dc.block_decompose(p)
        assert len(blocks) == 1
        assert len(dc.block_decompose(blocks[0].restricted_pair)) == 1


class TestStructuralReport:
    @pytest.mark.parametrize("make", [
        two_block_pair,
        lambda: OperatorPair(1.5 * np.eye(3), np.diag([1.0, -1.0, 1.0])),
        lambda: catalog.construct("R2.L12", catalog.sample_params("R2.L12", np.random.default_rng(2))),
    ])
    def test_all_pass(self, make):
        p = make()
        rep = dc.verify_proposition1(p, dc.block_decompose(p))
        assert rep.passed, rep.residuals
        assert set(rep.residuals) == set(dc.PROPERTY_NAMES)

    def test_corrupted_basis_fails_invariance(self):
        p = two_block_pair()
        blocks = dc.block_decompose(p)
        b = blocks[0]
        bad = b.basis.vectors + 0.3 * np.roll(np.eye(4)[:, : b.dim], 1, axis=0)
        corrupt = dc.OrthogonalBlock(SubspaceBasis(bad), b.kind, b.indices, b.eigenvalue_class,
                                     b.restricted_pair, b.signs,
                                     [dc.QSubspace(q.i, q.j, SubspaceBasis(bad)) for q in b.q_subspaces])
        rep = dc.verify_proposition1(p, [corrupt] + blocks[1:])
        assert not rep.checks["invariance"]


class TestFullDecomposition:
    def test_splits_equal_eigenvalue_summands(self):
        a = catalog.construct("R1.3", {"lambda": 0.0, "z": 1})
        b = catalog.construct("R1.4", {"lambda": 0.0})
        p = OperatorPair(direct_sum(a.N, b.N), direct_sum(a.H, b.H))
        dec = dc.full_decomposition(p)
        assert sorted(blk.dim for blk in dec.blocks) == [2, 3]

    def test_commutant_of_scalar_is_full(self):
        p = OperatorPair(2.0 * np.eye(2), np.eye(2))
        assert len(dc.commutant_basis(p)) == 4

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_scrambled_sum_dimensions(self, seed):
        r = np.random.default_rng(seed)
        a = catalog.construct("R1.2", {"alpha": 0.5, "beta": 1.0})
        b = catalog.construct("R1.5", {"lambda": -1.0, "r": 0.4})
        p = OperatorPair(direct_sum(a.N, b.N), direct_sum(a.H, b.H))
        q = pair_transform(p, random_h_unitary(p.H, rng=r, magnitude=1.0))
        dec = dc.full_decomposition(q)
        assert sorted(blk.dim for blk in dec.blocks) == [2, 3]
        assert sum(blk.dim for blk in dec.blocks) == q.n
        assert dc.verify_proposition1(q, dec.blocks, spectrum=dec.spectrum).passed
