import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from krein_canon import catalog, oracle
from krein_canon.core_linalg import OperatorPair, is_h_normal, is_h_unitary, pair_transform
from krein_canon.errors import ValidationError

from conftest import D

IDS = [f.id for f in catalog.families()]


class TestRandomHUnitary:
    def test_zero_magnitude(self):
        assert np.array_equal(oracle.random_h_unitary(D(3), magnitude=0.0), np.eye(3))

    def test_euclidean_is_orthogonal(self):
        T = oracle.random_h_unitary(np.eye(4), oracle.ScrambleSpec(seed=1))
        assert np.allclose(T.T @ T, np.eye(4), atol=1e-12)

    def test_d2_seeded(self):
        spec = oracle.ScrambleSpec(seed=42)
        T = oracle.random_h_unitary(D(2), spec)
        assert np.linalg.norm(T.T @ D(2) @ T - D(2)) < 1e-10
        assert np.array_equal(T, oracle.random_h_unitary(D(2), spec))

    def test_spec_validation(self):
        with pytest.raises(ValidationError):
            oracle.ScrambleSpec(magnitude=-1.0)
        with pytest.raises(ValidationError):
            oracle.ScrambleSpec(count=-1)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 8), st.integers(0, 2**31 - 1), st.floats(0.05, 2.0))
    def test_preserves_form(self, n, seed, mag):
        r = np.random.default_rng(seed)
        H = np.diag(r.choice([-1.0, 1.0], n))
        T = oracle.random_h_unitary(H, rng=r, magnitude=mag)
        assert np.linalg.norm(T.T @ H @ T - H) <= 1e-10
        assert is_h_unitary(T, H)[0]


def test_expm_matches_series(rng):
    A = 0.1 * rng.standard_normal((4, 4))
    ref = np.eye(4)
    term = np.eye(4)
    for k in range(1, 30):
        term = term @ A / k
        ref = ref + term
    assert np.allclose(oracle.expm(A), ref, atol=1e-14)


class TestScramble:
    def test_identity_scramble(self):
        form = catalog.CanonicalForm("R1.1", {"lambda1": 0.0, "lambda2": 1.0})
        q = oracle.scramble(form, oracle.ScrambleSpec(magnitude=0.0))[0]
        assert np.array_equal(q.N, form.pair().N) and np.array_equal(q.H, form.pair().H)

    def test_count_and_distinct(self):
        form = catalog.CanonicalForm("R1.6", {"lambda": 0.0, "alpha": 1.0})
        out = oracle.scramble_with_transforms(form, oracle.ScrambleSpec(seed=3, count=5))
        assert len(out) == 5
        Ts = [T for _, T in out]
        assert all(not np.allclose(Ts[i], Ts[j]) for i in range(5) for j in range(i))

    @pytest.mark.parametrize("fid", IDS)
    def test_outputs_normal_and_fingerprint_stable(self, fid):
        rng = np.random.default_rng(21)
        form = catalog.CanonicalForm(fid, catalog.sample_params(fid, rng))
        ref = oracle.fingerprint(form.pair())
        for q in oracle.scramble(form, oracle.ScrambleSpec(seed=5, count=3)):
            assert is_h_normal(q)[0]
            assert ref.mismatch(oracle.fingerprint(q)) is None


class TestFingerprint:
    def test_r14_vs_r15(self):
        a = oracle.fingerprint(catalog.construct("R1.4", {"lambda": 0.0}))
        b = oracle.fingerprint(catalog.construct("R1.5", {"lambda": 0.0, "r": 0.5}))
        assert a.mismatch(b) is not None

    def test_r15_parameter_slot(self):
        a = oracle.fingerprint(catalog.construct("R1.5", {"lambda": 0.0, "r": 0.3}))
        b = oracle.fingerprint(catalog.construct("R1.5", {"lambda": 0.0, "r": 0.4}))
        assert a.mismatch(b) == "blocks.R1.5.r"

    def test_l14_variants(self):
        p = catalog.sample_params("R2.L14a", np.random.default_rng(0))
        a = oracle.fingerprint(catalog.construct("R2.L14a", p))
        b = oracle.fingerprint(catalog.construct("R2.L14b", {"alpha": p["alpha"], "beta": p["beta"]}))
        assert a.mismatch(b) is not None

    def test_scalar_all_trivial(self):
        fp = oracle.fingerprint(OperatorPair(2.0 * np.eye(3), np.eye(3))).to_dict()
        assert fp["segre"] == [[3, 3, 3]] and fp["s0_dims"] == [[3]]
        assert all(b["family"] == "definite" for b in fp["blocks"])

    @settings(max_examples=20, deadline=None)
    @given(st.sampled_from(IDS), st.integers(0, 2**31 - 1))
    def test_invariance(self, fid, seed):
        r = np.random.default_rng(seed)
        p = catalog.construct(fid, catalog.sample_params(fid, r))
        q = pair_transform(p, oracle.random_h_unitary(p.H, rng=r, magnitude=1.0))
        assert oracle.fingerprint(p).mismatch(oracle.fingerprint(q)) is None


class TestSimilarity:
    def test_scramble_found_both_ways(self):
        p = catalog.construct("R2.L16", catalog.sample_params("R2.L16", np.random.default_rng(0)))
        q = pair_transform(p, oracle.random_h_unitary(p.H, rng=np.random.default_rng(1)))
        for a, b in ((p, q), (q, p)):
            r = oracle.similarity_solve(a, b)
            assert r.similar and r.residual < 1e-6
            assert oracle.similarity_certificate(a, b, r.T) < 1e-6

    def test_self_similar(self):
        p = catalog.construct("R1.6", {"lambda": 0.0, "alpha": 1.0})
        r = oracle.similarity_solve(p, p)
        assert r.similar

    def test_mismatch_named(self):
        a = catalog.construct("R1.5", {"lambda": 0.0, "r": 0.3})
        b = catalog.construct("R1.5", {"lambda": 0.0, "r": 0.4})
        r = oracle.similarity_solve(a, b)
        assert r.status == "invariant-mismatch" and r.field

    def test_dimension_mismatch(self):
        a = catalog.construct("R1.1", {"lambda1": 0.0, "lambda2": 1.0})
        b = catalog.construct("R1.4", {"lambda": 0.0})
        assert oracle.similarity_solve(a, b).status == "invariant-mismatch"

    def test_scalar_pair(self):
        p = OperatorPair(2.0 * np.eye(3), np.diag([1.0, 1.0, -1.0]))
        q = pair_transform(p, oracle.random_h_unitary(p.H, rng=np.random.default_rng(4)))
        assert oracle.similarity_solve(p, q).similar

    def test_sylvester_kernel(self, rng):
        A = np.diag([1.0, 2.0, 3.0])
        ker = oracle.sylvester_kernel(A, A)
        assert len(ker) == 3
        for K in ker:
            assert np.allclose(A @ K, K @ A)


class TestFitFamily:
    def test_recovers_template(self):
        form = catalog.CanonicalForm("R2.L4", catalog.sample_params("R2.L4", np.random.default_rng(0)))
        q = oracle.scramble(form, oracle.ScrambleSpec(seed=2))[0]
        fit = oracle.fit_family(q, "R2.L4", {"z": form.params["z"]}, rng=np.random.default_rng(0))
        assert fit.success and fit.family == "R2.L4"
        for k, v in form.params.items():
            assert abs(fit.params[k] - v) < 1e-6

    def test_sign_parameters_required(self):
        p = catalog.construct("R2.L4", catalog.sample_params("R2.L4", np.random.default_rng(0)))
        with pytest.raises(ValidationError):
            oracle.fit_family(p, "R2.L4")

    def test_wrong_dimension_fails_softly(self):
        p = catalog.construct("R2.L1", catalog.sample_params("R2.L1", np.random.default_rng(0)))
        assert not oracle.fit_family(p, "R2.L16").success
