import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from krein_canon import catalog
from krein_canon.core_linalg import is_h_normal, pair_transform, real_spectrum
from krein_canon.decomposition import block_decompose
from krein_canon.errors import ParameterDomainViolation, ValidationError
from krein_canon.oracle import random_h_unitary

from conftest import D

IDS = [f.id for f in catalog.families()]

FORMS = {
    "R1.1": 1, "R1.2": 2, "R1.3": 3, "R1.4": 4, "R1.5": 5, "R1.6": 6,
    "R2.L1": 9, "R2.L2a": 11, "R2.L2b": 12, "R2.L3a": 14, "R2.L3b": 15, "R2.L4": 17,
    "R2.L5a": 19, "R2.L5b": 20, "R2.L6a": 22, "R2.L6b": 23, "R2.L6c": 24, "R2.L6d": 25,
    "R2.L7a": 27, "R2.L7b": 28, "R2.L8a": 30, "R2.L8b": 31, "R2.L9": 33, "R2.L10a": 35,
    "R2.L10b": 36, "R2.L11": 38, "R2.L12": 40, "R2.L13": 42, "R2.L14a": 44, "R2.L14b": 45,
    "R2.L15a": 47, "R2.L15b": 48, "R2.L16": 50,
}


def test_counts():
    assert len(IDS) == 33
    assert sum(f.rank == 1 for f in catalog.families()) == 6
    assert sum(f.rank == 2 for f in catalog.families()) == 27


def test_form_numbers():
    assert {f.id: f.form for f in catalog.families()} == FORMS
    assert catalog.get_family(50).id == "R2.L16"


def test_dimension_ranges():
    for f in catalog.families():
        lo, hi = (2, 4) if f.rank == 1 else (4, 8)
        assert lo <= f.n <= hi


def test_unknown_family():
    with pytest.raises(ValidationError):
        catalog.get_family("R9.9")


class TestConstruct:
    def test_two_real(self):
        p = catalog.construct("R1.1", {"lambda1": 0.0, "lambda2": 1.0})
        assert np.array_equal(p.N, np.diag([0.0, 1.0])) and np.array_equal(p.H, D(2))

    def test_rotation_at_right_angle(self):
        p = catalog.construct("R1.6", {"lambda": 0.0, "alpha": np.pi / 2})
        assert np.isclose(p.N[1, 3], 0.0, atol=1e-15) or np.isclose(p.N[2, 3], 0.0, atol=1e-15)
        assert is_h_normal(p)[0]

    def test_two_pairs_ordering_rejected(self):
        with pytest.raises(ParameterDomainViolation, match="alpha1<alpha2"):
            catalog.construct("R2.L13", {"alpha1": 0.0, "beta1": 1.0, "alpha2": 0.0, "beta2": 1.0, "z": 1})

    def test_wrong_names(self):
        with pytest.raises(ValidationError):
            catalog.construct("R1.1", {"lambda": 0.0})

    def test_sign_parameter(self):
        with pytest.raises(ParameterDomainViolation):
            catalog.construct("R1.3", {"lambda": 0.0, "z": 0.5})


class TestValidate:
    def test_examples(self):
        assert catalog.validate_params("R1.2", {"alpha": 0.0, "beta": 0.0}) == ["beta>0"]
        assert catalog.validate_params("R2.L6b", {"lambda": 0.0, "r": 1.0}) == ["|r|>1"]
        assert catalog.validate_params("R1.3", {"lambda": 0.0, "z": 1}) == []


class TestFamiliesFor:
    def test_examples(self):
        assert catalog.families_for(4, 1, "a") == ["R1.6"]
        assert catalog.families_for(8, 2, "c") == ["R2.L16"]
        assert catalog.families_for(3, 2, "a") == []


@pytest.mark.parametrize("fid", IDS)
class TestPerFamily:
    def test_normal_signature_class(self, fid):
        rng = np.random.default_rng(hash(fid) % 2**32)
        f = catalog.get_family(fid)
        for _ in range(5):
            p = catalog.construct(fid, catalog.sample_params(fid, rng))
            ok, res = is_h_normal(p)
            assert ok and res <= 1e-12
            assert min(p.signature) == f.rank
            blocks = block_decompose(p)
            assert blocks[0].eigenvalue_class == f.spectrum_class

    def test_recognize_round_trip(self, fid):
        rng = np.random.default_rng(99)
        params = catalog.sample_params(fid, rng)
        got = catalog.recognize(catalog.construct(fid, params))
        assert got is not None and got[0] == fid
        for k, v in params.items():
            assert np.isclose(got[1][k], v, atol=1e-9)

    def test_scrambled_not_misrecognized(self, fid):
        # a scramble either leaves the canonical pattern or stays on the same point
        rng = np.random.default_rng(5)
        params = catalog.sample_params(fid, rng)
        p = catalog.construct(fid, params)
        q = pair_transform(p, random_h_unitary(p.H, rng=rng, magnitude=1.0))
        got = catalog.recognize(q)
        if got is not None:
            assert got[0] == fid and all(np.isclose(got[1][k], v, atol=1e-6) for k, v in params.items())


def test_scrambled_generic_not_recognized():
    p = catalog.construct("R1.6", {"lambda": 0.0, "alpha": 1.0})
    q = pair_transform(p, random_h_unitary(p.H, rng=np.random.default_rng(0), magnitude=1.0))
    assert catalog.recognize(q) is None


def test_recognize_foreign_h():
    from krein_canon.core_linalg import OperatorPair

    assert catalog.recognize(OperatorPair(np.zeros((2, 2)), np.diag([1.0, -1.0]))) is None


def test_atlas():
    rows = catalog.atlas()
    assert len(rows) == 33
    assert len(catalog.atlas(rank=1)) == 6
    assert {r["family"] for r in catalog.atlas(rank=2, n=8)} == {"R2.L10a", "R2.L10b", "R2.L16"}


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(IDS), st.integers(0, 2**31 - 1))
def test_sampled_params_in_domain(fid, seed):
    params = catalog.sample_params(fid, np.random.default_rng(seed))
    assert catalog.validate_params(fid, params) == []
    p = catalog.construct(fid, params)
    spec = real_spectrum(p.N)
    cls = catalog.get_family(fid).spectrum_class
    assert (spec.p, spec.q) == {"a": (1, 0), "b": (2, 0), "c": (0, 1), "d": (1, 1), "e": (0, 2)}[cls]
