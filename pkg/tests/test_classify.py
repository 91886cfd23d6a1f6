import numpy as np
import pytest

from krein_canon import catalog
from krein_canon.classify import OUT_OF_SCOPE, TRIVIAL, classify
from krein_canon.core_linalg import OperatorPair, direct_sum, pair_transform
from krein_canon.errors import NotHNormal
from krein_canon.oracle import random_h_unitary


def sum_pair(*pairs):
    return OperatorPair(direct_sum(*[p.N for p in pairs]), direct_sum(*[p.H for p in pairs]))


def scrambled(p, seed):
    return pair_transform(p, random_h_unitary(p.H, rng=np.random.default_rng(seed), magnitude=1.0))


def test_identity_is_trivial():
    rep = classify(OperatorPair(np.eye(3), np.eye(3)))
    assert rep.status == "ok" and len(rep.blocks) == 3
    assert all(b.status == TRIVIAL for b in rep.blocks)
    assert rep.certificate_residual() < 1e-12


def test_nilpotent_document():
    rep = classify(catalog.construct("R1.3", {"lambda": 0.0, "z": 1}))
    assert rep.families == ["R1.3"] and rep.blocks[0].result.params["z"] == 1


def test_not_normal():
    with pytest.raises(NotHNormal) as exc:
        classify(OperatorPair(np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2)))
    assert exc.value.residual > 0


def test_multi_block_certificate():
    a = catalog.construct("R1.5", {"lambda": 1.0, "r": 0.4})
    b = catalog.construct("R2.L12", catalog.sample_params("R2.L12", np.random.default_rng(0)))
    p = scrambled(sum_pair(a, b, OperatorPair(np.array([[3.0]]), np.eye(1))), 1)
    rep = classify(p)
    assert rep.status == "ok"
    assert sorted(rep.families) == ["R1.5", "R2.L12"]
    assert rep.certificate_residual() < 1e-6
    Nc, Hc = rep.canonical_pair()
    T = rep.transform()
    assert np.allclose(np.linalg.solve(T, p.N @ T), Nc, atol=1e-6)


def test_flipped_input():
    p = catalog.construct("R2.L16", catalog.sample_params("R2.L16", np.random.default_rng(0)))
    rep = classify(OperatorPair(p.N, -p.H))
    assert rep.flipped and rep.families == ["R2.L16"]
    assert any("negated" in w for w in rep.warnings)


@pytest.mark.parametrize("n", [6, 7])
def test_rank3_jordan_out_of_scope(n):
    # one Jordan block with the reversal form is self-adjoint and indecomposable
    N = np.diag(np.ones(n - 1), 1)
    rep = classify(OperatorPair(N, np.fliplr(np.eye(n))))
    assert len(rep.blocks) == 1 and rep.blocks[0].status == OUT_OF_SCOPE
    assert rep.status == "partial"


def test_no_fit_marks_unresolved():
    p = scrambled(catalog.construct("R2.L1", catalog.sample_params("R2.L1", np.random.default_rng(0))), 2)
    rep = classify(p, allow_deferred=False)
    assert rep.status == "unresolved" and rep.canonical_pair() is None


def test_to_dict_round_trip():
    p = scrambled(catalog.construct("R2.L13", catalog.sample_params("R2.L13", np.random.default_rng(1))), 3)
    d = classify(p).to_dict(emit_transform=True)
    b = d["blocks"][0]
    assert b["family"] == "R2.L13" and b["form"] == 42 and "T" in b
