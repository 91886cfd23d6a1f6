"""Acceptance suite: eight criteria at their stated tolerances."""

import itertools
import time

import numpy as np
import pytest

from krein_canon import catalog, oracle, rank2
from krein_canon.classify import CLASSIFIED, TRIVIAL, classify, classify_block
from krein_canon.core_linalg import OperatorPair, direct_sum, is_h_normal, pair_transform, reversal
from krein_canon.decomposition import decompose, verify_proposition1
from krein_canon.errors import DecomposableInput, DimensionOutOfTheorem, MultipleFit, NoFit

RANK1 = ["R1.1", "R1.2", "R1.3", "R1.4", "R1.5", "R1.6"]
RANK2_CONSTRUCTIVE = ["R2.L6a", "R2.L6b", "R2.L6c", "R2.L6d", "R2.L12", "R2.L13",
                      "R2.L14a", "R2.L14b", "R2.L15a", "R2.L15b", "R2.L16"]
DEFERRED = ["R2.L1", "R2.L2a", "R2.L2b", "R2.L3a", "R2.L3b", "R2.L4", "R2.L5a", "R2.L5b",
            "R2.L7a", "R2.L7b", "R2.L8a", "R2.L8b", "R2.L9", "R2.L10a", "R2.L10b", "R2.L11"]

pytestmark = pytest.mark.slow


def _params_match(got, want, atol=1e-6):
    for k, v in want.items():
        if isinstance(v, int):
            if got[k] != v:
                return False
        elif abs(got[k] - v) > atol:
            return False
    return True


def _round_trip(fids, draws, scrambles, seed):
    failures = []
    total = 0
    for fid in fids:
        rng = np.random.default_rng([seed, catalog.get_family(fid).form])
        for d in range(draws):
            form = catalog.CanonicalForm(fid, catalog.sample_params(fid, rng))
            spec = oracle.ScrambleSpec(seed=int(rng.integers(1 << 31)), magnitude=1.0, count=scrambles)
            for q in oracle.scramble(form, spec):
                total += 1
                try:
                    r = classify_block(q, check_indecomposable=True)
                except Exception as exc:  # any failure counts against the criterion
                    failures.append((fid, form.params, type(exc).__name__))
                    continue
                if r is None or r.family != fid or not _params_match(r.params, form.params) \
                        or r.residual > 1e-6:
                    failures.append((fid, form.params, None if r is None else (r.family, r.params, r.residual)))
    return total, failures


def test_criterion1_rank1_round_trip(acceptance_line):
    t0 = time.perf_counter()
    total, failures = _round_trip(RANK1, 50, 20, seed=1)
    dt = time.perf_counter() - t0
    ok = not failures and total == 6000 and dt < 30
    acceptance_line("criterion 1 rank-1 round trip", ok, f"{total - len(failures)}/{total} in {dt:.1f}s")
    assert not failures, failures[:5]
    assert dt < 30


def test_criterion2_rank2_constructive(acceptance_line):
    t0 = time.perf_counter()
    total, failures = _round_trip(RANK2_CONSTRUCTIVE, 50, 20, seed=2)
    dt = time.perf_counter() - t0
    ok = not failures and dt < 120
    acceptance_line("criterion 2 rank-2 constructive round trip", ok,
                    f"{total - len(failures)}/{total} in {dt:.1f}s")
    assert not failures, failures[:5]
    assert dt < 120


def test_criterion3_deferred_recognition(acceptance_line):
    t0 = time.perf_counter()
    worst, wrong, per_family = 1.0, [], {}
    for fid in DEFERRED:
        rng = np.random.default_rng([3, catalog.get_family(fid).form])
        ok = tot = 0
        for d in range(10):
            form = catalog.CanonicalForm(fid, catalog.sample_params(fid, rng))
            spec = oracle.ScrambleSpec(seed=int(rng.integers(1 << 31)), magnitude=1.0, count=20)
            for q in oracle.scramble(form, spec):
                tot += 1
                try:
                    r = classify_block(q, check_indecomposable=True)
                except (NoFit, MultipleFit):
                    continue  # search exhausted: allowed
                except Exception as exc:
                    wrong.append((fid, type(exc).__name__, str(exc)))
                    continue
                if r.family == fid and _params_match(r.params, form.params) and r.residual <= 1e-6:
                    ok += 1
                else:
                    wrong.append((fid, r.family, r.params, form.params))
        per_family[fid] = ok / tot
        worst = min(worst, ok / tot)
    dt = time.perf_counter() - t0
    passed = worst >= 0.95 and not wrong and dt < 600
    acceptance_line("criterion 3 deferred recognition", passed,
                    f"worst family rate {worst:.3f}, wrong {len(wrong)}, {dt:.1f}s")
    assert not wrong, wrong[:5]
    assert worst >= 0.95, per_family
    assert dt < 600


def _distinctness_pairs(rng):
    C = catalog.construct
    lam = 0.37
    pairs = [
        ("R1.4 vs R1.5", C("R1.4", {"lambda": lam}), C("R1.5", {"lambda": lam, "r": 0.6})),
        ("R1.3 z", C("R1.3", {"lambda": lam, "z": 1}), C("R1.3", {"lambda": lam, "z": -1})),
    ]
    l6 = {
        "R2.L6a": C("R2.L6a", {"lambda": lam, "alpha": 1.1}),
        "R2.L6b": C("R2.L6b", {"lambda": lam, "r": 1.7}),
        "R2.L6c+": C("R2.L6c", {"lambda": lam, "z": 1}),
        "R2.L6c-": C("R2.L6c", {"lambda": lam, "z": -1}),
        "R2.L6d": C("R2.L6d", {"lambda": lam}),
    }
    for (na, a), (nb, b) in itertools.combinations(l6.items(), 2):
        pairs.append((f"{na} vs {nb}", a, b))
    p = catalog.sample_params("R2.L14a", rng)
    pairs.append(("R2.L14a vs R2.L14b", C("R2.L14a", p), C("R2.L14b", {k: p[k] for k in ("alpha", "beta")})))
    p = catalog.sample_params("R2.L15a", rng)
    pairs.append(("R2.L15a vs R2.L15b", C("R2.L15a", p), C("R2.L15b", {k: p[k] for k in ("alpha", "beta", "r")})))
    p = catalog.sample_params("R2.L13", rng)
    q = dict(p, z=-p["z"])
    pairs.append(("R2.L13 z", C("R2.L13", p), C("R2.L13", q)))
    return pairs


def test_criterion4_distinctness(acceptance_line):
    rng = np.random.default_rng(4)
    bad = []
    pairs = _distinctness_pairs(rng)
    for name, a, b in pairs:
        T = oracle.random_h_unitary(b.H, rng=rng, magnitude=1.0)
        for x, y in ((a, pair_transform(b, T)), (pair_transform(b, T), a)):
            r = oracle.similarity_solve(x, y)
            if r.status != "invariant-mismatch" or not r.field:
                bad.append((name, r.status, r.field))
    acceptance_line("criterion 4 distinctness", not bad, f"{2 * len(pairs) - len(bad)}/{2 * len(pairs)} conclusive")
    assert not bad, bad


def _shifted(fid, rng, shift):
    p = catalog.construct(fid, catalog.sample_params(fid, rng))
    return OperatorPair(p.N + shift * np.eye(p.n), p.H)


def test_criterion5_structural_properties(acceptance_line):
    rng = np.random.default_rng(5)
    fids = [f.id for f in catalog.families() if f.n <= 8]
    worst, failed, classes = 0.0, 0, set()
    for trial in range(100):
        while True:
            k = int(rng.integers(2, 5))
            chosen = [fids[i] for i in rng.integers(0, len(fids), k)]
            if sum(catalog.get_family(f).n for f in chosen) <= 16:
                break
        # separated spectra: each summand is shifted away from the others
        parts = [_shifted(f, rng, 12.0 * i) for i, f in enumerate(chosen)]
        p = OperatorPair(direct_sum(*[x.N for x in parts]), direct_sum(*[x.H for x in parts]))
        q = pair_transform(p, oracle.random_h_unitary(p.H, rng=rng, magnitude=1.0))
        dec = decompose(q)
        rep = verify_proposition1(q, dec.blocks, threshold=1e-8, spectrum=dec.spectrum)
        classes.update(b.eigenvalue_class for b in dec.blocks)
        worst = max(worst, max(rep.residuals.values()))
        failed += not rep.passed
    acceptance_line("criterion 5 structural properties", failed == 0,
                    f"100 constructions, worst residual {worst:.2e}, classes {''.join(sorted(classes))}")
    assert failed == 0
    assert worst <= 1e-8


def test_criterion6_algebraic_identities(acceptance_line):
    rng = np.random.default_rng(6)
    worst13 = 0.0
    for _ in range(50):
        N = catalog.construct("R1.6", catalog.sample_params("R1.6", rng)).N
        a, b, d, e = N[0, 1], N[0, 2], N[1, 3], N[2, 3]
        worst13 = max(worst13, abs(a * a + b * b - d * d - e * e))
    worst_sys = 0.0
    for fid in ("R2.L14a", "R2.L14b", "R2.L15a", "R2.L15b", "R2.L16"):
        for _ in range(10):
            p = catalog.construct(fid, catalog.sample_params(fid, rng))
            for pair in (p, pair_transform(p, oracle.random_h_unitary(p.H, rng=rng, magnitude=1.0))):
                worst_sys = max(worst_sys, max(rank2.prop2_decomposition(pair).normality_residuals()))
    worst_cat = 0.0
    for f in catalog.families():
        for _ in range(10):
            p = catalog.construct(f.id, catalog.sample_params(f.id, rng))
            ok, res = is_h_normal(p)
            assert ok
            worst_cat = max(worst_cat, res)
    ok = worst13 <= 1e-12 and worst_sys <= 1e-9 and worst_cat <= 1e-12
    acceptance_line("criterion 6 algebraic identities", ok,
                    f"quadratic {worst13:.1e}, block system {worst_sys:.1e}, catalog {worst_cat:.1e}")
    assert worst13 <= 1e-12 and worst_sys <= 1e-9 and worst_cat <= 1e-12


def test_criterion7_h_unitary_generator(acceptance_line):
    rng = np.random.default_rng(7)
    Hs = [reversal(k) for k in range(2, 9)] + [np.eye(k) for k in (2, 5, 8)]
    Hs += [np.diag(rng.choice([-1.0, 1.0], k) * rng.uniform(0.5, 2.0, k)) for k in range(2, 9)]
    worst = 0.0
    for i in range(1000):
        H = Hs[i % len(Hs)]
        T = oracle.random_h_unitary(H, rng=rng, magnitude=float(rng.uniform(0.1, 1.0)))
        worst = max(worst, np.linalg.norm(T.T @ H @ T - H))
    acceptance_line("criterion 7 H-unitary generator", worst <= 1e-10, f"worst {worst:.1e} over 1000")
    assert worst <= 1e-10


def _block_sums(rng):
    C = lambda f: catalog.construct(f, catalog.sample_params(f, rng))
    pos = lambda x: OperatorPair(np.array([[x]]), np.eye(1))
    rank1_sums = [
        [C("R1.4"), pos(5.0), pos(-3.0)],
        [C("R1.6"), pos(2.0)],
        [C("R1.5"), pos(1.5), pos(7.0), pos(-1.0)],
    ]
    rank2_sums = [
        [C("R1.1"), C("R1.3")],
        [C("R2.L16"), pos(3.0)],
        [C("R1.6"), C("R1.6"), pos(0.25)],
        [C("R2.L10a"), pos(-2.0), pos(6.0)],
    ]
    return rank1_sums, rank2_sums


def test_criterion8_dimension_bounds(acceptance_line):
    rng = np.random.default_rng(8)
    rank1_sums, rank2_sums = _block_sums(rng)
    checked, bad = 0, []
    for want_rank, lo, hi, sums in ((1, 2, 4, rank1_sums), (2, 4, 8, rank2_sums)):
        for parts in sums:
            p = OperatorPair(direct_sum(*[x.N for x in parts]), direct_sum(*[x.H for x in parts]))
            if p.rank != want_rank or lo <= p.n <= hi:
                continue
            q = pair_transform(p, oracle.random_h_unitary(p.H, rng=rng, magnitude=1.0))
            checked += 1
            try:
                r = classify_block(q, check_indecomposable=True)
                bad.append(("force-classified", q.n, r.family))
            except (DecomposableInput, DimensionOutOfTheorem):
                pass
            rep = classify(q)
            if any(b.status not in (CLASSIFIED, TRIVIAL) for b in rep.blocks):
                bad.append(("blocks not resolved", q.n, [b.status for b in rep.blocks]))
            want = sorted(catalog.recognize(x)[0] for x in parts if x.rank > 0)
            if sorted(rep.families) != want:
                bad.append(("wrong split", rep.families, want))
    acceptance_line("criterion 8 dimension bounds", not bad and checked >= 5, f"{checked} block sums checked")
    assert checked >= 5
    assert not bad, bad
