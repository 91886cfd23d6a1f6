"""Test-instance generation and independent verification.

* :func:`random_h_unitary` samples ``T = exp(K)`` with ``K`` skew for the
  form, so ``T^T H T = H``.
* :func:`fingerprint` collects invariants of unitary similarity.
* :func:`similarity_solve` searches for a certificate ``T`` between two pairs.
* :func:`fit_family` fits a catalog template (parameters and ``T``) to a pair.
"""

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import linalg as sla
from scipy.optimize import least_squares

from . import catalog
from .core_linalg import (
    OperatorPair,
    h_adjoint,
    pair_transform,
)
from .errors import KreinCanonError, ValidationError

# ---------------------------------------------------------------------------
# matrix exponential


def expm(A):
    """Matrix exponential (scaling and squaring, Pade approximant)."""
    return sla.expm(np.asarray(A, dtype=float))


# ---------------------------------------------------------------------------
# scrambling


@dataclass(frozen=True)
class ScrambleSpec:
    """Seeded description of a batch of random H-unitary transforms."""

    seed: int = 0
    magnitude: float = 1.0
    count: int = 1

    def __post_init__(self):
        if not self.magnitude >= 0:
            raise ValidationError("magnitude must be non-negative")
        if self.count < 0:
            raise ValidationError("count must be non-negative")

    def rng(self):
        return np.random.default_rng(self.seed)


def _as_rng(spec_or_rng):
    if isinstance(spec_or_rng, np.random.Generator):
        return spec_or_rng
    if isinstance(spec_or_rng, ScrambleSpec):
        return spec_or_rng.rng()
    return np.random.default_rng(spec_or_rng)


def random_h_unitary(H, spec=None, rng=None, magnitude=None):
    """Random ``T`` with ``T^T H T = H``.

    ``T = exp(K)`` where ``K = H^{-1} S`` for a random skew ``S``; ``K`` is
    rescaled so ``|K|_2 <= magnitude``.
    """
    H = np.asarray(H, dtype=float)
    spec = spec or ScrambleSpec()
    mag = spec.magnitude if magnitude is None else magnitude
    rng = spec.rng() if rng is None else rng
    n = H.shape[0]
    if mag == 0:
        return np.eye(n)
    S = rng.standard_normal((n, n))
    S = S - S.T
    K = np.linalg.solve(H, S)
    nk = np.linalg.norm(K, 2)
    if nk == 0:
        return np.eye(n)
    K *= mag * rng.uniform(0.25, 1.0) / nk
    T = expm(K)
    return T


def scramble_with_transforms(form, spec):
    """``[(pair, T)]`` with ``pair = pair_transform(construct(form), T)``."""
    base = form.pair() if isinstance(form, catalog.CanonicalForm) else form
    rng = spec.rng()
    out = []
    for _ in range(spec.count):
        T = random_h_unitary(base.H, spec, rng=rng)
        out.append((pair_transform(base, T), T))
    return out


def scramble(form, spec):
    """Random H-unitarily similar copies of a canonical pair."""
    return [p for p, _ in scramble_with_transforms(form, spec)]


# ---------------------------------------------------------------------------
# local refinement


def _vec(M):
    return M.reshape(-1, order="F")


def _unvec(v, n):
    return v.reshape((n, n), order="F")


def _pair_residual(N, H, T, Nc, Hc):
    R1 = N @ T - T @ Nc
    R2 = T.T @ H @ T - Hc
    return np.concatenate([_vec(R1), _vec(R2)])


def _pair_jacobian(N, H, T, Nc):
    n = N.shape[0]
    I = np.eye(n)
    J1 = np.kron(I, N) - np.kron(Nc.T, I)
    HT = H @ T
    # d(T^T H T) = dT^T H T + T^T H dT ; vec(dT^T M) = (M^T kron I) K vec(dT)
    K = np.zeros((n * n, n * n))
    for i in range(n):
        for j in range(n):
            K[j + i * n, i + j * n] = 1.0
    J2 = np.kron(HT.T, I) @ K + np.kron(I, T.T @ H)
    return np.vstack([J1, J2])


def polish_transform(pair, canon, T0, iters=8):
    """Gauss-Newton refinement of ``T`` towards ``N T = T N_c``, ``T^T H T = H_c``."""
    N, H = pair.N, pair.H
    Nc, Hc = canon.N, canon.H
    n = N.shape[0]
    T = np.array(T0, dtype=float)
    best = T
    bres = np.linalg.norm(_pair_residual(N, H, T, Nc, Hc))
    for _ in range(iters):
        r = _pair_residual(N, H, T, Nc, Hc)
        J = _pair_jacobian(N, H, T, Nc)
        d, *_ = np.linalg.lstsq(J, -r, rcond=None)
        T = T + _unvec(d, n)
        res = np.linalg.norm(_pair_residual(N, H, T, Nc, Hc))
        if res < bres:
            best, bres = T, res
        if res < 1e-15 * (1 + np.linalg.norm(N)):
            break
    return best


# ---------------------------------------------------------------------------
# fitting a template


@dataclass
class FitResult:
    """Outcome of :func:`fit_family`."""

    family: str
    params: Dict[str, float]
    T: Optional[np.ndarray]
    residual: float
    success: bool


def _congruence_to(H, Hc):
    """Some ``T`` with ``T^T H T = Hc`` (signatures must agree)."""
    def norm_basis(M):
        w, Q = np.linalg.eigh(M)
        order = np.argsort(-np.sign(w), kind="stable")
        w, Q = w[order], Q[:, order]
        return Q / np.sqrt(np.abs(w)), np.sign(w)

    A, sa = norm_basis(H)
    B, sb = norm_basis(Hc)
    if not np.array_equal(sa, sb):
        raise ValidationError("signatures differ")
    return A @ np.linalg.inv(B)


REFINE_NFEV = 200

_CONSTS = {"0": 0.0, "1": 1.0, "pi": np.pi, "pi/2": np.pi / 2, "2pi": 2 * np.pi}


def _param_intervals(fam, name):
    """Intervals whose union encloses the domain of a real parameter."""
    lo, hi = -np.inf, np.inf
    for cond in fam.domain:
        for part in cond.split(","):
            part = part.strip()
            if part == f"|{name}|>1":
                return [(-np.inf, -1.0), (1.0, np.inf)]
            if re.fullmatch(rf"{name}>0", part):
                lo = max(lo, 0.0)
            chain = re.split(r"<=|<", part)
            if name in chain and len(chain) >= 3:
                i = chain.index(name)
                below = [_CONSTS[c] for c in chain[:i] if c in _CONSTS]
                above = [_CONSTS[c] for c in chain[i + 1:] if c in _CONSTS]
                if below:
                    lo = max(lo, max(below))
                if above:
                    hi = min(hi, min(above))
    return [(lo, hi)]


def _relative_upper(fam, name):
    """Parameter that bounds ``name`` from above in a domain chain, if any."""
    for cond in fam.domain:
        chain = re.split(r"<=|<", cond)
        if name in chain:
            i = chain.index(name)
            if i + 1 < len(chain) and chain[i + 1] in fam.params:
                return chain[i + 1]
    return None


def _param_bounds(fam, name):
    """Closed hull of :func:`_param_intervals`."""
    iv = _param_intervals(fam, name)
    return min(a for a, _ in iv), max(b for _, b in iv)


def _squash(u, a, b):
    """Smooth map of ``R`` onto the interval ``[a, b]``."""
    if np.isfinite(a) and np.isfinite(b):
        return a + (b - a) * (1.0 + np.sin(u)) / 2.0
    if np.isfinite(a):
        return a + u * u
    if np.isfinite(b):
        return b - u * u
    return u


def _unsquash(t, a, b):
    if np.isfinite(a) and np.isfinite(b):
        return float(np.arcsin(np.clip(2.0 * (t - a) / (b - a) - 1.0, -1.0, 1.0)))
    if np.isfinite(a):
        return float(np.sqrt(max(t - a, 0.0)))
    if np.isfinite(b):
        return float(np.sqrt(max(b - t, 0.0)))
    return float(t)


def _transpose_perm(n):
    P = np.zeros((n * n, n * n))
    for i in range(n):
        for j in range(n):
            P[j + i * n, i + j * n] = 1.0
    return P


def _initial_transforms(pair, fam, params):
    """Structured starting guesses for ``T`` with ``T^T H T = H_c``."""
    H, Hc = pair.H, fam.H
    out = []
    if np.allclose(H, Hc, atol=1e-12, rtol=0):
        out.append(np.eye(pair.n))
    if fam.spectrum_class == "a":
        from .rank1 import triangular_decomposition

        try:
            lam = params["lambda"]
            ti = triangular_decomposition(pair, lam, pair.tol)
            tc = triangular_decomposition(fam_pair(fam, params), lam, pair.tol)
            if np.allclose(ti.H, tc.H, atol=1e-9):
                out.append(ti.T @ np.linalg.inv(tc.T))
        except Exception:
            pass
    try:
        out.append(_congruence_to(H, Hc))
    except ValidationError:
        pass
    return out


def fam_pair(fam, params):
    """Template pair at ``params`` without domain validation."""
    return OperatorPair(fam.build(params), fam.H)


def fit_family(pair, family, fixed=None, starts=6, rng=None, tol_res=1e-8, nfev=50):
    """Fit ``(T, params)`` with ``N T = T N_c(params)`` and ``T^T H T = H_c``.

    Parameters
    ----------
    fixed : dict, optional
        Parameters held fixed, typically the eigenvalues and every sign
        parameter of the family.
    starts : int
        Random restarts per parameter interval after the structured guesses.
    nfev : int
        Evaluation budget per local search, in multiples of the unknown count.

    Returns
    -------
    FitResult
        ``success`` requires a residual below ``1e-6 (1 + |N|)``, parameters
        inside the open domain and a well-conditioned ``T``.
    """
    fam = catalog.get_family(family)
    rng = np.random.default_rng(0) if rng is None else rng
    fixed = dict(fixed or {})
    n = pair.n
    if n != fam.n or pair.signature != catalog.family_signature(fam):
        return FitResult(fam.id, {}, None, np.inf, False)
    free = [p for p, k in zip(fam.params, fam.kinds) if k == catalog.REAL and p not in fixed]
    missing = [p for p, k in zip(fam.params, fam.kinds) if k != catalog.REAL and p not in fixed]
    if missing:
        raise ValidationError(f"sign parameters must be fixed: {missing}")
    N, H, Hc = pair.N, pair.H, fam.H
    k = len(free)
    iu = np.triu_indices(n)
    sel = np.ravel_multi_index((iu[0], iu[1]), (n, n), order="F")
    I = np.eye(n)
    P = _transpose_perm(n)
    scale = 1.0 + np.linalg.norm(N)
    relative = {name: _relative_upper(fam, name) for name in free}
    combos = [[]]
    for name in free:
        combos = [c + [iv] for c in combos for iv in _param_intervals(fam, name)]

    def accept(res, params, T):
        """Validated parameters and polished ``T`` for a converged fit, else ``None``."""
        if res > 1e-6 * scale:
            return None
        try:
            params = catalog.normalize_params(fam, params)
        except ValidationError:
            return None
        if fam.check(params):
            return None
        T = polish_transform(pair, fam_pair(fam, params), T, iters=2)
        cond = np.linalg.cond(T)
        if not (np.isfinite(cond) and cond < 1e12):
            return None
        return params, T

    best = None
    for bounds in combos:
        def params_of(u, bounds=bounds):
            p = dict(fixed)
            for i, name in enumerate(free):
                lo, hi = bounds[i]
                other = relative.get(name)
                if other in p:
                    # keeps chains such as gamma < beta inside the domain
                    hi = min(hi, p[other])
                p[name] = _squash(u[i], lo, hi)
            return p

        def fun(x, params_of=params_of):
            T = _unvec(x[k:], n)
            Nc = fam.build(params_of(x[:k]))
            return np.concatenate([_vec(N @ T - T @ Nc), (T.T @ H @ T - Hc)[iu]])

        def jac(x, params_of=params_of):
            T = _unvec(x[k:], n)
            Nc = fam.build(params_of(x[:k]))
            J1 = np.kron(I, N) - np.kron(Nc.T, I)
            HT = H @ T
            J2 = (np.kron(HT.T, I) @ P + np.kron(I, T.T @ H))[sel]
            Jp = np.zeros((n * n + len(sel), k))
            for i in range(k):
                h = 1e-7 * max(1.0, abs(x[i]))
                up = x[:k].copy()
                up[i] += h
                Jp[: n * n, i] = -_vec(T @ (fam.build(params_of(up)) - Nc)) / h
            return np.hstack([Jp, np.vstack([J1, J2])])

        seed_p = dict(catalog.sample_params(fam, rng))
        seed_p.update(fixed)
        guesses = _initial_transforms(pair, fam, seed_p)
        for s in range(len(guesses) + starts):
            u0 = rng.uniform(-1.5, 1.5, k)
            if s < len(guesses):
                T0 = guesses[s]
            else:
                base = guesses[s % len(guesses)] if guesses else I
                T0 = base @ random_h_unitary(Hc, magnitude=1.0, rng=rng)
            x0 = np.concatenate([u0, _vec(T0)])
            try:
                sol = least_squares(fun, x0, jac=jac, method="lm", xtol=1e-15, ftol=1e-15,
                                    gtol=1e-15, max_nfev=nfev * len(x0))
            except (ValueError, np.linalg.LinAlgError):
                continue
            res = float(np.linalg.norm(sol.fun))
            if 1e-10 * scale < res <= 1e-6 * scale:
                # a short budget can stop early; converge fully before certifying
                try:
                    ref = least_squares(fun, sol.x, jac=jac, method="lm", xtol=1e-15, ftol=1e-15,
                                        gtol=1e-15, max_nfev=REFINE_NFEV * len(x0))
                    if np.linalg.norm(ref.fun) < res:
                        sol, res = ref, float(np.linalg.norm(ref.fun))
                except (ValueError, np.linalg.LinAlgError):
                    pass
            params, T = params_of(sol.x[:k]), _unvec(sol.x[k:], n)
            if res <= tol_res * scale:
                got = accept(res, params, T)
                if got is not None:
                    return FitResult(fam.id, got[0], got[1], res, True)
            if best is None or res < best[0]:
                best = (res, params, T)
    if best is None:
        return FitResult(fam.id, {}, None, np.inf, False)
    res, params, T = best
    got = accept(res, params, T)
    if got is None:
        return FitResult(fam.id, params, T, res, False)
    return FitResult(fam.id, got[0], got[1], res, True)


# ---------------------------------------------------------------------------
# fingerprints


def _rank(M, scale, cut=1e-8):
    """Numerical rank with singular values measured against ``scale``."""
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > cut * scale))


def _kernel_chain(F, m, scale):
    """``[dim ker F^j for j = 1..m]`` via an orthonormal range chain."""
    n = F.shape[0]
    R = np.eye(n)
    dims = []
    nf = scale
    for _ in range(m):
        if R.shape[1] == 0:
            dims.append(n)
            continue
        M = F @ R
        u, s, _ = np.linalg.svd(M, full_matrices=False)
        r = int(np.sum(s > 1e-8 * nf))
        R = u[:, :r]
        dims.append(n - r)
    return dims


def _inertia(S, scale, cut=1e-8):
    """Inertia ``(neg, zero, pos)`` of ``sym(S)``; zero is relative to ``scale``."""
    S = 0.5 * (S + S.T)
    w = np.linalg.eigvalsh(S)
    z = np.abs(w) <= cut * scale
    return (int(np.sum((w < 0) & ~z)), int(np.sum(z)), int(np.sum((w > 0) & ~z)))


@dataclass
class InvariantFingerprint:
    """Invariants of unitary similarity of pairs; see :meth:`mismatch`."""

    n: int
    signature: Tuple[int, int]
    real_eigs: List[float]
    real_mults: List[int]
    complex_pairs: List[Tuple[float, float]]
    pair_mults: List[int]
    q_dims: Dict[Tuple[int, int], int]
    segre: List[List[int]]
    s0_dims: List[Tuple[int, ...]]
    classes: List[str]
    inertia: List[Tuple]
    blocks: List[Tuple[str, Dict[str, float]]] = field(default_factory=list)

    DISCRETE = ("n", "signature", "real_mults", "pair_mults", "q_dims", "segre",
                "s0_dims", "classes", "inertia")

    def mismatch(self, other, atol=1e-6):
        """Name of the first differing field, or ``None`` if all agree."""
        for name in ("n", "signature", "real_mults", "pair_mults"):
            if getattr(self, name) != getattr(other, name):
                return name
        if not np.allclose(self.real_eigs, other.real_eigs, atol=atol, rtol=0):
            return "real_eigs"
        a = np.array(self.complex_pairs, dtype=float).reshape(-1, 2)
        b = np.array(other.complex_pairs, dtype=float).reshape(-1, 2)
        if not np.allclose(a, b, atol=atol, rtol=0):
            return "complex_pairs"
        for name in self.DISCRETE[4:]:
            if getattr(self, name) != getattr(other, name):
                return name
        if len(self.blocks) != len(other.blocks):
            return "blocks"
        for (fa, pa), (fb, pb) in zip(self.blocks, other.blocks):
            if fa != fb:
                return "blocks.family"
            for key in pa:
                if key not in pb or abs(pa[key] - pb[key]) > atol:
                    return f"blocks.{fa}.{key}"
        return None

    def to_dict(self):
        return {
            "n": self.n,
            "signature": list(self.signature),
            "real_eigs": list(self.real_eigs),
            "real_mults": list(self.real_mults),
            "complex_pairs": [list(p) for p in self.complex_pairs],
            "pair_mults": list(self.pair_mults),
            "q_dims": {f"{i},{j}": d for (i, j), d in self.q_dims.items()},
            "segre": self.segre,
            "s0_dims": [list(t) for t in self.s0_dims],
            "classes": self.classes,
            "inertia": [list(map(list, t)) if isinstance(t, tuple) else t for t in self.inertia],
            "blocks": [{"family": f, "params": p} for f, p in self.blocks],
        }


def _point_operators(N, Ns, kind, value):
    n = N.shape[0]
    I = np.eye(n)
    if kind == "real":
        return N - value * I, Ns - value * I
    a, b = value
    return N @ N - 2 * a * N + (a * a + b * b) * I, Ns @ Ns - 2 * a * Ns + (a * a + b * b) * I


def fingerprint(pair, tol=None, with_blocks=True):
    """Invariant fingerprint of ``pair``.

    Discrete fields: sizes, signature, multiplicities, ``dim Q_ij``, kernel
    chains per spectral point, ``S0``-type dimensions, block classes and the
    inertia of ``sym(H W)`` for short words ``W`` in the shifted ``N`` and
    ``N*``. Scalar fields: the spectrum and, when ``with_blocks``, the
    parameters of blocks reduced constructively.
    """
    from .decomposition import full_decomposition

    tol = tol or pair.tol
    N, H = pair.N, pair.H
    Ns = h_adjoint(N, H)
    n = pair.n
    dec = full_decomposition(pair, tol)
    spec = dec.spectrum
    items = spec.index_items()
    q_dims = {k: v.dim for k, v in dec.q.items() if v.dim}
    segre, s0, inertia = [], [], []
    lin = 1.0 + np.linalg.norm(N, 2) + np.linalg.norm(Ns, 2)
    hn = np.linalg.norm(H, 2)
    for kind, value, mult in items:
        A, B = _point_operators(N, Ns, kind, value)
        # norm bound for the shifted operators, so zero words stay zero
        sa = lin if kind == "real" else lin * lin
        segre.append(_kernel_chain(A, mult, sa))
        if kind == "real":
            s0.append((n - _rank(np.vstack([A, B]), sa),))
            lam = value
            A1, B1 = N - lam * np.eye(n), Ns - lam * np.eye(n)
        else:
            a, b = value
            lam = complex(a, b)
            Nc = N.astype(complex)
            Sc = Ns.astype(complex)
            d1 = n - _rank(np.vstack([Nc - lam * np.eye(n), Sc - np.conj(lam) * np.eye(n)]), lin)
            d2 = n - _rank(np.vstack([Nc - lam * np.eye(n), Sc - lam * np.eye(n)]), lin)
            s0.append((d1, d2))
            A1, B1 = A, B
        words = []
        for i in range(4):
            for j in range(4 - i):
                if i + j == 0:
                    continue
                W = np.linalg.matrix_power(A1, i) @ np.linalg.matrix_power(B1, j)
                words.append(_inertia(H @ W, hn * sa ** (i + j)))
        inertia.append(tuple(words))
    classes = sorted(b.eigenvalue_class for b in dec.blocks)
    blocks = []
    if with_blocks:
        from .classify import classify_block

        for b in sorted(dec.blocks, key=lambda b: (b.dim, b.eigenvalue_class)):
            try:
                r = classify_block(b.restricted_pair, tol, allow_deferred=False)
            except KreinCanonError:
                blocks.append(("unresolved", {"n": b.dim}))
                continue
            if r is None:
                kind = "definite" if b.rank == 0 else "deferred"
                blocks.append((kind, {"n": b.dim}))
            else:
                blocks.append((r.family, dict(r.params)))
        blocks.sort(key=lambda t: (t[0], sorted(t[1].items())))
    return InvariantFingerprint(
        n, pair.signature, list(spec.real_eigs), list(spec.real_mults),
        list(spec.complex_pairs), list(spec.pair_mults), q_dims, segre, s0,
        classes, inertia, blocks,
    )


# ---------------------------------------------------------------------------
# similarity search


@dataclass
class SimilarityResult:
    """Outcome of :func:`similarity_solve`.

    ``status`` is ``"similar"``, ``"invariant-mismatch"`` (conclusive) or
    ``"search-exhausted"`` (inconclusive).
    """

    status: str
    T: Optional[np.ndarray] = None
    residual: float = np.inf
    field: Optional[str] = None

    @property
    def similar(self):
        return self.status == "similar"

    def to_dict(self, emit_transform=False):
        out = {"status": self.status, "residual": self.residual, "mismatched_field": self.field}
        if emit_transform and self.T is not None:
            out["T"] = self.T.tolist()
        return out


def sylvester_kernel(NA, NB, cut=1e-9):
    """Basis matrices of ``{T : NA T = T NB}``."""
    n = NA.shape[0]
    I = np.eye(n)
    L = np.kron(I, NA) - np.kron(NB.T, I)
    _, s, vt = np.linalg.svd(L)
    scale = max(s[0], np.linalg.norm(NA, 2) + np.linalg.norm(NB, 2), 1.0)
    return [_unvec(v, n) for v in vt[s <= cut * scale]]


def similarity_certificate(pairA, pairB, T):
    """``|NA T - T NB|_F + |T^T HA T - HB|_F``."""
    return float(np.linalg.norm(pairA.N @ T - T @ pairB.N) + np.linalg.norm(T.T @ pairA.H @ T - pairB.H))


def similarity_solve(pairA, pairB, tol=None, starts=40, seed=0, check_fingerprint=True):
    """Search for ``T`` with ``pairB = pair_transform(pairA, T)``.

    Non-similarity is only asserted on a fingerprint mismatch; a failed
    search is reported as ``"search-exhausted"``.
    """
    tol = tol or pairA.tol
    if pairA.n != pairB.n:
        return SimilarityResult("invariant-mismatch", field="n")
    if check_fingerprint:
        fa, fb = fingerprint(pairA, tol), fingerprint(pairB, tol)
        bad = fa.mismatch(fb)
        if bad is not None:
            return SimilarityResult("invariant-mismatch", field=bad)
    n = pairA.n
    basis = sylvester_kernel(pairA.N, pairB.N)
    if not basis:
        return SimilarityResult("search-exhausted")
    B = np.stack(basis)  # (d, n, n)
    d = B.shape[0]
    HA, HB = pairA.H, pairB.H
    iu = np.triu_indices(n)

    def T_of(c):
        return np.tensordot(c, B, axes=1)

    def fun(c):
        T = T_of(c)
        return (T.T @ HA @ T - HB)[iu]

    def jac(c):
        T = T_of(c)
        HT = HA @ T
        cols = [(Bi.T @ HT + HT.T @ Bi)[iu] for Bi in B]
        return np.column_stack(cols)

    rng = np.random.default_rng(seed)
    scale = 1.0 + np.linalg.norm(pairA.N)
    flat = B.reshape(d, -1)
    c_id, *_ = np.linalg.lstsq(flat.T, np.eye(n).reshape(-1), rcond=None)
    method = "lm" if d <= iu[0].size else "trf"
    best = None
    for s in range(starts):
        c0 = c_id if s == 0 else rng.standard_normal(d)
        try:
            sol = least_squares(fun, c0, jac=jac, method=method, xtol=1e-15, ftol=1e-15,
                                gtol=1e-15, max_nfev=400)
        except (ValueError, np.linalg.LinAlgError):
            continue
        T = T_of(sol.x)
        if np.linalg.matrix_rank(T, tol=1e-10 * max(np.linalg.norm(T), 1e-300)) < n:
            continue
        T = polish_transform(pairA, pairB, T, iters=3)
        res = similarity_certificate(pairA, pairB, T)
        if best is None or res < best[0]:
            best = (res, T)
        if res < 1e-9 * scale:
            break
    if best is not None and best[0] < 1e-6 * scale:
        return SimilarityResult("similar", best[1], best[0])
    return SimilarityResult("search-exhausted", None if best is None else best[1],
                            np.inf if best is None else best[0])
