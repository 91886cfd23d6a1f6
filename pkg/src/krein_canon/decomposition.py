"""Orthogonal splitting of an H-normal pair by joint spectral data.

For each pair of spectral indices ``(i, j)`` the subspace ``Q_ij`` collects
vectors annihilated by ``phi_i(N)`` and ``phi_j(N*)``. The nonzero ``Q_ij``
group into mutually orthogonal nondegenerate blocks ``V_i = Q_ii`` and
``V_jk = Q_jk + Q_kj``. Blocks can be split further with the commutant
of ``{N, N*}`` until they are indecomposable.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import linalg as sla

from .core_linalg import (
    DEFAULT_TOL,
    OperatorPair,
    SpectrumPartition,
    SubspaceBasis,
    h_adjoint,
    h_orthonormalize,
    is_h_normal,
    orth,
    real_spectrum,
)
from .errors import DegenerateBlock, NotHNormal, ValidationError

__all__ = [
    "AnnihilatorPolynomial",
    "QSubspace",
    "OrthogonalBlock",
    "Decomposition",
    "SpectrumPartition",
    "phi_polynomial",
    "q_subspace",
    "decompose",
    "block_decompose",
    "verify_proposition1",
    "split_indecomposable",
    "full_decomposition",
    "spectrum_class",
]

CLASS_NAMES = {
    "a": "one real eigenvalue",
    "b": "two real eigenvalues",
    "c": "one conjugate pair",
    "d": "real eigenvalue and conjugate pair",
    "e": "two conjugate pairs",
}


@dataclass(frozen=True)
class AnnihilatorPolynomial:
    """Monic ``phi_k``; ``coeffs`` are ascending monomial coefficients.

    ``shift`` and ``base`` keep the factored form ``base(x - shift) ** power``
    used for stable evaluation on matrices.
    """

    index: int
    coeffs: np.ndarray
    degree: int
    kind: str
    value: Tuple[float, ...]
    power: int

    def __call__(self, x):
        return P.polyval(x, self.coeffs)

    def horner(self, A):
        """``phi(A)`` by Horner's scheme in the monomial basis."""
        n = A.shape[0]
        out = np.zeros_like(A, dtype=float)
        for c in self.coeffs[::-1]:
            out = out @ A + c * np.eye(n)
        return out

    def factor(self, A):
        """The base factor ``A - lam I`` or ``A^2 - 2 alpha A + (alpha^2+beta^2) I``."""
        n = A.shape[0]
        if self.kind == "real":
            return A - self.value[0] * np.eye(n)
        a, b = self.value
        return A @ A - 2 * a * A + (a * a + b * b) * np.eye(n)

    def apply_scaled(self, A, X):
        """``phi(A) X`` divided by ``|factor(A)| ** power``, one factor at a time."""
        F = self.factor(A)
        s = max(np.linalg.norm(F, 2), np.finfo(float).tiny)
        Y = np.array(X, dtype=float)
        for _ in range(self.power):
            Y = F @ Y / s
        return Y


def phi_polynomial(k, spectrum, n):
    """Annihilating polynomial ``phi_k`` of spectral index ``k`` (1-based).

    ``(x - lam_k) ** n`` for a real index, ``(x^2 - 2 a x + a^2 + b^2) ** n``
    for the pair ``a +- i b``.
    """
    items = spectrum.index_items()
    if not 1 <= k <= len(items):
        raise ValidationError(f"spectral index {k} out of range 1..{len(items)}")
    if n < 1:
        raise ValidationError("power must be positive")
    kind, value, _ = items[k - 1]
    if kind == "real":
        base = np.array([-value, 1.0])
        value = (float(value),)
    else:
        a, b = value
        base = np.array([a * a + b * b, -2 * a, 1.0])
        value = (float(a), float(b))
    coeffs = P.polypow(base, n)
    return AnnihilatorPolynomial(k, coeffs, len(coeffs) - 1, kind, value, n)


@dataclass(frozen=True)
class QSubspace:
    """``Q_ij`` with an orthonormal basis (indices are 1-based)."""

    i: int
    j: int
    basis: SubspaceBasis

    @property
    def dim(self):
        return self.basis.dim


@dataclass
class OrthogonalBlock:
    """Nondegenerate subspace invariant under ``N`` and ``N*``.

    Attributes
    ----------
    basis : SubspaceBasis
        Columns with Gram matrix ``diag(signs)``.
    kind : str
        ``"V_i"``, ``"V_jk"`` or ``"split"`` for commutant refinements.
    indices : tuple of int
        Spectral indices the block is built from.
    eigenvalue_class : str
        One of ``"a"`` .. ``"e"`` (or ``"?"`` for an unrecognized pattern).
    restricted_pair : OperatorPair
        ``(N, H)`` written in ``basis``.
    signs : ndarray
    q_subspaces : list of QSubspace
    """

    basis: SubspaceBasis
    kind: str
    indices: Tuple[int, ...]
    eigenvalue_class: str
    restricted_pair: OperatorPair
    signs: np.ndarray
    q_subspaces: List[QSubspace] = field(default_factory=list)

    @property
    def dim(self):
        return self.basis.dim

    @property
    def rank(self):
        return self.restricted_pair.rank


@dataclass
class Decomposition:
    """Result of :func:`decompose`."""

    spectrum: SpectrumPartition
    q: Dict[Tuple[int, int], QSubspace]
    blocks: List[OrthogonalBlock]
    warnings: List[str] = field(default_factory=list)
    residual: float = 0.0


def _centers(spectrum):
    return [complex(lam, 0.0) for lam in spectrum.real_eigs] + [
        complex(a, b) for a, b in spectrum.complex_pairs
    ]


def _nearest(z, centers):
    z = complex(z.real, abs(z.imag))
    return int(np.argmin([abs(z - c) for c in centers]))


def _invariant_basis(A, centers, k):
    """Orthonormal basis of the invariant subspace of ``A`` for center ``k``."""
    sel = lambda re, im: _nearest(complex(re, im), centers) == k
    _, Z, sdim = sla.schur(A, output="real", sort=sel)
    return Z[:, :sdim]


def spectral_projectors(A, spectrum):
    """Spectral projectors of ``A`` for each index of ``spectrum``.

    Right and left invariant subspaces come from ordered real Schur forms;
    ``P_k = X (W^T X)^{-1} W^T``.
    """
    centers = _centers(spectrum)
    out = []
    for k in range(len(centers)):
        X = _invariant_basis(A, centers, k)
        W = _invariant_basis(A.T, centers, k)
        if X.shape[1] != W.shape[1]:
            raise DegenerateBlock("left and right invariant subspaces disagree in size")
        if X.shape[1] == 0:
            out.append(np.zeros_like(A))
            continue
        out.append(X @ np.linalg.solve(W.T @ X, W.T))
    return out


def _range_basis(M, dim):
    if dim <= 0:
        return np.zeros((M.shape[0], 0))
    u, _, _ = np.linalg.svd(M)
    return u[:, :dim]


def _q_all(pair, spectrum):
    N, Ns = pair.N, pair.adjoint
    PN = spectral_projectors(N, spectrum)
    PS = spectral_projectors(Ns, spectrum)
    m = len(PN)
    q = {}
    for i in range(m):
        for j in range(m):
            M = PN[i] @ PS[j]
            d = int(round(np.trace(M)))
            q[(i + 1, j + 1)] = QSubspace(i + 1, j + 1, SubspaceBasis(_range_basis(M, d)))
    return q


def q_subspace(pair, spectrum, i, j, tol=DEFAULT_TOL):
    """``Q_ij``: common root vectors of ``N`` at index ``i`` and ``N*`` at ``j``."""
    m = spectrum.p + spectrum.q
    if not (1 <= i <= m and 1 <= j <= m):
        raise ValidationError(f"indices ({i}, {j}) out of range 1..{m}")
    return _q_all(pair, spectrum)[(i, j)]


def spectrum_class(kinds):
    """Eigenvalue class letter (a to e) from the kinds of the spectral points present."""
    kinds = sorted(kinds)
    table = {
        ("real",): "a",
        ("real", "real"): "b",
        ("pair",): "c",
        ("pair", "real"): "d",
        ("pair", "pair"): "e",
    }
    return table.get(tuple(kinds), "?")


def _restrict(pair, W, signs):
    """Pair written in the basis ``W`` whose Gram matrix is ``diag(signs)``."""
    G = np.diag(signs)
    Nb = G @ W.T @ pair.H @ pair.N @ W
    return OperatorPair(Nb, G, tol=pair.tol)


def _make_block(pair, vectors, kind, indices, cls, qs):
    W, signs = h_orthonormalize(vectors, pair.H, pair.tol)
    return OrthogonalBlock(
        SubspaceBasis(W), kind, tuple(indices), cls, _restrict(pair, W, signs), signs, qs
    )


def _decompose_with(pair, spectrum, tol):
    q = _q_all(pair, spectrum)
    items = spectrum.index_items()
    m = len(items)
    total = sum(s.dim for s in q.values())
    if total != pair.n:
        raise DegenerateBlock(f"Q subspaces have total dimension {total} != {pair.n}")
    blocks = []
    for i in range(1, m + 1):
        qi = q[(i, i)]
        if qi.dim:
            cls = spectrum_class([items[i - 1][0]])
            try:
                blocks.append(_make_block(pair, qi.basis.vectors, "V_i", (i,), cls, [qi]))
            except Exception as exc:
                raise DegenerateBlock(f"V_{i} is degenerate") from exc
        for k in range(i + 1, m + 1):
            a, b = q[(i, k)], q[(k, i)]
            if a.dim == 0 and b.dim == 0:
                continue
            cls = spectrum_class([items[i - 1][0], items[k - 1][0]])
            V = np.hstack([a.basis.vectors, b.basis.vectors])
            try:
                blocks.append(_make_block(pair, V, "V_jk", (i, k), cls, [a, b]))
            except Exception as exc:
                raise DegenerateBlock(f"V_{i}{k} is degenerate") from exc
    return q, blocks


def decompose(pair, tol=None):
    """Split into spectral blocks and record the ``Q_ij`` subspaces.

    Raises
    ------
    NotHNormal
        If ``N`` fails the normality test.
    DegenerateBlock
        If a block Gram matrix is singular (tolerance breakdown).
    """
    tol = tol or pair.tol
    ok, res = is_h_normal(pair, tol)
    if not ok:
        raise NotHNormal("N is not H-normal", res)
    spec = real_spectrum(pair.N, tol)
    candidates = [spec]
    notes = []
    if spec.ambiguous:
        strict = real_spectrum(pair.N, tol, defect_aware=False)
        if (strict.real_mults, strict.pair_mults) != (spec.real_mults, spec.pair_mults):
            candidates.append(strict)
            notes.append("eigenvalue clustering ambiguous; both clusterings tried")
    best = None
    errors = []
    for s in candidates:
        try:
            q, blocks = _decompose_with(pair, s, tol)
        except (DegenerateBlock, np.linalg.LinAlgError, ValidationError) as exc:
            errors.append(exc)
            continue
        d = Decomposition(s, q, blocks, list(notes))
        d.residual = verify_proposition1(pair, blocks, tol).total
        if best is None or d.residual < best.residual:
            best = d
    if best is None:
        raise errors[0] if isinstance(errors[0], DegenerateBlock) else DegenerateBlock(str(errors[0]))
    if len(candidates) > 1 and best.spectrum is not spec:
        best.warnings.append("strict clustering kept")
    return best


def block_decompose(pair, tol=None):
    """Mutually orthogonal nondegenerate blocks ``V_i``, ``V_jk``."""
    return decompose(pair, tol).blocks


@dataclass
class Prop1Report:
    """Residual and verdict per property; ``passed`` is their conjunction."""

    residuals: Dict[str, float]
    threshold: float
    diagnostics: Dict[str, float] = field(default_factory=dict)

    @property
    def checks(self):
        return {k: v <= self.threshold for k, v in self.residuals.items()}

    @property
    def passed(self):
        return all(self.checks.values())

    @property
    def total(self):
        return float(sum(self.residuals.values()))

    def to_dict(self):
        return {
            "passed": self.passed,
            "threshold": self.threshold,
            "properties": {
                k: {"residual": v, "passed": v <= self.threshold} for k, v in self.residuals.items()
            },
            "diagnostics": dict(self.diagnostics),
        }


PROPERTY_NAMES = (
    "trivial_intersections",
    "spanning",
    "invariance",
    "eigenvalue_containment",
    "orthogonality",
)


def verify_proposition1(pair, blocks, tol=None, threshold=1e-8, spectrum=None):
    """Check the five structural properties of the ``Q_ij`` family.

    Residuals are relative: subspace bases are orthonormal and operator
    residuals are divided by the operator norms.
    """
    tol = tol or pair.tol
    n = pair.n
    N, H = pair.N, pair.H
    Ns = h_adjoint(N, H)
    qs = [s for b in blocks for s in b.q_subspaces if s.dim]
    Qs = [s.basis.vectors for s in qs]
    res = dict.fromkeys(PROPERTY_NAMES, 0.0)
    if not Qs:
        res["spanning"] = 1.0
        return Prop1Report(res, threshold)
    big = np.hstack(Qs)
    sv = np.linalg.svd(big, compute_uv=False)
    dims = sum(q.shape[1] for q in Qs)
    # (1) the orthonormal bases together stay linearly independent
    smin = float(sv[-1]) if dims <= n else 0.0
    res["trivial_intersections"] = 0.0 if smin > np.sqrt(tol.rank_rel) else 1.0
    # (2) spanning
    res["spanning"] = 0.0 if dims == n else 1.0
    # (3) invariance under N and N*
    nN = max(np.linalg.norm(N, 2), np.finfo(float).tiny)
    nS = max(np.linalg.norm(Ns, 2), np.finfo(float).tiny)
    inv = 0.0
    for Q in Qs:
        proj = lambda Y: Y - Q @ (Q.T @ Y)
        inv = max(inv, np.linalg.norm(proj(N @ Q)) / nN, np.linalg.norm(proj(Ns @ Q)) / nS)
    res["invariance"] = float(inv)
    # (4) phi_i(N) and phi_j(N*) annihilate Q_ij
    spec = spectrum
    if spec is None:
        spec = real_spectrum(N, tol)
    m = spec.p + spec.q
    cont = 0.0
    for s in qs:
        if not (1 <= s.i <= m and 1 <= s.j <= m):
            cont = 1.0
            continue
        pi = phi_polynomial(s.i, spec, n)
        pj = phi_polynomial(s.j, spec, n)
        Q = s.basis.vectors
        cont = max(cont, np.linalg.norm(pi.apply_scaled(N, Q)), np.linalg.norm(pj.apply_scaled(Ns, Q)))
    res["eigenvalue_containment"] = float(cont)
    # (5) [Q_ij, Q_kl] = 0 unless (k, l) = (j, i)
    nH = np.linalg.norm(H, 2)
    orth_res = 0.0
    for a in qs:
        for b in qs:
            if (b.i, b.j) == (a.j, a.i):
                continue
            G = a.basis.vectors.T @ H @ b.basis.vectors
            orth_res = max(orth_res, np.abs(G).max() / nH)
    res["orthogonality"] = float(orth_res)
    return Prop1Report(res, threshold, {"min_singular_value": smin})


# ---------------------------------------------------------------------------
# commutant refinement


def commutant_basis(pair, rel_cut=1e-9):
    """Basis of ``{X : XN = NX, XN* = N*X}`` as a list of matrices."""
    n = pair.n
    s = max(np.linalg.norm(pair.N, 2), 1.0)
    N = pair.N / s
    Ns = h_adjoint(N, pair.H)
    I = np.eye(n)
    # column-major vec: vec(XA - AX) = (A^T kron I - I kron A) vec(X)
    A = np.vstack([np.kron(N.T, I) - np.kron(I, N), np.kron(Ns.T, I) - np.kron(I, Ns)])
    _, sv, vt = np.linalg.svd(A)
    sv = np.concatenate([sv, np.zeros(n * n - sv.size)])
    # N is normalized, so the cut is taken against unit scale
    null = vt[sv <= rel_cut * max(sv[0], 1.0)]
    return [v.reshape((n, n), order="F") for v in null]


def _spectral_split(pair, X, tol):
    """Split by the spectral groups of an H-selfadjoint commuting ``X``."""
    spec = real_spectrum(X, tol)
    if spec.p + spec.q <= 1:
        return None
    parts = []
    for P_k in spectral_projectors(X, spec):
        d = int(round(np.trace(P_k)))
        if d:
            parts.append(_range_basis(P_k, d))
    if sum(p.shape[1] for p in parts) != pair.n:
        return None
    return parts


def split_indecomposable(pair, tol=None, rng=None, tries=6):
    """Bases of indecomposable orthogonal pieces of ``pair``.

    A random H-selfadjoint element of the commutant with more than one
    spectral group yields an orthogonal splitting; pieces are refined
    recursively. Returns a list of ``(W, signs)`` in the coordinates of
    ``pair`` with ``W^T H W = diag(signs)``.
    """
    tol = tol or pair.tol
    rng = np.random.default_rng(0) if rng is None else rng
    if pair.n == 1:
        return [(np.eye(1), np.sign(np.diag(pair.H)))]
    basis = commutant_basis(pair)
    if len(basis) > 1:
        Hinv = np.linalg.inv(pair.H)
        for _ in range(tries):
            Y = sum(c * B for c, B in zip(rng.standard_normal(len(basis)), basis))
            X = Y + Hinv @ Y.T @ pair.H
            nx = np.linalg.norm(X)
            if nx == 0:
                continue
            parts = _spectral_split(pair, X / nx, tol)
            if parts is None:
                continue
            out = []
            for V in parts:
                W, signs = h_orthonormalize(orth(V), pair.H, tol)
                sub = _restrict(pair, W, signs)
                for W2, s2 in split_indecomposable(sub, tol, rng, tries):
                    out.append((W @ W2, s2 * (-1 if sub.flipped else 1)))
            return out
    W, signs = h_orthonormalize(np.eye(pair.n), pair.H, tol)
    return [(W, signs)]


def _block_from_basis(pair, W, signs, kind, indices, qs, tol):
    sub = _restrict(pair, W, signs)
    spec = real_spectrum(sub.N, tol)
    kinds = ["real"] * spec.p + ["pair"] * spec.q
    return OrthogonalBlock(SubspaceBasis(W), kind, indices, spectrum_class(kinds), sub, signs, qs)


def full_decomposition(pair, tol=None, rng=None):
    """Spectral blocks refined into indecomposable pieces.

    Returns the :class:`Decomposition` of ``pair`` with ``blocks`` replaced by
    the refined list (each piece keeps the ``Q_ij`` of its parent).
    """
    tol = tol or pair.tol
    dec = decompose(pair, tol)
    refined = []
    for b in dec.blocks:
        W0 = b.basis.vectors
        pieces = split_indecomposable(b.restricted_pair, tol, rng)
        if len(pieces) == 1:
            refined.append(b)
            continue
        for W, signs in pieces:
            refined.append(_block_from_basis(
                pair, W0 @ W, signs * (-1 if b.restricted_pair.flipped else 1),
                "split", b.indices, b.q_subspaces, tol))
    dec.blocks = refined
    return dec
