"""Dense small-matrix kernel for real spaces with an indefinite scalar product.

The scalar product is ``[x, y] = (Hx, y)`` with ``H`` real symmetric and
nondegenerate. Matrices are plain ``float64`` numpy arrays.
"""

import os
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import eigen
from .errors import NondegenerateViolation, SingularTransform, ValidationError

# Eigenvalue groups are separated only when the spectral projector between
# them has norm at most SPLIT_KAPPA.
SPLIT_KAPPA = 1.0e7


@dataclass(frozen=True)
class TolerancePolicy:
    """Numerical thresholds used throughout the package.

    Attributes
    ----------
    eig_cluster_rel : float
        Relative gap below which simple eigenvalues are merged.
    residual_abs : float
        Absolute bound for matrix identities (scaled by the operand norms).
    rank_rel : float
        Relative singular-value cutoff for numerical kernels.
    """

    eig_cluster_rel: float = 1e-6
    residual_abs: float = 1e-9
    rank_rel: float = 1e-10

    def __post_init__(self):
        for name in ("eig_cluster_rel", "residual_abs", "rank_rel"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be strictly positive")
        if not self.eig_cluster_rel < 1:
            raise ValidationError("eig_cluster_rel must be < 1")

    @classmethod
    def from_env(cls, **overrides):
        """Defaults, with ``KREIN_CANON_TOL`` overriding ``residual_abs``."""
        values = {}
        env = os.environ.get("KREIN_CANON_TOL")
        if env:
            values["residual_abs"] = float(env)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


DEFAULT_TOL = TolerancePolicy()


def as_matrix(a, name="matrix"):
    """Return ``a`` as a finite 2-D float array."""
    m = np.array(a, dtype=float)
    if m.ndim != 2 or m.size == 0:
        raise ValidationError(f"{name} must be a non-empty 2-D array")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} has non-finite entries")
    return m


def reversal(r):
    """The ``r x r`` matrix with ones on the secondary diagonal."""
    return np.fliplr(np.eye(r))


def antidiag_blocks(k, middle=None):
    """``[[0, 0, I_k], [0, M, 0], [I_k, 0, 0]]`` with ``M`` optional."""
    m = 0 if middle is None else middle.shape[0]
    n = 2 * k + m
    H = np.zeros((n, n))
    H[:k, k + m:] = np.eye(k)
    H[k + m:, :k] = np.eye(k)
    if m:
        H[k:k + m, k:k + m] = middle
    return H


def direct_sum(*blocks):
    """Block-diagonal matrix of the given square blocks."""
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n))
    i = 0
    for b in blocks:
        k = b.shape[0]
        out[i:i + k, i:i + k] = b
        i += k
    return out


def rotation_block(alpha, beta):
    """``[[alpha, beta], [-beta, alpha]]``."""
    return np.array([[alpha, beta], [-beta, alpha]], dtype=float)


def signature(H, tol=DEFAULT_TOL):
    """Counts ``(v_minus, v_plus)`` of negative and positive eigenvalues of ``H``.

    Raises
    ------
    NondegenerateViolation
        If an eigenvalue lies within ``rank_rel * |H|`` of zero.
    """
    H = as_matrix(H, "H")
    w = np.linalg.eigvalsh(0.5 * (H + H.T))
    scale = max(np.max(np.abs(w)), np.finfo(float).tiny)
    if np.any(np.abs(w) <= tol.rank_rel * scale):
        raise NondegenerateViolation("H is singular within tolerance")
    return int(np.sum(w < 0)), int(np.sum(w > 0))


@dataclass(frozen=True)
class OperatorPair:
    """A pair ``(N, H)`` with ``H`` symmetric nondegenerate, ``v_minus <= v_plus``.

    Construction validates ``H`` and negates it when it has more negative
    than positive squares; ``flipped`` records that.
    """

    N: np.ndarray
    H: np.ndarray
    tol: TolerancePolicy = field(default=DEFAULT_TOL, repr=False, compare=False)
    signature: Tuple[int, int] = field(init=False)
    flipped: bool = field(init=False)

    def __post_init__(self):
        N = as_matrix(self.N, "N")
        H = as_matrix(self.H, "H")
        if N.shape[0] != N.shape[1] or H.shape != N.shape:
            raise ValidationError("N and H must be square of equal size")
        scale = max(np.abs(H).max(), 1.0)
        if np.abs(H - H.T).max() > self.tol.residual_abs * scale:
            raise NondegenerateViolation("H is not symmetric")
        H = 0.5 * (H + H.T)
        vm, vp = signature(H, self.tol)
        flipped = vm > vp
        if flipped:
            H = -H
            vm, vp = vp, vm
        N.setflags(write=False)
        H.setflags(write=False)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "signature", (vm, vp))
        object.__setattr__(self, "flipped", flipped)

    @property
    def n(self):
        return self.N.shape[0]

    @property
    def rank(self):
        """Rank of the space, ``min(v_minus, v_plus)``."""
        return min(self.signature)

    @property
    def adjoint(self):
        return h_adjoint(self.N, self.H)


@dataclass(frozen=True)
class SubspaceBasis:
    """Columns of ``vectors`` span a subspace of ``R^n`` (possibly zero)."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        object.__setattr__(self, "vectors", v)

    @property
    def ambient_dim(self):
        return self.vectors.shape[0]

    @property
    def dim(self):
        return self.vectors.shape[1]

    @classmethod
    def span(cls, *columns):
        return cls(np.column_stack(columns))

    @classmethod
    def empty(cls, n):
        return cls(np.zeros((n, 0)))


@dataclass
class SpectrumPartition:
    """Clustered spectrum of a real matrix.

    Attributes
    ----------
    real_eigs : list of float
        Distinct real eigenvalues, ascending.
    real_mults : list of int
        Algebraic multiplicities of ``real_eigs``.
    complex_pairs : list of (float, float)
        Distinct pairs ``(alpha, beta)`` with ``beta > 0`` for ``alpha +- i beta``.
    pair_mults : list of int
        Multiplicity of each pair (count of ``alpha + i beta``).
    ambiguous : bool
        True when some clustering decision was within a factor 10 of its
        threshold.
    raw : ndarray
        Unclustered eigenvalues as returned by the kernel.
    """

    real_eigs: List[float]
    real_mults: List[int]
    complex_pairs: List[Tuple[float, float]]
    pair_mults: List[int]
    ambiguous: bool = False
    raw: Optional[np.ndarray] = None

    @property
    def p(self):
        return len(self.real_eigs)

    @property
    def q(self):
        return len(self.complex_pairs)

    def index_items(self):
        """``[(kind, value, mult)]`` in index order: reals then pairs."""
        items = [("real", lam, m) for lam, m in zip(self.real_eigs, self.real_mults)]
        items += [("pair", ab, m) for ab, m in zip(self.complex_pairs, self.pair_mults)]
        return items


def h_adjoint(A, H):
    """``H^{-1} A^T H``, the adjoint of ``A`` for ``[x, y] = (Hx, y)``."""
    A = as_matrix(A, "A")
    H = as_matrix(H, "H")
    if A.shape != H.shape or A.shape[0] != A.shape[1]:
        raise ValidationError("A and H must be square of equal size")
    try:
        cond = np.linalg.cond(H)
    except np.linalg.LinAlgError:
        cond = np.inf
    if not np.isfinite(cond) or cond * DEFAULT_TOL.rank_rel > 1:
        raise NondegenerateViolation("H is singular within tolerance")
    return np.linalg.solve(H, A.T @ H)


def commutator_residual(pair):
    """``|N N^[*] - N^[*] N|_F`` for the pair."""
    Ns = pair.adjoint
    return float(np.linalg.norm(pair.N @ Ns - Ns @ pair.N))


def is_h_normal(pair, tol=DEFAULT_TOL):
    """Whether ``N`` commutes with its ``H``-adjoint.

    Returns
    -------
    ok : bool
    residual : float
        ``|N N^[*] - N^[*] N|_F``; accepted when at most
        ``residual_abs * (1 + |N|^2)``.
    """
    res = commutator_residual(pair)
    bound = tol.residual_abs * (1.0 + np.linalg.norm(pair.N) ** 2)
    return res <= bound, res


def is_h_unitary(T, H, tol=DEFAULT_TOL):
    """Whether ``T^T H T = H``; returns ``(ok, residual)``."""
    T = as_matrix(T, "T")
    H = as_matrix(H, "H")
    res = float(np.linalg.norm(T.T @ H @ T - H))
    bound = tol.residual_abs * (1.0 + np.linalg.norm(T) ** 2) * max(np.linalg.norm(H), 1.0)
    return res <= bound, res


def pair_transform(pair, T):
    """The unitarily similar pair ``(T^{-1} N T, T^T H T)``.

    Raises
    ------
    SingularTransform
        If ``T`` is singular within tolerance.
    """
    T = as_matrix(T, "T")
    if T.shape != pair.N.shape:
        raise ValidationError("T has the wrong shape")
    s = np.linalg.svd(T, compute_uv=False)
    if s[-1] <= pair.tol.rank_rel * s[0]:
        raise SingularTransform("T is singular within tolerance")
    N2 = np.linalg.solve(T, pair.N @ T)
    H2 = T.T @ pair.H @ T
    return OperatorPair(N2, 0.5 * (H2 + H2.T), tol=pair.tol)


def indefinite_product(x, y, H):
    """``[x, y] = (Hx, y)``."""
    return float(np.asarray(y, dtype=float) @ (np.asarray(H, dtype=float) @ np.asarray(x, dtype=float)))


def gram(V, H):
    """Gram matrix ``V^T H V`` of a basis (array or :class:`SubspaceBasis`)."""
    V = V.vectors if isinstance(V, SubspaceBasis) else np.asarray(V, dtype=float)
    return V.T @ H @ V


def is_neutral(V, H, tol=DEFAULT_TOL):
    """True iff every pair of vectors of ``V`` has zero scalar product."""
    if V.dim == 0:
        return True
    G = gram(V, H)
    scale = np.linalg.norm(H, 2) * np.linalg.norm(V.vectors, 2) ** 2
    return bool(np.abs(G).max() <= np.sqrt(tol.rank_rel) * scale)


def is_nondegenerate(V, H, tol=DEFAULT_TOL):
    """True iff the restriction of the form to ``V`` is nonsingular."""
    if V.dim == 0:
        return True
    G = gram(V, H)
    s = np.linalg.svd(G, compute_uv=False)
    scale = np.linalg.norm(H, 2) * np.linalg.norm(V.vectors, 2) ** 2
    return bool(s[-1] > np.sqrt(tol.rank_rel) * scale)


def kernel(A, tol=DEFAULT_TOL, rank_rel=None):
    """Orthonormal basis of the numerical nullspace of ``A``.

    Singular values at most ``rank_rel * sigma_max`` count as zero.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[1]
    cutoff = tol.rank_rel if rank_rel is None else rank_rel
    if A.shape[0] == 0:
        return SubspaceBasis(np.eye(n))
    _, s, vt = np.linalg.svd(A, full_matrices=True)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return SubspaceBasis(np.eye(n))
    rank = int(np.sum(s > cutoff * smax))
    return SubspaceBasis(vt[rank:].T.copy())


def h_orth_complement(V, H, tol=DEFAULT_TOL):
    """Basis of ``V^[perp] = {x : [x, v] = 0 for all v in V}``."""
    n = H.shape[0]
    if V.dim == 0:
        return SubspaceBasis(np.eye(n))
    M = (H @ V.vectors).T
    return kernel(M / max(np.linalg.norm(M, 2), np.finfo(float).tiny), tol)


def orth(V, tol=DEFAULT_TOL):
    """Orthonormal basis of the column span of ``V``."""
    V = np.asarray(V, dtype=float)
    if V.size == 0:
        return np.zeros((V.shape[0], 0))
    u, s, _ = np.linalg.svd(V, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((V.shape[0], 0))
    r = int(np.sum(s > tol.rank_rel * s[0]))
    return u[:, :r]


def intersect(U, W, angle_tol=1e-6):
    """Orthonormal basis of ``span U  cap  span W``.

    ``U`` and ``W`` have orthonormal columns. Directions of ``U`` whose sine
    of the angle to ``span W`` is at most ``angle_tol`` are kept.
    """
    n = U.shape[0]
    if U.shape[1] == 0 or W.shape[1] == 0:
        return np.zeros((n, 0))
    M = U - W @ (W.T @ U)
    _, s, vt = np.linalg.svd(M, full_matrices=True)
    s = np.concatenate([s, np.zeros(U.shape[1] - s.size)])
    keep = s <= angle_tol
    return orth(U @ vt[keep].T)


def _dendrogram(points):
    """Single-linkage tree; nodes are ``(height, members, left, right)``."""
    n = len(points)
    nodes = [(0.0, [i], None, None) for i in range(n)]
    owner = list(range(n))
    edges = sorted(
        (abs(points[i] - points[j]), i, j) for i in range(n) for j in range(i + 1, n)
    )
    for d, i, j in edges:
        a, b = owner[i], owner[j]
        if a == b:
            continue
        members = nodes[a][1] + nodes[b][1]
        nodes.append((d, members, a, b))
        k = len(nodes) - 1
        for m in members:
            owner[m] = k
    return nodes


def _projector_norm(N, ev, members):
    """Norm of the spectral projector of ``N`` onto the eigenvalues ``ev[members]``."""
    from scipy.linalg import schur

    chosen = set(members)
    pts = np.asarray(ev)

    def sel(z):
        return int(np.argmin(np.abs(pts - z))) in chosen

    try:
        _, X, k = schur(N.astype(complex), output="complex", sort=sel)
        _, W, k2 = schur(N.T.astype(complex), output="complex", sort=sel)
    except (ValueError, np.linalg.LinAlgError):
        return np.inf
    if k != len(members) or k2 != len(members):
        return np.inf
    X, W = X[:, :k], W[:, :k]
    M = W.T @ X
    s = np.linalg.svd(M, compute_uv=False)
    if s[-1] == 0:
        return np.inf
    return 1.0 / s[-1]


def cluster_eigenvalues(ev, N, tol=DEFAULT_TOL, defect_aware=True):
    """Group computed eigenvalues of ``N`` into clusters of one true eigenvalue.

    Nodes of a single-linkage tree are split top-down. A node whose height is
    at most ``eig_cluster_rel * |N|`` is never split. Otherwise it is split
    when ``defect_aware`` is off, or when the spectral projector separating
    its two children has norm at most ``SPLIT_KAPPA``; perturbed defective
    eigenvalues give projectors of norm about ``eps ** (-(m-1)/m)`` and stay
    merged.

    Returns
    -------
    clusters : list of list of int
    ambiguous : bool
        Some decision fell within a factor 100 of its threshold.
    """
    ev = np.asarray(ev, dtype=complex)
    n = ev.size
    if n == 0:
        return [], False
    scale = max(np.linalg.norm(N, 2), np.finfo(float).tiny)
    strict = tol.eig_cluster_rel * scale
    nodes = _dendrogram(list(ev))
    clusters = []
    ambiguous = False
    stack = [len(nodes) - 1]
    while stack:
        k = stack.pop()
        height, members, left, right = nodes[k]
        if left is None or height <= strict:
            if left is not None and height > 0.01 * strict:
                ambiguous = True
            clusters.append(sorted(members))
            continue
        if height <= 100 * strict:
            ambiguous = True
        if defect_aware:
            kappa = _projector_norm(N, ev, nodes[left][1])
            if kappa > SPLIT_KAPPA:
                if kappa < 100 * SPLIT_KAPPA:
                    ambiguous = True
                clusters.append(sorted(members))
                continue
            if kappa > 0.01 * SPLIT_KAPPA:
                ambiguous = True
        stack.extend([left, right])
    clusters.sort(key=lambda c: c[0])
    return clusters, ambiguous


def real_spectrum(N, tol=DEFAULT_TOL, backend=None, defect_aware=True):
    """Cluster the spectrum of ``N`` into distinct reals and conjugate pairs.

    Eigenvalues come from the in-house Hessenberg + shifted QR kernel.
    """
    N = as_matrix(N, "N")
    ev = eigen.eigvals(N, backend=backend)
    scale = max(np.linalg.norm(N, 2), np.finfo(float).tiny)
    clusters, ambiguous = cluster_eigenvalues(ev, N, tol, defect_aware)
    reals, rmult, pairs, pmult = [], [], [], []
    for members in clusters:
        vals = ev[members]
        mean = vals.mean()
        spread = np.abs(vals - mean).max()
        if abs(mean.imag) <= max(tol.eig_cluster_rel * scale, spread):
            reals.append(float(mean.real))
            rmult.append(len(members))
        elif mean.imag > 0:
            pairs.append((float(mean.real), float(mean.imag)))
            pmult.append(len(members))
    order = np.argsort(reals)
    reals = [reals[i] for i in order]
    rmult = [rmult[i] for i in order]
    porder = sorted(range(len(pairs)), key=lambda i: (pairs[i][1], pairs[i][0]))
    pairs = [pairs[i] for i in porder]
    pmult = [pmult[i] for i in porder]
    return SpectrumPartition(reals, rmult, pairs, pmult, ambiguous, ev)


def h_orthonormalize(V, H, tol=DEFAULT_TOL):
    """Rebase ``V`` so its Gram matrix is ``diag(+1.., -1..)``.

    Returns
    -------
    W : ndarray
        New basis of the same span, positive vectors first.
    signs : ndarray
        Diagonal of ``W^T H W``.
    """
    G = gram(V, H)
    G = 0.5 * (G + G.T)
    w, Q = np.linalg.eigh(G)
    scale = max(np.abs(w).max(), np.finfo(float).tiny) if w.size else 1.0
    if w.size and np.abs(w).min() <= np.sqrt(tol.rank_rel) * scale:
        raise NondegenerateViolation("subspace is degenerate")
    order = np.argsort(-np.sign(w), kind="stable")
    w, Q = w[order], Q[:, order]
    W = V @ Q / np.sqrt(np.abs(w))
    return W, np.sign(w)
