"""Constructive reduction of indecomposable H-normal pairs in rank-1 spaces.

Every step is an explicit change of basis. The accumulated matrix ``T``
maps the input pair onto a catalog representative,
``T^{-1} N T = N_c`` and ``T^T H T = H_c``.
"""

import warnings
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from . import catalog
from .core_linalg import (
    DEFAULT_TOL,
    SubspaceBasis,
    h_orthonormalize,
    is_h_normal,
    is_neutral,
    real_spectrum,
)
from .errors import (
    DecomposableInput,
    DimensionOutOfTheorem,
    NotHNormal,
    NotIndecomposableHint,
    RankMismatch,
)


class BoundaryWarning(UserWarning):
    """A recovered parameter sits on the edge of its open domain."""


KERNEL_CUT = 1e-8


@dataclass
class TransformRecord:
    """Product of named basis changes, ``T = steps[0] @ steps[1] @ ...``."""

    n: int
    steps: List[Tuple[str, np.ndarray]] = field(default_factory=list)

    @property
    def T(self):
        T = np.eye(self.n)
        for _, M in self.steps:
            T = T @ M
        return T

    def push(self, name, M):
        self.steps.append((name, np.asarray(M, dtype=float)))
        return self

    def extend(self, other):
        self.steps.extend(other.steps)
        return self

    def step_names(self):
        return [name for name, _ in self.steps]


@dataclass
class ClassificationResult:
    """Family, parameters and certificate of a reduction.

    ``residual`` is ``|T^{-1} N T - N_c|_F + |T^T H T - H_c|_F``.
    """

    form: catalog.CanonicalForm
    transform: TransformRecord
    residual: float
    warnings: List[str] = field(default_factory=list)
    method: str = "constructive"

    @property
    def family(self):
        return self.form.family

    @property
    def params(self):
        return self.form.params

    def to_dict(self, emit_transform=False):
        fam = catalog.get_family(self.family)
        out = {
            "family": self.family,
            "form": fam.form,
            "label": fam.label,
            "params": dict(self.params),
            "residual": self.residual,
            "method": self.method,
            "steps": self.transform.step_names(),
            "warnings": list(self.warnings),
        }
        if emit_transform:
            out["T"] = self.transform.T.tolist()
        return out


@dataclass
class TriangularDecomposition:
    """Adapted basis ``[S0 | S | S1]`` and the blocks of ``N`` in it.

    In this basis ``H = [[0, 0, I], [0, H1, 0], [I, 0, 0]]`` and ``N`` is
    block upper triangular with diagonal blocks ``N'``, ``N1``, ``N''``.
    """

    s0: SubspaceBasis
    s: SubspaceBasis
    s1: SubspaceBasis
    T: np.ndarray
    N: np.ndarray
    H: np.ndarray

    @property
    def k(self):
        return self.s0.dim

    @property
    def m(self):
        return self.s.dim

    def blocks(self):
        k, m = self.k, self.m
        sl = [slice(0, k), slice(k, k + m), slice(k + m, 2 * k + m)]
        N = self.N
        return {
            "N_prime": N[sl[0], sl[0]],
            "N1": N[sl[1], sl[1]],
            "N_second": N[sl[2], sl[2]],
            "H1": self.H[sl[1], sl[1]],
        }


def certificate(pair, T, form):
    """``|T^{-1} N T - N_c|_F + |T^T H T - H_c|_F`` for a catalog form."""
    c = catalog.construct(form.family, form.params)
    N2 = np.linalg.solve(T, pair.N @ T)
    H2 = T.T @ pair.H @ T
    return float(np.linalg.norm(N2 - c.N) + np.linalg.norm(H2 - c.H))


def certificate_bound(pair):
    return 1e-6 * (1.0 + np.linalg.norm(pair.N))


def numerical_kernel(A, cut=KERNEL_CUT, scale=0.0):
    """Orthonormal nullspace basis with a relative singular-value cutoff.

    Singular values are measured against ``max(sigma_max, scale)``; pass the
    norm of the unshifted operator so a shift that is nearly exact reads as zero.
    """
    A = np.atleast_2d(A)
    n = A.shape[1]
    _, s, vt = np.linalg.svd(A)
    top = max(s[0] if s.size else 0.0, scale)
    if top == 0.0:
        return np.eye(n)
    s = np.concatenate([s, np.zeros(n - s.size)])
    return vt[s <= cut * top].T.copy()


def s0_subspace(pair, lam, tol=DEFAULT_TOL):
    """``S0 = {x : (N - lam I) x = (N* - lam I) x = 0}``."""
    n = pair.n
    A = pair.N - lam * np.eye(n)
    B = pair.adjoint - lam * np.eye(n)
    return SubspaceBasis(numerical_kernel(np.vstack([A, B]), scale=1.0 + np.linalg.norm(pair.N, 2)))


def adapted_basis(X, H, tol=DEFAULT_TOL):
    """Complete a neutral basis ``X`` to ``T = [X | S | Y]``.

    ``Y`` is neutral with ``X^T H Y = I`` and ``S`` spans the orthogonal
    complement of ``span{X, Y}``, H-orthonormalized (positive vectors
    first). Returns ``(T, signs_of_S)``.
    """
    n, k = X.shape
    HX = H @ X
    Y0 = HX @ np.linalg.inv(X.T @ H @ HX)
    G = Y0.T @ H @ Y0
    Y = Y0 - 0.5 * X @ (0.5 * (G + G.T))
    C = np.hstack([X, Y])
    S = numerical_kernel((H @ C).T, cut=1e-12) if n > 2 * k else np.zeros((n, 0))
    if S.shape[1] != n - 2 * k:
        raise NotIndecomposableHint("S0 is not neutral")
    if S.shape[1]:
        S, signs = h_orthonormalize(S, H, tol)
    else:
        signs = np.zeros(0)
    return np.hstack([X, S, Y]), signs


def triangular_decomposition(pair, lam, tol=DEFAULT_TOL, s0=None):
    """Adapted decomposition ``R^n = S0 + S + S1`` for a single eigenvalue.

    Raises
    ------
    NotIndecomposableHint
        If ``S0`` is not neutral (the pair then splits off a block).
    """
    X = s0_subspace(pair, lam, tol).vectors if s0 is None else s0
    if X.shape[1] == 0:
        raise NotIndecomposableHint("S0 is trivial; eigenvalue or normality is off")
    if not is_neutral(SubspaceBasis(X), pair.H, tol) or 2 * X.shape[1] > pair.n:
        raise NotIndecomposableHint("S0 is not neutral")
    T, _ = adapted_basis(X, pair.H, tol)
    N = np.linalg.solve(T, pair.N @ T)
    H = T.T @ pair.H @ T
    k = X.shape[1]
    m = pair.n - 2 * k
    return TriangularDecomposition(
        SubspaceBasis(T[:, :k]), SubspaceBasis(T[:, k:k + m]), SubspaceBasis(T[:, k + m:]),
        T, N, H,
    )


def _diag(*d):
    return np.diag(np.asarray(d, dtype=float))


def _rank1_single_eigenvalue(pair, lam, tol, rec, notes):
    tri = triangular_decomposition(pair, lam, tol)
    if tri.k != 1:
        raise DecomposableInput("dim S0 differs from 1", None)
    rec.push("adapted basis S0+S+S1", tri.T)
    n = pair.n
    N = tri.N
    if n == 2:
        a = N[0, 1]
        s = np.sqrt(abs(a))
        rec.push("scale v1 by sqrt|a|", _diag(s, 1 / s))
        return "R1.3", {"lambda": lam, "z": 1 if a > 0 else -1}
    if n == 3:
        a, c = N[0, 1], N[1, 2]
        x = 1 if c / a > 0 else -1
        S = _diag(a, 1, 1 / a)
        rec.push("scale v1 by a", S)
        N = np.linalg.solve(S, N @ S)
        b = N[0, 2]
        if x == 1:
            U = np.array([[1, b / 2, -b * b / 8], [0, 1, -b / 2], [0, 0, 1]])
            rec.push("eliminate b'", U)
            return "R1.4", {"lambda": lam}
        return "R1.5", {"lambda": lam, "r": b}
    if n == 4:
        a, b = N[0, 1], N[0, 2]
        rho = np.hypot(a, b)
        c_, s_ = a / rho, b / rho
        R = np.eye(4)
        R[1:3, 1:3] = [[c_, -s_], [s_, c_]]
        rec.push("rotate S to clear b'", R)
        rec.push("scale v1 by |(a, b)|", _diag(rho, 1, 1, 1 / rho))
        T = R @ _diag(rho, 1, 1, 1 / rho)
        N = np.linalg.solve(T, N @ T)
        if N[2, 3] < 0:
            F = _diag(1, 1, -1, 1)
            rec.push("flip v3", F)
            N = F @ N @ F
        c, d, e = N[0, 3], N[1, 3], N[2, 3]
        U = np.eye(4)
        U[0, 2] = c / e
        U[0, 3] = -0.5 * c * c / (e * e)
        U[2, 3] = -c / e
        rec.push("eliminate c''", U)
        alpha = float(np.arctan2(e, d))
        if abs(np.sin(alpha)) < 1e-8:
            notes.append("alpha is at the boundary of (0, pi)")
            warnings.warn("alpha at domain boundary", BoundaryWarning)
        return "R1.6", {"lambda": lam, "alpha": alpha}
    raise DimensionOutOfTheorem(f"indecomposable rank-1 block of dimension {n}")


def _rank1_two_real(pair, spec, rec):
    lams = spec.real_eigs
    n = pair.n
    V = []
    for lam in lams:
        V.append(numerical_kernel(pair.N - lam * np.eye(n), scale=1.0 + np.linalg.norm(pair.N, 2))[:, :1])
    V = np.hstack(V)
    a = float(V[:, 0] @ pair.H @ V[:, 1])
    rec.push("eigenvectors", V)
    rec.push("normalize [v1, v2] = 1", _diag(1 / a, 1))
    return "R1.1", {"lambda1": lams[0], "lambda2": lams[1]}


def _rank1_pair(pair, spec, rec):
    alpha, beta = spec.complex_pairs[0]
    lam = complex(alpha, beta)
    w, V = np.linalg.eig(pair.N)
    z = V[:, int(np.argmin(np.abs(w - lam)))]
    X = np.column_stack([z.real, z.imag])
    rec.push("real and imaginary parts of eigenvector", X)
    H = X.T @ pair.H @ X
    a, b = H[0, 0], H[0, 1]
    # H = U^T D2 U with U = [[p, q], [-q, p]], (p + iq)^2 = b - ia
    root = np.sqrt(complex(b, -a))
    p, q = root.real, root.imag
    if p < 0:
        p, q = -p, -q
    U = np.array([[p, q], [-q, p]])
    rec.push("rescale so H = D2", np.linalg.inv(U))
    N2 = np.linalg.solve(X @ np.linalg.inv(U), pair.N @ X @ np.linalg.inv(U))
    if N2[0, 1] < 0:
        rec.push("swap via D2", np.fliplr(np.eye(2)))
    return "R1.2", {"alpha": alpha, "beta": beta}


def classify_rank1(pair, tol=None, check_indecomposable=True):
    """Reduce an indecomposable rank-1 pair to its canonical form.

    Raises
    ------
    RankMismatch
        If ``min(v_minus, v_plus) != 1``.
    DecomposableInput
        If the pair splits; the bases of the pieces are attached.
    DimensionOutOfTheorem
        If an indecomposable block has dimension outside ``[2, 4]``.
    """
    from .decomposition import split_indecomposable

    tol = tol or pair.tol
    if pair.rank != 1:
        raise RankMismatch(f"space rank is {pair.rank}, expected 1")
    ok, res = is_h_normal(pair, tol)
    if not ok:
        raise NotHNormal("N is not H-normal", res)
    if check_indecomposable:
        pieces = split_indecomposable(pair, tol)
        if len(pieces) > 1:
            raise DecomposableInput("pair is decomposable", [W for W, _ in pieces])
    spec = real_spectrum(pair.N, tol)
    rec = TransformRecord(pair.n)
    notes = []
    if spec.p == 1 and spec.q == 0:
        fam, params = _rank1_single_eigenvalue(pair, spec.real_eigs[0], tol, rec, notes)
    elif spec.p == 2 and spec.q == 0 and pair.n == 2:
        fam, params = _rank1_two_real(pair, spec, rec)
    elif spec.p == 0 and spec.q == 1 and pair.n == 2:
        fam, params = _rank1_pair(pair, spec, rec)
    else:
        raise DimensionOutOfTheorem(
            f"no rank-1 clause for n={pair.n} with {spec.p} real and {spec.q} complex points"
        )
    return finish(pair, fam, params, rec, notes)


def finish(pair, fam, params, rec, notes=None, method="constructive"):
    """Build the result, polishing ``T`` when the certificate is loose."""
    from .oracle import polish_transform

    form = catalog.CanonicalForm(fam, params)
    T = rec.T
    res = certificate(pair, T, form)
    if res > 1e-10 * (1.0 + np.linalg.norm(pair.N)):
        c = catalog.construct(fam, form.params)
        T2 = polish_transform(pair, c, T)
        res2 = certificate(pair, T2, form)
        if res2 < res:
            rec.push("Newton polish", np.linalg.solve(T, T2))
            res = certificate(pair, rec.T, form)
    return ClassificationResult(form, rec, res, list(notes or []), method)
