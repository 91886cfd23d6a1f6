"""End-to-end classification: decompose, then reduce every block.

Each orthogonal indecomposable block is routed by its rank. Rank-1 and
rank-2 blocks inside the covered dimensions are reduced to a catalog form;
definite (rank-0) blocks are reported as trivial, larger ranks as out of
scope.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import catalog
from .core_linalg import (
    OperatorPair,
    direct_sum,
    is_h_normal,
    real_spectrum,
)
from .errors import (
    DecomposableInput,
    DimensionOutOfTheorem,
    MultipleFit,
    NoFit,
    NotHNormal,
)
from .rank1 import ClassificationResult, classify_rank1
from .rank2 import classify_rank2

# block statuses
CLASSIFIED = "classified"
TRIVIAL = "trivial"
DECOMPOSABLE = "decomposable"
OUT_OF_SCOPE = "out-of-scope"
UNRESOLVED = "unresolved"


def classify_block(pair, tol=None, allow_deferred=True, check_indecomposable=False):
    """Reduce one indecomposable block.

    Returns
    -------
    ClassificationResult or None
        ``None`` for definite blocks and, when ``allow_deferred`` is false,
        for blocks of a clause that is only recognized by fitting.

    Raises
    ------
    DimensionOutOfTheorem
        Rank above 2 or a dimension the theory excludes.
    """
    tol = tol or pair.tol
    r = pair.rank
    if r == 0:
        return None
    if r == 1:
        return classify_rank1(pair, tol, check_indecomposable=check_indecomposable)
    if r == 2:
        return classify_rank2(pair, tol, check_indecomposable=check_indecomposable,
                              allow_deferred=allow_deferred)
    raise DimensionOutOfTheorem(f"rank {r} spaces are not covered")


@dataclass
class BlockReport:
    """Outcome for one orthogonal block.

    Attributes
    ----------
    W : ndarray
        Basis of the block in input coordinates (``W^T H W = diag(signs)``).
    status : str
        ``classified``, ``trivial``, ``decomposable``, ``out-of-scope`` or
        ``unresolved``.
    result : ClassificationResult or None
    h_sign : int
        ``-1`` when the block's Gram matrix was negated to reach
        ``v_minus <= v_plus``.
    """

    W: np.ndarray
    dim: int
    rank: int
    eigenvalue_class: str
    status: str
    result: Optional[ClassificationResult] = None
    h_sign: int = 1
    message: str = ""
    spectrum: dict = field(default_factory=dict)

    @property
    def transform(self):
        """Columns mapping the block's canonical basis into input coordinates."""
        if self.result is None:
            return self.W
        return self.W @ self.result.transform.T

    def canonical_pair(self):
        """``(N_c, H_c)`` of the block, with the sign of ``H`` restored."""
        if self.result is None:
            return None
        fam = catalog.get_family(self.result.family)
        c = catalog.construct(fam, self.result.params)
        return c.N, self.h_sign * c.H

    def to_dict(self, emit_transform=False):
        out = {
            "dim": self.dim,
            "rank": self.rank,
            "eigenvalue_class": self.eigenvalue_class,
            "status": self.status,
            "h_sign": self.h_sign,
            "spectrum": self.spectrum,
        }
        if self.message:
            out["message"] = self.message
        if self.result is not None:
            out.update(self.result.to_dict(emit_transform=False))
        if emit_transform:
            out["basis"] = self.W.tolist()
            out["T"] = self.transform.tolist()
        return out


@dataclass
class Report:
    """Classification of a full pair.

    ``pair`` is the validated input; when its ``H`` was negated to reach
    ``v_minus <= v_plus``, ``flipped`` is set and all forms refer to ``-H``.
    """

    pair: OperatorPair
    blocks: List[BlockReport]
    warnings: List[str] = field(default_factory=list)
    normality_residual: float = 0.0

    @property
    def n(self):
        return self.pair.n

    @property
    def flipped(self):
        return self.pair.flipped

    @property
    def status(self):
        st = {b.status for b in self.blocks}
        if st <= {CLASSIFIED, TRIVIAL}:
            return "ok"
        if UNRESOLVED in st:
            return "unresolved"
        return "partial"

    @property
    def families(self):
        return [b.result.family for b in self.blocks if b.result is not None]

    def transform(self):
        """Matrix whose columns are the blocks' canonical bases, in input coordinates."""
        return np.hstack([b.transform for b in self.blocks])

    def canonical_pair(self):
        """Direct sum of the block representatives, or ``None`` if incomplete.

        Definite blocks keep their restricted ``N`` in the orthonormal basis.
        """
        Ns, Hs = [], []
        N, H = self.pair.N, self.pair.H
        for b in self.blocks:
            if b.result is not None:
                Nb, Hb = b.canonical_pair()
            elif b.status == TRIVIAL:
                Hb = b.W.T @ H @ b.W
                Nb = np.linalg.solve(Hb, b.W.T @ H @ N @ b.W)
            else:
                return None
            Ns.append(Nb)
            Hs.append(Hb)
        return direct_sum(*Ns), direct_sum(*Hs)

    def certificate_residual(self):
        """``|T^{-1} N T - N_c|_F + |T^T H T - H_c|_F`` for the assembled pair."""
        cp = self.canonical_pair()
        if cp is None:
            return None
        Nc, Hc = cp
        T = self.transform()
        r1 = np.linalg.norm(np.linalg.solve(T, self.pair.N @ T) - Nc)
        r2 = np.linalg.norm(T.T @ self.pair.H @ T - Hc)
        return float(r1 + r2)

    def to_dict(self, emit_transform=False):
        return {
            "n": self.n,
            "signature": list(self.pair.signature),
            "status": self.status,
            "h_negated": self.flipped,
            "normality_residual": self.normality_residual,
            "certificate_residual": self.certificate_residual(),
            "warnings": list(self.warnings),
            "blocks": [b.to_dict(emit_transform) for b in self.blocks],
        }


def _block_spectrum(pair, tol):
    spec = real_spectrum(pair.N, tol)
    return {
        "real": [float(x) for x in spec.real_eigs],
        "complex": [[float(a), float(b)] for a, b in spec.complex_pairs],
    }


def _route(sub, tol, allow_deferred):
    """``(status, result, message)`` for one restricted block."""
    try:
        res = classify_block(sub, tol, allow_deferred=allow_deferred)
    except DecomposableInput as exc:
        return DECOMPOSABLE, None, str(exc)
    except DimensionOutOfTheorem as exc:
        return OUT_OF_SCOPE, None, str(exc)
    except (NoFit, MultipleFit) as exc:
        return UNRESOLVED, None, str(exc)
    if res is None:
        if sub.rank == 0:
            return TRIVIAL, None, "definite block"
        return UNRESOLVED, None, "recognition by fitting disabled"
    return CLASSIFIED, res, ""


def classify(pair, tol=None, allow_deferred=True, rng=None):
    """Decompose ``pair`` and classify every indecomposable block.

    Parameters
    ----------
    pair : OperatorPair
    tol : TolerancePolicy, optional
    allow_deferred : bool
        Fit templates for clauses without a constructive reduction.

    Raises
    ------
    NotHNormal
        With the commutator residual attached.
    """
    from .decomposition import full_decomposition

    tol = tol or pair.tol
    ok, res = is_h_normal(pair, tol)
    if not ok:
        raise NotHNormal("N is not H-normal", res)
    dec = full_decomposition(pair, tol, rng)
    warnings = list(dec.warnings)
    if pair.flipped:
        warnings.append("H negated so that v_minus <= v_plus")
    single = len(dec.blocks) == 1
    reports = []
    for b in dec.blocks:
        if single:
            # reduce the input itself so the certificate is exact in its coordinates
            sub, W = pair, np.eye(pair.n)
        else:
            sub, W = b.restricted_pair, b.basis.vectors
        status, result, msg = _route(sub, tol, allow_deferred)
        h_sign = -1 if (sub.flipped and not single) else 1
        if result is not None:
            warnings.extend(result.warnings)
        reports.append(BlockReport(
            W=W, dim=b.dim, rank=sub.rank, eigenvalue_class=b.eigenvalue_class,
            status=status, result=result, h_sign=h_sign, message=msg,
            spectrum=_block_spectrum(sub, tol),
        ))
    return Report(pair, reports, warnings, float(res))
