"""Canonical families of indecomposable H-normal pairs in rank 1 and rank 2.

Each family has a template ``(N(params), H)``, a parameter domain and the
observables used to route an input to it (dimension, rank, eigenvalue class,
and for one real eigenvalue the dimension of ``S0`` and whether the internal
operator splits).

Spectrum classes follow the usual pattern::

    a  one real eigenvalue          d  real eigenvalue + conjugate pair
    b  two real eigenvalues         e  two conjugate pairs
    c  one conjugate pair
"""

from dataclasses import dataclass, field
from math import cos, pi, sin
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .core_linalg import (
    DEFAULT_TOL,
    OperatorPair,
    antidiag_blocks,
    direct_sum,
    reversal,
)
from .errors import ParameterDomainViolation, ValidationError

BOUNDARY_ATOL = 1e-9

# parameter kinds
REAL = "real"
SIGN = "sign"


@dataclass(frozen=True)
class Family:
    """Static description of one canonical family."""

    id: str
    form: int
    h_form: int
    n: int
    rank: int
    spectrum_class: str
    params: Tuple[str, ...]
    kinds: Tuple[str, ...]
    domain: Tuple[str, ...]
    build: Callable = field(repr=False, compare=False)
    read: Callable = field(repr=False, compare=False)
    check: Callable = field(repr=False, compare=False)
    sample: Callable = field(repr=False, compare=False)
    H: np.ndarray = field(repr=False, compare=False)
    dim_s0: Optional[int] = None
    n1_decomposable: Optional[bool] = None
    group: str = ""

    @property
    def label(self):
        return f"form ({self.form}), H ({self.h_form})"


@dataclass(frozen=True)
class CanonicalForm:
    """A family id together with a validated parameter mapping."""

    family: str
    params: Dict[str, float]

    def __post_init__(self):
        fam = get_family(self.family)
        params = normalize_params(fam, self.params)
        object.__setattr__(self, "params", params)

    @property
    def spec(self):
        return get_family(self.family)

    def pair(self, tol=DEFAULT_TOL):
        return construct(self.family, self.params, tol=tol)

    def to_dict(self):
        return {"family": self.family, "params": dict(self.params)}


_FAMILIES: Dict[str, Family] = {}


def _lam_diag(n, lam, entries):
    N = lam * np.eye(n)
    for (i, j), v in entries.items():
        N[i, j] = v
    return N


def _rot(a, b):
    return np.array([[a, b], [-b, a]])


def _h_rank1_4():
    return antidiag_blocks(1, np.eye(2))


def _h_l5():
    H = np.zeros((6, 6))
    H[0, 5] = H[5, 0] = 1.0
    H[1:4, 1:4] = reversal(3)
    H[4, 4] = 1.0
    return H


def _register(fid, form, h_form, n, rank, cls, params, kinds, domain, build, read,
              check, sample, H, dim_s0=None, n1_decomposable=None):
    group = fid[:-1] if fid.startswith("R2") and fid[-1] in "abcd" else fid
    _FAMILIES[fid] = Family(
        fid, form, h_form, n, rank, cls, tuple(params), tuple(kinds), tuple(domain),
        build, read, check, sample, H, dim_s0, n1_decomposable, group,
    )


def _sign(x):
    return 1 if x >= 0 else -1


def _ok(*conds):
    """Collect names of violated constraints from ``(name, bool)`` tuples."""
    return [name for name, good in conds if not good]


def _angle_open(x, lo, hi):
    return lo + BOUNDARY_ATOL < x < hi - BOUNDARY_ATOL


def _u(rng, lo, hi):
    return float(rng.uniform(lo, hi))


def _pm(rng):
    return int(rng.choice([-1, 1]))


def _away(rng, lo, hi, bad, gap):
    while True:
        x = _u(rng, lo, hi)
        if abs(x - bad) > gap:
            return x


def _ordered_pair(rng):
    a = _u(rng, -2, 2)
    return a, a + _u(rng, 0.5, 2.0)


def _define_rank1():
    D2, D3 = reversal(2), reversal(3)

    _register(
        "R1.1", 1, 1, 2, 1, "b", ("lambda1", "lambda2"), (REAL, REAL), ("lambda1<lambda2",),
        lambda p: np.diag([p["lambda1"], p["lambda2"]]),
        lambda N: {"lambda1": N[0, 0], "lambda2": N[1, 1]},
        lambda p: _ok(("lambda1<lambda2", p["lambda1"] < p["lambda2"] - BOUNDARY_ATOL)),
        lambda rng: dict(zip(("lambda1", "lambda2"), _ordered_pair(rng))),
        D2,
    )
    _register(
        "R1.2", 2, 2, 2, 1, "c", ("alpha", "beta"), (REAL, REAL), ("beta>0",),
        lambda p: _rot(p["alpha"], p["beta"]),
        lambda N: {"alpha": N[0, 0], "beta": N[0, 1]},
        lambda p: _ok(("beta>0", p["beta"] > BOUNDARY_ATOL)),
        lambda rng: {"alpha": _u(rng, -2, 2), "beta": _u(rng, 0.3, 2)},
        D2,
    )
    _register(
        "R1.3", 3, 3, 2, 1, "a", ("lambda", "z"), (REAL, SIGN), ("z=+-1",),
        lambda p: _lam_diag(2, p["lambda"], {(0, 1): p["z"]}),
        lambda N: {"lambda": N[0, 0], "z": _sign(N[0, 1])},
        lambda p: [],
        lambda rng: {"lambda": _u(rng, -2, 2), "z": _pm(rng)},
        D2,
    )
    _register(
        "R1.4", 4, 4, 3, 1, "a", ("lambda",), (REAL,), (),
        lambda p: _lam_diag(3, p["lambda"], {(0, 1): 1.0, (1, 2): 1.0}),
        lambda N: {"lambda": N[0, 0]},
        lambda p: [],
        lambda rng: {"lambda": _u(rng, -2, 2)},
        D3,
    )
    _register(
        "R1.5", 5, 5, 3, 1, "a", ("lambda", "r"), (REAL, REAL), (),
        lambda p: _lam_diag(3, p["lambda"], {(0, 1): 1.0, (0, 2): p["r"], (1, 2): -1.0}),
        lambda N: {"lambda": N[0, 0], "r": N[0, 2]},
        lambda p: [],
        lambda rng: {"lambda": _u(rng, -2, 2), "r": _u(rng, -2, 2)},
        D3,
    )
    _register(
        "R1.6", 6, 6, 4, 1, "a", ("lambda", "alpha"), (REAL, REAL), ("0<alpha<pi",),
        lambda p: _lam_diag(4, p["lambda"], {
            (0, 1): 1.0, (1, 3): cos(p["alpha"]), (2, 3): sin(p["alpha"])}),
        lambda N: {"lambda": N[0, 0], "alpha": float(np.arctan2(N[2, 3], N[1, 3]))},
        lambda p: _ok(("0<alpha<pi", _angle_open(p["alpha"], 0, pi))),
        lambda rng: {"lambda": _u(rng, -2, 2), "alpha": _u(rng, 0.2, pi - 0.2)},
        _h_rank1_4(),
    )


def _define_rank2_one_real():
    D4, D5 = reversal(4), reversal(5)
    H2 = antidiag_blocks(2)
    lam = lambda rng: _u(rng, -2, 2)

    # dim S0 = 1, N1 indecomposable
    _register(
        "R2.L1", 9, 10, 4, 2, "a", ("lambda", "z"), (REAL, SIGN), ("z=+-1",),
        lambda p: _lam_diag(4, p["lambda"], {(0, 1): 1.0, (1, 2): p["z"], (2, 3): 1.0}),
        lambda N: {"lambda": N[0, 0], "z": _sign(N[1, 2])},
        lambda p: [],
        lambda rng: {"lambda": lam(rng), "z": _pm(rng)},
        D4, dim_s0=1, n1_decomposable=False,
    )
    _register(
        "R2.L2a", 11, 13, 5, 2, "a", ("lambda",), (REAL,), (),
        lambda p: _lam_diag(5, p["lambda"], {(i, i + 1): 1.0 for i in range(4)}),
        lambda N: {"lambda": N[0, 0]},
        lambda p: [],
        lambda rng: {"lambda": lam(rng)},
        D5, dim_s0=1, n1_decomposable=False,
    )
    _register(
        "R2.L2b", 12, 13, 5, 2, "a", ("lambda", "r1", "r2"), (REAL, REAL, REAL), (),
        lambda p: _lam_diag(5, p["lambda"], {
            (0, 1): 1.0, (0, 2): -p["r1"], (0, 4): p["r2"], (1, 2): 1.0, (1, 3): p["r1"],
            (2, 3): -1.0, (2, 4): -p["r1"], (3, 4): -1.0}),
        lambda N: {"lambda": N[0, 0], "r1": N[1, 3], "r2": N[0, 4]},
        lambda p: [],
        lambda rng: {"lambda": lam(rng), "r1": _u(rng, -1.5, 1.5), "r2": _u(rng, -1.5, 1.5)},
        D5, dim_s0=1, n1_decomposable=False,
    )
    # dim S0 = 1, N1 decomposable
    _register(
        "R2.L3a", 14, 16, 4, 2, "a", ("lambda", "z"), (REAL, SIGN), ("z=+-1",),
        lambda p: _lam_diag(4, p["lambda"], {(0, 1): 1.0, (1, 3): p["z"]}),
        lambda N: {"lambda": N[0, 0], "z": _sign(N[1, 3])},
        lambda p: [],
        lambda rng: {"lambda": lam(rng), "z": _pm(rng)},
        D4, dim_s0=1, n1_decomposable=True,
    )
    _register(
        "R2.L3b", 15, 16, 4, 2, "a", ("lambda", "z", "r"), (REAL, SIGN, REAL), ("z=+-1", "|r|>1"),
        lambda p: _lam_diag(4, p["lambda"], {
            (0, 1): 1.0, (0, 2): p["z"], (1, 3): p["r"], (2, 3): p["z"] / p["r"]}),
        lambda N: {"lambda": N[0, 0], "z": _sign(N[0, 2]), "r": N[1, 3]},
        lambda p: _ok(("|r|>1", abs(p["r"]) > 1 + BOUNDARY_ATOL)),
        lambda rng: {"lambda": lam(rng), "z": _pm(rng), "r": _pm(rng) * _u(rng, 1.3, 3)},
        D4, dim_s0=1, n1_decomposable=True,
    )
    _register(
        "R2.L4", 17, 18, 5, 2, "a", ("lambda", "z", "r"), (REAL, SIGN, REAL), ("z=+-1", "r>0"),
        lambda p: _lam_diag(5, p["lambda"], {
            (0, 1): 1.0, (0, 3): 0.5 * p["r"] ** 2, (1, 3): p["z"], (2, 4): p["r"], (3, 4): 1.0}),
        lambda N: {"lambda": N[0, 0], "z": _sign(N[1, 3]), "r": N[2, 4]},
        lambda p: _ok(("r>0", p["r"] > BOUNDARY_ATOL)),
        lambda rng: {"lambda": lam(rng), "z": _pm(rng), "r": _u(rng, 0.3, 2)},
        D5, dim_s0=1, n1_decomposable=True,
    )
    _register(
        "R2.L5a", 19, 21, 6, 2, "a", ("lambda", "r"), (REAL, REAL), ("r>0",),
        lambda p: _lam_diag(6, p["lambda"], {
            (0, 1): 1.0, (1, 2): 1.0, (1, 5): -p["r"] ** 2 / 2, (2, 3): 1.0, (3, 5): 1.0,
            (4, 5): p["r"]}),
        lambda N: {"lambda": N[0, 0], "r": N[4, 5]},
        lambda p: _ok(("r>0", p["r"] > BOUNDARY_ATOL)),
        lambda rng: {"lambda": lam(rng), "r": _u(rng, 0.3, 2)},
        _h_l5(), dim_s0=1, n1_decomposable=True,
    )
    _register(
        "R2.L5b", 20, 21, 6, 2, "a", ("lambda", "r1", "r2"), (REAL, REAL, REAL), ("r2>0",),
        lambda p: _lam_diag(6, p["lambda"], {
            (0, 1): 1.0, (0, 2): -2 * p["r1"], (1, 2): 1.0, (1, 3): p["r1"],
            (1, 5): -2 * p["r1"] ** 2 + p["r2"] ** 2 / 2, (2, 3): -1.0, (3, 5): -1.0,
            (4, 5): p["r2"]}),
        lambda N: {"lambda": N[0, 0], "r1": N[1, 3], "r2": N[4, 5]},
        lambda p: _ok(("r2>0", p["r2"] > BOUNDARY_ATOL)),
        lambda rng: {"lambda": lam(rng), "r1": _u(rng, -1.5, 1.5), "r2": _u(rng, 0.3, 2)},
        _h_l5(), dim_s0=1, n1_decomposable=True,
    )
    # dim S0 = 2, n = 4
    _register(
        "R2.L6a", 22, 26, 4, 2, "a", ("lambda", "alpha"), (REAL, REAL), ("0<alpha<pi",),
        lambda p: _lam_diag(4, p["lambda"], {
            (0, 2): cos(p["alpha"]), (0, 3): sin(p["alpha"]),
            (1, 2): -sin(p["alpha"]), (1, 3): cos(p["alpha"])}),
        lambda N: {"lambda": N[0, 0], "alpha": float(np.arctan2(N[0, 3], N[0, 2]))},
        lambda p: _ok(("0<alpha<pi", _angle_open(p["alpha"], 0, pi))),
        lambda rng: {"lambda": lam(rng), "alpha": _u(rng, 0.2, pi - 0.2)},
        H2, dim_s0=2,
    )
    _register(
        "R2.L6b", 23, 26, 4, 2, "a", ("lambda", "r"), (REAL, REAL), ("|r|>1",),
        lambda p: _lam_diag(4, p["lambda"], {(0, 3): 1.0, (1, 2): p["r"]}),
        lambda N: {"lambda": N[0, 0], "r": N[1, 2]},
        lambda p: _ok(("|r|>1", abs(p["r"]) > 1 + BOUNDARY_ATOL)),
        lambda rng: {"lambda": lam(rng), "r": _pm(rng) * _u(rng, 1.3, 3)},
        H2, dim_s0=2,
    )
    _register(
        "R2.L6c", 24, 26, 4, 2, "a", ("lambda", "z"), (REAL, SIGN), ("z=+-1",),
        lambda p: _lam_diag(4, p["lambda"], {
            (0, 2): 0.5 * p["z"], (0, 3): p["z"], (1, 2): -p["z"]}),
        lambda N: {"lambda": N[0, 0], "z": _sign(N[0, 3])},
        lambda p: [],
        lambda rng: {"lambda": lam(rng), "z": _pm(rng)},
        H2, dim_s0=2,
    )
    _register(
        "R2.L6d", 25, 26, 4, 2, "a", ("lambda",), (REAL,), (),
        lambda p: _lam_diag(4, p["lambda"], {(1, 2): 1.0}),
        lambda N: {"lambda": N[0, 0]},
        lambda p: [],
        lambda rng: {"lambda": lam(rng)},
        H2, dim_s0=2,
    )
    # dim S0 = 2, n = 5..8
    H7 = antidiag_blocks(2, np.eye(1))
    _register(
        "R2.L7a", 27, 29, 5, 2, "a", ("lambda", "z"), (REAL, SIGN), ("z=+-1",),
        lambda p: _lam_diag(5, p["lambda"], {(0, 2): 1.0, (1, 3): 1.0, (2, 3): p["z"]}),
        lambda N: {"lambda": N[0, 0], "z": _sign(N[2, 3])},
        lambda p: [],
        lambda rng: {"lambda": lam(rng), "z": _pm(rng)},
        H7, dim_s0=2,
    )
    _register(
        "R2.L7b", 28, 29, 5, 2, "a", ("lambda", "z", "r"), (REAL, SIGN, REAL), ("z=+-1", "r>0"),
        lambda p: _lam_diag(5, p["lambda"], {
            (0, 2): 1.0, (1, 3): p["r"], (1, 4): p["z"], (2, 3): 1.0}),
        lambda N: {"lambda": N[0, 0], "z": _sign(N[1, 4]), "r": N[1, 3]},
        lambda p: _ok(("r>0", p["r"] > BOUNDARY_ATOL)),
        lambda rng: {"lambda": lam(rng), "z": _pm(rng), "r": _u(rng, 0.3, 2)},
        H7, dim_s0=2,
    )
    H8 = antidiag_blocks(2, np.eye(2))
    _register(
        "R2.L8a", 30, 32, 6, 2, "a", ("lambda", "r"), (REAL, REAL), ("r>0",),
        lambda p: _lam_diag(6, p["lambda"], {
            (0, 2): 1.0, (1, 3): 1.0, (1, 4): p["r"], (2, 4): 1.0, (3, 5): 1.0}),
        lambda N: {"lambda": N[0, 0], "r": N[1, 4]},
        lambda p: _ok(("r>0", p["r"] > BOUNDARY_ATOL)),
        lambda rng: {"lambda": lam(rng), "r": _u(rng, 0.3, 2)},
        H8, dim_s0=2,
    )
    _register(
        "R2.L8b", 31, 32, 6, 2, "a", ("lambda", "r", "alpha"), (REAL, REAL, REAL), ("0<alpha<pi",),
        lambda p: _lam_diag(6, p["lambda"], {
            (0, 2): 1.0, (1, 3): 1.0, (1, 4): p["r"],
            (2, 4): cos(p["alpha"]), (2, 5): sin(p["alpha"]),
            (3, 4): -sin(p["alpha"]), (3, 5): cos(p["alpha"])}),
        lambda N: {"lambda": N[0, 0], "r": N[1, 4], "alpha": float(np.arctan2(N[2, 5], N[2, 4]))},
        lambda p: _ok(("0<alpha<pi", _angle_open(p["alpha"], 0, pi))),
        lambda rng: {"lambda": lam(rng), "r": _u(rng, -2, 2), "alpha": _u(rng, 0.2, pi - 0.2)},
        H8, dim_s0=2,
    )

    def build_l9(p):
        a, b = p["alpha"], p["beta"]
        return _lam_diag(7, p["lambda"], {
            (0, 2): 1.0, (1, 3): 1.0,
            (2, 5): cos(a), (2, 6): -sin(a) * cos(b),
            (3, 5): sin(a), (3, 6): cos(a) * cos(b), (4, 6): sin(b)})

    def read_l9(N):
        a = float(np.arctan2(N[3, 5], N[2, 5]))
        sa = sin(a)
        cb = -N[2, 6] / sa if abs(sa) > abs(cos(a)) else N[3, 6] / cos(a)
        return {"lambda": N[0, 0], "alpha": a, "beta": float(np.arctan2(N[4, 6], cb))}

    _register(
        "R2.L9", 33, 34, 7, 2, "a", ("lambda", "alpha", "beta"), (REAL, REAL, REAL),
        ("0<alpha<pi", "0<beta<pi"),
        build_l9, read_l9,
        lambda p: _ok(("0<alpha<pi", _angle_open(p["alpha"], 0, pi)),
                      ("0<beta<pi", _angle_open(p["beta"], 0, pi))),
        lambda rng: {"lambda": lam(rng), "alpha": _u(rng, 0.2, pi - 0.2),
                     "beta": _u(rng, 0.2, pi - 0.2)},
        antidiag_blocks(2, np.eye(3)), dim_s0=2,
    )
    H10 = antidiag_blocks(2, np.eye(4))

    def build_l10(p, gamma=None):
        a, b = p["alpha"], p["beta"]
        g = b if gamma is None else gamma
        return _lam_diag(8, p["lambda"], {
            (0, 2): 1.0, (1, 3): 1.0,
            (2, 6): cos(a) * sin(b), (2, 7): sin(a) * sin(g),
            (3, 6): -sin(a) * sin(b), (3, 7): cos(a) * sin(g),
            (4, 6): cos(b), (5, 7): cos(g)})

    _register(
        "R2.L10a", 35, 37, 8, 2, "a", ("lambda", "alpha", "beta"), (REAL, REAL, REAL),
        ("0<alpha<pi", "0<beta<pi/2"),
        build_l10,
        lambda N: {"lambda": N[0, 0],
                   "alpha": float(np.arctan2(-N[3, 6], N[2, 6])),
                   "beta": float(np.arctan2(np.hypot(N[2, 6], N[3, 6]), N[4, 6]))},
        lambda p: _ok(("0<alpha<pi", _angle_open(p["alpha"], 0, pi)),
                      ("0<beta<pi/2", _angle_open(p["beta"], 0, pi / 2))),
        lambda rng: {"lambda": lam(rng), "alpha": _u(rng, 0.2, pi - 0.2),
                     "beta": _u(rng, 0.15, pi / 2 - 0.15)},
        H10, dim_s0=2,
    )

    def sample_l10b(rng):
        b = _u(rng, 0.45, pi / 2 - 0.15)
        return {"lambda": lam(rng), "alpha": _u(rng, 0.2, pi - 0.2), "beta": b,
                "gamma": _u(rng, 0.0, b - 0.25)}

    _register(
        "R2.L10b", 36, 37, 8, 2, "a", ("lambda", "alpha", "beta", "gamma"),
        (REAL, REAL, REAL, REAL), ("0<alpha<pi", "0<=gamma<beta<pi/2"),
        lambda p: build_l10(p, p["gamma"]),
        lambda N: {"lambda": N[0, 0],
                   "alpha": float(np.arctan2(-N[3, 6], N[2, 6])),
                   "beta": float(np.arctan2(np.hypot(N[2, 6], N[3, 6]), N[4, 6])),
                   "gamma": float(np.arctan2(np.hypot(N[2, 7], N[3, 7]), N[5, 7]))},
        lambda p: _ok(("0<alpha<pi", _angle_open(p["alpha"], 0, pi)),
                      ("0<=gamma<beta<pi/2",
                       -BOUNDARY_ATOL <= p["gamma"] < p["beta"] - BOUNDARY_ATOL
                       and p["beta"] < pi / 2 - BOUNDARY_ATOL)),
        sample_l10b,
        H10, dim_s0=2,
    )


def _define_rank2_other():
    H2 = antidiag_blocks(2)

    def check_l11(p):
        # order matters only when the coupling r is present
        if abs(p["r"]) > BOUNDARY_ATOL:
            return _ok(("lambda1<lambda2 for r!=0", p["lambda1"] < p["lambda2"] - BOUNDARY_ATOL))
        return _ok(("lambda1!=lambda2", abs(p["lambda1"] - p["lambda2"]) > BOUNDARY_ATOL))

    def sample_l11(rng):
        l1, l2 = _ordered_pair(rng)
        return {"lambda1": l1, "lambda2": l2, "r": _pm(rng) * _u(rng, 0.3, 2)}

    _register(
        "R2.L11", 38, 39, 4, 2, "b", ("lambda1", "lambda2", "r"), (REAL, REAL, REAL),
        ("lambda1<lambda2 for r!=0",),
        lambda p: direct_sum(np.array([[p["lambda1"], 1.0], [0.0, p["lambda1"]]]),
                             np.array([[p["lambda2"], 0.0], [p["r"], p["lambda2"]]])),
        lambda N: {"lambda1": N[0, 0], "lambda2": N[2, 2], "r": N[3, 2]},
        check_l11, sample_l11, H2,
    )
    _register(
        "R2.L12", 40, 41, 4, 2, "d", ("lambda", "alpha", "beta"), (REAL, REAL, REAL), ("beta>0",),
        lambda p: direct_sum(_rot(p["alpha"], p["beta"]), p["lambda"] * np.eye(2)),
        lambda N: {"lambda": N[2, 2], "alpha": N[0, 0], "beta": N[0, 1]},
        lambda p: _ok(("beta>0", p["beta"] > BOUNDARY_ATOL)),
        lambda rng: {"lambda": _u(rng, -2, 2), "alpha": _u(rng, -2, 2), "beta": _u(rng, 0.3, 2)},
        H2,
    )

    def check_l13(p):
        return _ok(
            ("0<beta1<=beta2",
             BOUNDARY_ATOL < p["beta1"] <= p["beta2"] + BOUNDARY_ATOL),
            ("alpha1<alpha2 if beta1=beta2",
             abs(p["beta1"] - p["beta2"]) > BOUNDARY_ATOL
             or p["alpha1"] < p["alpha2"] - BOUNDARY_ATOL),
        )

    def sample_l13(rng):
        b1, b2 = sorted((_u(rng, 0.3, 2), _u(rng, 0.3, 2)))
        if b2 - b1 < 0.2:
            b2 = b1 + 0.3
        return {"alpha1": _u(rng, -2, 2), "beta1": b1, "alpha2": _u(rng, -2, 2),
                "beta2": b2, "z": _pm(rng)}

    _register(
        "R2.L13", 42, 43, 4, 2, "e", ("alpha1", "beta1", "alpha2", "beta2", "z"),
        (REAL, REAL, REAL, REAL, SIGN),
        ("0<beta1<=beta2", "alpha1<alpha2 if beta1=beta2", "z=+-1"),
        lambda p: direct_sum(_rot(p["alpha1"], p["beta1"]),
                             _rot(p["alpha2"], p["z"] * p["beta2"])),
        lambda N: {"alpha1": N[0, 0], "beta1": N[0, 1], "alpha2": N[2, 2],
                   "beta2": abs(N[2, 3]), "z": _sign(N[2, 3])},
        check_l13, sample_l13, H2,
    )

    ab = lambda rng: {"alpha": _u(rng, -2, 2), "beta": _u(rng, 0.3, 2)}
    beta_ok = lambda p: ("beta>0", p["beta"] > BOUNDARY_ATOL)

    def build_l14a(p):
        g = p["gamma"]
        R = _rot(p["alpha"], p["beta"])
        N = direct_sum(R, R)
        N[0:2, 2:4] = [[cos(g), sin(g)], [-sin(g), cos(g)]]
        return N

    def sample_l14a(rng):
        d = ab(rng)
        d["gamma"] = _u(rng, 0.1, 2 * pi - 0.1)
        return d

    _register(
        "R2.L14a", 44, 46, 4, 2, "c", ("alpha", "beta", "gamma"), (REAL, REAL, REAL),
        ("beta>0", "0<=gamma<2pi"),
        build_l14a,
        lambda N: {"alpha": N[0, 0], "beta": N[0, 1],
                   "gamma": float(np.arctan2(N[0, 3], N[0, 2]) % (2 * pi))},
        lambda p: _ok(beta_ok(p), ("0<=gamma<2pi", -BOUNDARY_ATOL <= p["gamma"] < 2 * pi)),
        sample_l14a, H2,
    )

    def build_l14b(p):
        a, b = p["alpha"], p["beta"]
        N = direct_sum(_rot(a, b), _rot(a, -b))
        N[0, 3] = N[1, 2] = 1.0
        return N

    _register(
        "R2.L14b", 45, 46, 4, 2, "c", ("alpha", "beta"), (REAL, REAL), ("beta>0",),
        build_l14b,
        lambda N: {"alpha": N[0, 0], "beta": N[0, 1]},
        lambda p: _ok(beta_ok(p)),
        ab, H2,
    )
    H15 = antidiag_blocks(2, np.eye(2))

    def build_l15a(p):
        a, b, g, r = p["alpha"], p["beta"], p["gamma"], p["r"]
        R = _rot(a, b)
        N = direct_sum(R, R, R)
        N[0, 5] = r
        N[1, 3] = 1.0
        N[1, 4] = (cos(g) + 1) / (4 * b) - r
        N[1, 5] = sin(g) / (4 * b)
        N[2:4, 4:6] = [[0.5 * (cos(g) + 1), 0.5 * sin(g)],
                       [-0.5 * sin(g), 0.5 * (cos(g) - 1)]]
        return N

    def sample_l15a(rng):
        d = ab(rng)
        d["gamma"] = _away(rng, 0.1, 2 * pi - 0.1, pi, 0.2)
        d["r"] = _u(rng, -2, 2)
        return d

    _register(
        "R2.L15a", 47, 49, 6, 2, "c", ("alpha", "beta", "gamma", "r"), (REAL, REAL, REAL, REAL),
        ("beta>0", "0<=gamma<2pi, gamma!=pi"),
        build_l15a,
        lambda N: {"alpha": N[0, 0], "beta": N[0, 1],
                   "gamma": float(np.arctan2(2 * N[2, 5], 2 * N[2, 4] - 1) % (2 * pi)),
                   "r": N[0, 5]},
        lambda p: _ok(beta_ok(p), ("0<=gamma<2pi, gamma!=pi",
                                   -BOUNDARY_ATOL <= p["gamma"] < 2 * pi
                                   and abs(p["gamma"] - pi) > BOUNDARY_ATOL)),
        sample_l15a, H15,
    )

    def build_l15b(p):
        R = _rot(p["alpha"], p["beta"])
        N = direct_sum(R, R, R)
        N[0, 4] = N[1, 5] = p["r"]
        N[1, 3] = 1.0
        N[3, 5] = -1.0
        return N

    def sample_l15b(rng):
        d = ab(rng)
        d["r"] = _u(rng, -2, 2)
        return d

    _register(
        "R2.L15b", 48, 49, 6, 2, "c", ("alpha", "beta", "r"), (REAL, REAL, REAL), ("beta>0",),
        build_l15b,
        lambda N: {"alpha": N[0, 0], "beta": N[0, 1], "r": N[0, 4]},
        lambda p: _ok(beta_ok(p)),
        sample_l15b, H15,
    )

    def build_l16(p):
        a, b, g, d = p["alpha"], p["beta"], p["gamma"], p["delta"]
        R = _rot(a, b)
        N = direct_sum(R, R, R, R)
        sg, cg = sin(g), cos(g)
        N[1, 3] = 1.0
        N[1, 6] = sg ** 2 / (2 * b)
        N[1, 7] = sg * cg * cos(d) / (2 * b)
        N[2, 6] = sg ** 2
        N[2, 7] = sg * cg * cos(d)
        N[3, 6] = -sg * cg * cos(d)
        N[3, 7] = -cg ** 2
        N[4, 6] = N[5, 7] = sg * cg * sin(d)
        return N

    def read_l16(N):
        s2 = N[2, 6]
        g = float(np.arctan2(np.sqrt(max(s2, 0.0)), np.sqrt(max(-N[3, 7], 0.0))))
        sc = sin(g) * cos(g)
        d = float(np.arctan2(N[4, 6] / sc, N[2, 7] / sc)) if sc != 0 else 0.0
        return {"alpha": N[0, 0], "beta": N[0, 1], "gamma": g, "delta": d}

    def sample_l16(rng):
        d = ab(rng)
        d["gamma"] = _u(rng, 0.15, pi / 2 - 0.15)
        d["delta"] = _u(rng, 0.15, pi - 0.15)
        return d

    _register(
        "R2.L16", 50, 51, 8, 2, "c", ("alpha", "beta", "gamma", "delta"),
        (REAL, REAL, REAL, REAL), ("beta>0", "0<gamma<pi/2", "0<delta<pi"),
        build_l16, read_l16,
        lambda p: _ok(beta_ok(p), ("0<gamma<pi/2", _angle_open(p["gamma"], 0, pi / 2)),
                      ("0<delta<pi", _angle_open(p["delta"], 0, pi))),
        sample_l16, antidiag_blocks(2, np.eye(4)),
    )


_define_rank1()
_define_rank2_one_real()
_define_rank2_other()

FAMILY_IDS: Tuple[str, ...] = tuple(_FAMILIES)

# families whose reduction is carried out constructively in this package
CONSTRUCTIVE = frozenset(
    [f"R1.{i}" for i in range(1, 7)]
    + ["R2.L6a", "R2.L6b", "R2.L6c", "R2.L6d", "R2.L12", "R2.L13",
       "R2.L14a", "R2.L14b", "R2.L15a", "R2.L15b", "R2.L16"]
)
DEFERRED = tuple(f for f in FAMILY_IDS if f not in CONSTRUCTIVE)


def get_family(family):
    """Look up a :class:`Family` by id (``"R2.L6a"``) or form number."""
    if isinstance(family, Family):
        return family
    if isinstance(family, (int, np.integer)):
        for f in _FAMILIES.values():
            if f.form == family:
                return f
        raise ValidationError(f"no family with form number {family}")
    try:
        return _FAMILIES[family]
    except KeyError:
        raise ValidationError(f"unknown family {family!r}") from None


def families():
    return list(_FAMILIES.values())


def family_signature(family):
    """``(v_minus, v_plus)`` of the family's form."""
    from .core_linalg import signature

    return signature(get_family(family).H)


def normalize_params(fam, params):
    """Coerce a parameter mapping to the family's names and kinds."""
    fam = get_family(fam)
    params = dict(params)
    missing = [p for p in fam.params if p not in params]
    extra = [p for p in params if p not in fam.params]
    if missing or extra:
        raise ValidationError(
            f"{fam.id} expects parameters {list(fam.params)}; "
            f"missing {missing}, unexpected {extra}"
        )
    out = {}
    for name, kind in zip(fam.params, fam.kinds):
        v = params[name]
        if kind == SIGN:
            if v not in (-1, 1, -1.0, 1.0):
                raise ParameterDomainViolation(fam.id, [f"{name}=+-1"])
            out[name] = int(v)
        else:
            v = float(v)
            if not np.isfinite(v):
                raise ValidationError(f"{name} must be finite")
            out[name] = v
    return out


def validate_params(family, params):
    """List of violated domain constraints (empty when the point is valid)."""
    fam = get_family(family)
    try:
        p = normalize_params(fam, params)
    except ParameterDomainViolation as exc:
        return list(exc.violations)
    return list(fam.check(p))


def construct(family, params, tol=DEFAULT_TOL):
    """Canonical pair of ``family`` at ``params``.

    Raises
    ------
    ParameterDomainViolation
        Naming each violated constraint.
    """
    fam = get_family(family)
    p = normalize_params(fam, params)
    bad = fam.check(p)
    if bad:
        raise ParameterDomainViolation(fam.id, bad)
    return OperatorPair(fam.build(p), fam.H.copy(), tol=tol)


def sample_params(family, rng):
    """Generic parameter point well inside the family's domain."""
    fam = get_family(family)
    return normalize_params(fam, fam.sample(rng))


def families_for(n, rank, spectrum_class, dim_s0=None, n1_decomposable=None):
    """Candidate family ids for the given observables.

    ``dim_s0`` and ``n1_decomposable`` narrow rank-2 one-real-eigenvalue
    clauses when supplied; ``None`` leaves them unconstrained.
    """
    out = []
    for f in _FAMILIES.values():
        if f.n != n or f.rank != rank or f.spectrum_class != spectrum_class:
            continue
        if dim_s0 is not None and f.dim_s0 is not None and f.dim_s0 != dim_s0:
            continue
        if n1_decomposable is not None and f.n1_decomposable is not None \
                and f.n1_decomposable != n1_decomposable:
            continue
        out.append(f.id)
    return out


def recognize(pair, tol=DEFAULT_TOL, atol=1e-9):
    """Match a pair that already is in canonical form.

    Returns ``(family_id, params)`` when some template reproduces ``N`` and
    ``H`` entrywise within ``atol`` (scaled by ``1 + |N|``), else ``None``.
    """
    N, H = pair.N, pair.H
    n = N.shape[0]
    scale = atol * (1.0 + np.abs(N).max())
    for f in _FAMILIES.values():
        if f.n != n or np.abs(f.H - H).max() > atol:
            continue
        try:
            p = normalize_params(f, f.read(N))
        except (ValidationError, ZeroDivisionError, FloatingPointError):
            continue
        if f.check(p):
            continue
        if np.abs(f.build(p) - N).max() <= scale:
            return f.id, p
    return None


def atlas(rank=None, n=None):
    """Machine-readable rows describing each family."""
    rows = []
    for f in _FAMILIES.values():
        if rank is not None and f.rank != rank:
            continue
        if n is not None and f.n != n:
            continue
        rows.append({
            "family": f.id,
            "form": f.form,
            "h_form": f.h_form,
            "n": f.n,
            "rank": f.rank,
            "spectrum_class": f.spectrum_class,
            "params": list(f.params),
            "param_kinds": list(f.kinds),
            "domain": list(f.domain),
            "dim_s0": f.dim_s0,
            "n1_decomposable": f.n1_decomposable,
            "H": f.H.tolist(),
            "reduction": "constructive" if f.id in CONSTRUCTIVE else "fitted",
        })
    return rows
