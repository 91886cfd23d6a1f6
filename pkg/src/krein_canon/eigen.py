"""Backend selection for the eigenvalue kernel.

The compiled ``_eig_ext`` module is used when it imports; otherwise the
pure-Python ``_eig_py`` fallback runs. Setting ``KREIN_CANON_PURE=1`` forces
the fallback.
"""

import os

import numpy as np

from . import _eig_py

_ext = None
if os.environ.get("KREIN_CANON_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _eig_ext as _ext
    except ImportError:  # extension not built
        _ext = None

BACKEND = "cython" if _ext is not None else "python"
RETRIES = 3


def eigvals(a, backend=None):
    """Complex eigenvalues of a real square matrix via the selected kernel.

    Parameters
    ----------
    a : array_like, shape (n, n)
    backend : {None, "cython", "python"}
        Force a kernel; ``None`` uses :data:`BACKEND`.

    Returns
    -------
    ndarray of complex, shape (n,)

    Raises
    ------
    ArithmeticError
        If the QR iteration stalls on the input and on every retry.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("eigvals needs a square matrix")
    if a.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    use = backend or BACKEND
    if use == "cython" and _ext is None:
        raise RuntimeError("compiled kernel is not available")
    kernel = _ext.real_eigvals if use == "cython" else _eig_py.real_eigvals
    rng = None
    for attempt in range(RETRIES + 1):
        try:
            wr, wi = kernel(a)
            return np.asarray(wr) + 1j * np.asarray(wi)
        except ArithmeticError:
            if attempt == RETRIES:
                raise
        # a random orthogonal similarity changes the QR iteration path
        rng = rng or np.random.default_rng(a.shape[0])
        Q, _ = np.linalg.qr(rng.standard_normal(a.shape))
        a = Q.T @ a @ Q
