"""Dense complex linear algebra used by the simulator.

Vectorization is column-stacking throughout, so that

    vec(A @ rho @ B) == kron(B.T, A) @ vec(rho)
"""
import numpy as np
import scipy.linalg


def _as_finite(a, name="a"):
    a = np.asarray(a)
    a = a.astype(complex if np.iscomplexobj(a) else float, copy=False)
    if a.ndim != 2:
        raise ValueError(f"{name} must be a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def _as_square(a, name="a"):
    a = _as_finite(a, name)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    return a


def kron(a, b):
    """Kronecker product; entry (i*p + k, j*q + l) is a[i, j] * b[k, l] for b of shape (p, q)."""
    return np.kron(_as_finite(a, "a"), _as_finite(b, "b"))


def matexp(a):
    """Matrix exponential (scaling and squaring with a Pade approximant)."""
    return scipy.linalg.expm(_as_square(a))


def frechet_exp(a, e):
    """Return ``(exp(a), D)`` where D is the derivative of exp at ``a`` in direction ``e``.

    Uses exp([[a, e], [0, a]]) = [[exp(a), D], [0, exp(a)]].
    """
    a = _as_square(a, "a")
    e = _as_square(e, "e")
    if a.shape != e.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {e.shape}")
    n = a.shape[0]
    block = np.zeros((2 * n, 2 * n), dtype=np.result_type(a, e))
    block[:n, :n] = a
    block[n:, n:] = a
    block[:n, n:] = e
    big = scipy.linalg.expm(block)
    return big[:n, :n], big[:n, n:]


def vec(rho):
    """Stack the columns of ``rho`` into a column vector of length d**2."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"vec expects a square matrix, got shape {rho.shape}")
    return rho.reshape(-1, 1, order="F")


def unvec(v, d=None):
    """Inverse of :func:`vec`. ``d`` is inferred when omitted."""
    v = np.asarray(v).reshape(-1)
    if d is None:
        d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise ValueError(f"vector of length {v.size} is not a vectorized {d}x{d} matrix")
    return v.reshape(d, d, order="F")
