"""Pure numpy implementations of the hot kernels.

These are the reference versions; ``_kernels.pyx`` must agree with them to
round-off. They are used whenever the compiled module is missing or
``CORRWITNESS_PURE_PYTHON=1`` is set.
"""
import numpy as np

_OFF_ROWS = np.array([1, 2, 2, 3, 3, 3])
_OFF_COLS = np.array([0, 0, 1, 0, 1, 2])
_DIAG = np.arange(4)


def coherence_sweep(weights, offsets, slopes, phase):
    """Return ``sum_n w[n] exp(i (slope_j * m[n] + phase[n]))`` for every slope."""
    args = np.outer(slopes, offsets) + phase
    return np.exp(1j * args) @ weights


def params_to_factor(params):
    """Unpack 16 real parameters into the lower-triangular complex factor."""
    T = np.zeros((4, 4), dtype=complex)
    T[_DIAG, _DIAG] = params[:4]
    T[_OFF_ROWS, _OFF_COLS] = params[4::2] + 1j * params[5::2]
    return T


def factor_to_params(T):
    params = np.empty(16)
    params[:4] = T[_DIAG, _DIAG].real
    off = T[_OFF_ROWS, _OFF_COLS]
    params[4::2] = off.real
    params[5::2] = off.imag
    return params


def loglik_grad(params, kets, counts, totals, logref, floor):
    """Poisson log-likelihood of ``rho = T^dag T / Tr(T^dag T)`` and its gradient.

    ``kets`` holds one measured pure state per row. The value is
    ``sum_k c_k (ln p_k - logref_k) - N_k p_k + c_k``; with ``logref`` set to
    ``ln(c_k / N_k)`` this is zero for a perfect fit, which keeps round-off
    small near the optimum. Probabilities below ``floor`` are clamped inside
    the logarithm only.
    """
    T = params_to_factor(params)
    s = np.sum(np.abs(T) ** 2)
    if s <= 0.0:
        return -np.inf, np.zeros(16)
    U = kets @ T.T
    p = np.sum(np.abs(U) ** 2, axis=1) / s
    ok = p > floor
    logp = np.log(np.where(ok, p, floor))
    value = float(np.sum(counts * (logp - logref) - totals * p + counts))
    w = np.where(ok, counts / np.where(ok, p, 1.0), 0.0) - totals
    G = ((U * w[:, None]).T @ kets.conj() - np.dot(w, p) * T) / s
    grad = np.empty(16)
    grad[:4] = 2.0 * G[_DIAG, _DIAG].real
    off = G[_OFF_ROWS, _OFF_COLS]
    grad[4::2] = 2.0 * off.real
    grad[5::2] = 2.0 * off.imag
    return value, grad
