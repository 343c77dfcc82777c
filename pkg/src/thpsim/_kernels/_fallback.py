"""Pure numpy implementation of the batched greedy scheduling kernel.

Kept numerically interchangeable with the compiled ``_greedy`` extension;
``tests/test_kernels.py`` checks the two against each other.
"""

import numpy as np


def greedy_batch(hhat, num, den, tol=1e-12, omega_all=None):
    """Run the greedy user selection for a batch of independent trials.

    Parameters
    ----------
    hhat : complex ndarray, shape (T, K, nT)
        Unit-norm quantized directions per trial and user.
    num, den : float ndarray, shape (T, K)
        Per-user metric factors: ``gamma_k(n) = num_k * omega_k(n) / den_k``.
    tol : float
        Residual-norm threshold below which a selected direction is degenerate.
    omega_all : float ndarray, shape (T, nT, K), optional
        Filled with every candidate's ``omega_k(n)``; NaN for users already
        selected.

    Returns
    -------
    sel : int64 (T, nT)
    omega : float (T, nT)
        Residual norm squared of each selected user at its iteration.
    gamma : float (T, nT)
    basis : complex (T, nT, nT)
        Row ``n`` is the n-th orthonormal basis vector.
    status : int64 (T,)
        0 on success, otherwise the 1-based iteration that hit a degenerate
        residual (later outputs of that trial are undefined).
    """
    hhat = np.asarray(hhat, dtype=np.complex128)
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    T, K, nT = hhat.shape
    xi = hhat.copy()
    omega_k = np.ones((T, K))
    active = np.ones((T, K), dtype=bool)
    alive = np.ones(T, dtype=bool)
    sel = np.zeros((T, nT), dtype=np.int64)
    omega = np.zeros((T, nT))
    gamma = np.zeros((T, nT))
    basis = np.zeros((T, nT, nT), dtype=np.complex128)
    status = np.zeros(T, dtype=np.int64)
    rows = np.arange(T)
    ratio = num / den
    for n in range(nT):
        if omega_all is not None:
            omega_all[:, n, :] = np.where(active, omega_k, np.nan)
        metric = np.where(active, ratio * omega_k, -np.inf)
        s = np.argmax(metric, axis=1)
        sel[:, n] = s
        w = omega_k[rows, s]
        omega[:, n] = w
        gamma[:, n] = metric[rows, s]
        bad = alive & (w < tol * tol)
        status[bad] = n + 1
        alive &= ~bad
        active[rows, s] = False
        if n == nT - 1:
            break
        v = xi[rows, s].copy()
        # Second projection sweep against the existing basis.
        for j in range(n):
            c = np.einsum("tn,tn->t", v, basis[:, j].conj())
            v -= c[:, None] * basis[:, j]
        vn = np.sqrt(np.einsum("tn,tn->t", v, v.conj()).real)
        vn[~alive] = 1.0
        q = v / vn[:, None]
        basis[:, n] = q
        c = np.einsum("tkn,tn->tk", xi, q.conj())
        xi -= c[:, :, None] * q[:, None, :]
        omega_k = np.einsum("tkn,tkn->tk", xi, xi.conj()).real
    last = nT - 1
    v = xi[rows, sel[:, last]].copy()
    for j in range(last):
        c = np.einsum("tn,tn->t", v, basis[:, j].conj())
        v -= c[:, None] * basis[:, j]
    vn = np.sqrt(np.einsum("tn,tn->t", v, v.conj()).real)
    vn[status != 0] = 1.0
    basis[:, last] = v / vn[:, None]
    return sel, omega, gamma, basis, status
