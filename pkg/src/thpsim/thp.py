"""Tomlinson-Harashima precoding chain built from quantized directions.

The transmitter factors the scheduled quantized directions as ``Hhat_S = R Q``
(``R`` lower triangular), precodes with ``F = Q^H``, pre-subtracts interference
through the strictly lower-triangular ``B = diag(R)^-1 R - I`` with a modulo
recursion, and each receiver divides by ``g_k`` before its own modulo and
slicer.
"""

import math
from dataclasses import dataclass

import numpy as np

from .channel import complex_normal
from .errors import DimensionError, DomainError
from .numerics import lq_decompose
from .quantizer import CsiBatch

__all__ = [
    "Constellation",
    "PrecoderSet",
    "LinkLevelReport",
    "modulo",
    "build_precoders",
    "th_encode",
    "transmit_receive",
    "received_terms",
    "receiver_detect",
    "sinr_exact",
    "sum_rate",
    "zfbf_sinr",
    "zfbf_sinr_batch",
    "zfbf_baseline",
    "link_level",
]


class Constellation:
    """Unit-energy square ``M``-QAM with modulo half-width ``tau``."""

    def __init__(self, M):
        root = math.isqrt(M)
        if M < 4 or root * root != M:
            raise DomainError(f"M must be a perfect square >= 4, got {M}")
        self.M = M
        self.side = root
        self.spacing = math.sqrt(3.0 / (2.0 * (M - 1)))
        self.levels = (2.0 * np.arange(root) - (root - 1)) * self.spacing
        self.tau = root * self.spacing
        re, im = np.meshgrid(self.levels, self.levels, indexing="ij")
        # Lexicographic order: real part first, then imaginary part.
        self.points = (re + 1j * im).ravel()

    def __repr__(self):
        return f"Constellation(M={self.M})"

    def _axis_index(self, u):
        pos = (u / self.spacing + (self.side - 1)) / 2.0
        # ceil(pos - 1/2) sends exact midpoints to the lower level.
        return np.clip(np.ceil(pos - 0.5), 0, self.side - 1).astype(np.int64)

    def slice_index(self, z):
        z = np.asarray(z)
        return self._axis_index(z.real) * self.side + self._axis_index(z.imag)

    def random_symbols(self, gen, shape):
        return self.points[gen.integers(0, self.M, size=shape)]


def modulo(z, tau):
    """Fold real and imaginary parts into ``[-tau, tau)``."""
    if not tau > 0:
        raise DomainError("tau must be positive")
    z = np.asarray(z)
    two_tau = 2.0 * tau

    def fold(a):
        r = a - two_tau * np.floor((a + tau) / two_tau)
        # Rounding can land one ulp outside [-tau, tau).
        r = np.where(r < -tau, r + two_tau, r)
        return np.where(r >= tau, r - two_tau, r)

    out = fold(z.real) + 1j * fold(z.imag)
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PrecoderSet:
    """Transmit and receive filters for one schedule.

    ``F`` is ``nT x L``, ``Bmat`` is ``L x L`` strictly lower triangular,
    ``G`` holds the real receiver gains ``g_k``; ``R``/``Q`` are the LQ
    factors of the scheduled quantized directions.
    """

    users: tuple
    F: np.ndarray
    Bmat: np.ndarray
    G: np.ndarray
    R: np.ndarray
    Q: np.ndarray
    kappa: float
    tau: float

    @property
    def L(self):
        return len(self.users)


def _scheduled(csi, users):
    if isinstance(csi, CsiBatch):
        idx = list(users)
        return CsiBatch(
            hhat=csi.hhat[idx], htilde=csi.htilde[idx], rho2=csi.rho2[idx],
            cos2=csi.cos2[idx], sin2=csi.sin2[idx], index=csi.index[idx],
        )
    by_user = {c.user: c for c in csi}
    return CsiBatch.from_list([by_user[u] for u in users])


def build_precoders(sched, csi, params):
    """Construct ``F``, ``B``, ``G`` and ``kappa`` for a complete schedule."""
    if sched.L != params.nT:
        raise DimensionError(f"schedule has {sched.L} users, expected L = nT = {params.nT}")
    s = _scheduled(csi, sched.users)
    lq = lq_decompose(s.hhat)
    rdiag = np.diag(lq.R).real
    kappa = params.kappa
    Bmat = lq.R / rdiag[:, None] - np.eye(sched.L)
    np.fill_diagonal(Bmat, 0.0)
    G = math.sqrt(kappa / params.P) / (np.sqrt(s.rho2) * np.sqrt(s.cos2) * rdiag)
    tau = Constellation(params.M).tau
    return PrecoderSet(users=tuple(sched.users), F=lq.Q.conj().T, Bmat=Bmat, G=G,
                       R=lq.R, Q=lq.Q, kappa=kappa, tau=tau)


def th_encode(s, Bmat, tau):
    """Modulo pre-subtraction ``x_k = MOD(s_k - sum_{l<k} B_kl x_l)``.

    ``s`` may be a vector ``(L,)`` or a block of symbol vectors ``(L, N)``.
    Returns ``(x, v)`` with ``v = (B + I) x``.
    """
    s = np.asarray(s, dtype=np.complex128)
    Bmat = np.asarray(Bmat, dtype=np.complex128)
    L = s.shape[0]
    if Bmat.shape != (L, L):
        raise DimensionError(f"Bmat must be {L}x{L}")
    x = np.empty_like(s)
    for k in range(L):
        acc = s[k] - np.tensordot(Bmat[k, :k], x[:k], axes=(0, 0)) if k else s[k]
        x[k] = modulo(acc, tau)
    v = x + np.tensordot(Bmat, x, axes=(1, 0))
    return x, v


def _noise(noise, shape):
    if noise is None:
        return np.zeros(shape, dtype=np.complex128)
    if isinstance(noise, np.random.Generator):
        return complex_normal(noise, shape)
    return np.asarray(noise, dtype=np.complex128)


def transmit_receive(x, pre, true_channels, params, noise=None):
    """Received samples after gain compensation, ``y = G (sqrt(P/kappa) H_S F x + n)``.

    ``true_channels`` holds the scheduled users' channel rows in precoding
    order. ``noise`` is ``None`` (noiseless), a ``numpy`` generator for
    CN(0, 1) draws, or explicit samples.
    """
    x = np.asarray(x, dtype=np.complex128)
    H = np.asarray(true_channels, dtype=np.complex128)
    if H.shape != (pre.L, pre.F.shape[0]):
        raise DimensionError(f"true channels must be {pre.L}x{pre.F.shape[0]}")
    n = _noise(noise, x.shape)
    r = math.sqrt(params.P / pre.kappa) * (H @ pre.F @ x) + n
    G = pre.G if x.ndim == 1 else pre.G[:, None]
    return G * r


def received_terms(x, pre, csi, params, noise=None):
    """Termwise receive decomposition ``y = v + interference + noise_term``.

    ``interference = (Phi diag R)^-1 Omega Htilde Q^H x`` and
    ``noise_term = sqrt(kappa/P) (Gamma Phi diag R)^-1 n``.
    """
    x = np.asarray(x, dtype=np.complex128)
    s = _scheduled(csi, pre.users)
    rdiag = np.diag(pre.R).real
    cos = np.sqrt(s.cos2)
    sin = np.sqrt(s.sin2)
    col = (lambda a: a) if x.ndim == 1 else (lambda a: a[:, None])
    v = (pre.R @ x) / col(rdiag)
    interference = col(sin / (cos * rdiag)) * (s.htilde @ pre.Q.conj().T @ x)
    n = _noise(noise, x.shape)
    noise_term = col(math.sqrt(pre.kappa / params.P) / (np.sqrt(s.rho2) * cos * rdiag)) * n
    return v, interference, noise_term


def receiver_detect(y, tau, constellation):
    """Modulo-reduce then slice to the nearest constellation point."""
    return constellation.points[constellation.slice_index(modulo(y, tau))]


def sinr_exact(k, sched, csi, params, pre=None):
    """SINR of the user at precoding position ``k`` (0-based) for ``L = nT``.

    ``phi rho^2 |r_kk|^2 cos^2 / (phi rho^2 sin^2 + 1)``.
    """
    if pre is None:
        pre = build_precoders(sched, csi, params)
    s = _scheduled(csi, pre.users)
    r2 = abs(pre.R[k, k]) ** 2
    phi = params.P / pre.kappa
    return phi * s.rho2[k] * r2 * s.cos2[k] / (phi * s.rho2[k] * s.sin2[k] + 1.0)


def sum_rate(sinrs):
    """``sum(log2(1 + gamma))`` in bits per channel use."""
    g = np.asarray(sinrs, dtype=float)
    if np.any(g < 0) or not np.all(np.isfinite(g)):
        raise DomainError("SINRs must be finite and nonnegative")
    return float(np.sum(np.log2(1.0 + g)))


def zfbf_sinr(H_true, Hhat, P, nT):
    """Per-user SINR of zero-forcing beams designed on ``Hhat`` (rows).

    Beams are the normalized columns of the pseudo-inverse of ``Hhat``; each
    stream gets power ``P / nT``.
    """
    return zfbf_sinr_batch(np.asarray(H_true)[None], np.asarray(Hhat)[None], P, nT)[0]


def zfbf_sinr_batch(H_true, Hhat, P, nT):
    """Batched :func:`zfbf_sinr` over a leading trial axis."""
    H_true = np.asarray(H_true, dtype=np.complex128)
    Hhat = np.asarray(Hhat, dtype=np.complex128)
    Hh = np.conj(np.swapaxes(Hhat, -1, -2))
    gram = Hhat @ Hh
    W = Hh @ np.linalg.inv(gram)
    W /= np.linalg.norm(W, axis=-2, keepdims=True)
    A = H_true @ W
    gain = A.real**2 + A.imag**2
    sig = np.diagonal(gain, axis1=-2, axis2=-1)
    interf = gain.sum(axis=-1) - sig
    p = P / nT
    return p * sig / (1.0 + p * interf)


def zfbf_baseline(all_csi, params, sched=None):
    """Per-user ZFBF rates on the greedy schedule, evaluated on the true channels.

    The schedule comes from the same greedy selection as the THP scheme
    unless one is supplied.
    """
    from .scheduler import greedy_select

    if sched is None:
        sched = greedy_select(all_csi, params)
    s = _scheduled(all_csi, sched.users)
    sinr = zfbf_sinr(s.channels(), s.hhat, params.P, params.nT)
    return [float(r) for r in np.log2(1.0 + sinr)]


@dataclass(frozen=True)
class LinkLevelReport:
    """Symbol-level measurements for one schedule.

    ``measured_sinr`` is ``mean|s|^2 / mean|y - v|^2`` per user; ``predicted_sinr``
    is the closed-form value for the same schedule.
    """

    measured_sinr: np.ndarray
    predicted_sinr: np.ndarray
    ser: float
    symbols: int
    tx_power: np.ndarray


def link_level(sched, csi, params, n_symbols, gen):
    """Push ``n_symbols`` random QAM vectors through the full chain."""
    pre = build_precoders(sched, csi, params)
    s_sched = _scheduled(csi, pre.users)
    const = Constellation(params.M)
    s = const.random_symbols(gen, (pre.L, n_symbols))
    x, v = th_encode(s, pre.Bmat, pre.tau)
    y = transmit_receive(x, pre, s_sched.channels(), params, noise=gen)
    err = y - v
    measured = np.mean(np.abs(s) ** 2, axis=1) / np.mean(np.abs(err) ** 2, axis=1)
    predicted = np.array([sinr_exact(k, sched, csi, params, pre=pre) for k in range(pre.L)])
    detected = receiver_detect(y, pre.tau, const)
    ser = float(np.mean(detected != s))
    return LinkLevelReport(
        measured_sinr=measured,
        predicted_sinr=predicted,
        ser=ser,
        symbols=int(n_symbols),
        tx_power=np.mean(np.abs(x) ** 2, axis=1),
    )
