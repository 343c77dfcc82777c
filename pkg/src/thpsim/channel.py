"""System parameters, reproducible random streams and Rayleigh channel draws."""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = [
    "SystemParams",
    "RngStream",
    "ChannelSet",
    "complex_normal",
    "draw_channels",
    "db_to_linear",
    "STREAM_CHANNEL",
    "STREAM_CODEBOOK",
    "STREAM_CELL",
    "STREAM_NOISE",
    "STREAM_SYMBOLS",
]

# Stream ids keep independent uses of one master seed apart.
STREAM_CHANNEL = 0
STREAM_CODEBOOK = 1
STREAM_CELL = 2
STREAM_NOISE = 3
STREAM_SYMBOLS = 4


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class SystemParams:
    """Scenario constants shared by simulation and analysis.

    Attributes
    ----------
    K : int
        Number of users.
    nT : int
        Transmit antennas; the scheduler always serves ``L = nT`` users.
    B : int
        Feedback bits per user.
    P : float
        Total transmit power (linear). The noise variance is one.
    M : int
        Square QAM order.
    """

    K: int
    nT: int
    B: int
    P: float
    M: int = 16

    def __post_init__(self):
        if self.K < 1:
            raise DomainError("K must be >= 1")
        if self.nT < 2:
            raise DomainError("nT must be >= 2")
        if self.B < 1:
            raise DomainError("B must be >= 1")
        if not self.P > 0:
            raise DomainError("P must be positive")
        root = math.isqrt(self.M)
        if self.M < 4 or root * root != self.M:
            raise DomainError(f"M must be a perfect square >= 4, got {self.M}")

    @classmethod
    def from_db(cls, K, nT, B, P_dB, M=16):
        return cls(K=K, nT=nT, B=B, P=db_to_linear(P_dB), M=M)

    @classmethod
    def from_phi(cls, K, nT, B, phi, M=16):
        """Pick ``P`` so that the effective per-user SNR coefficient equals ``phi``."""
        return cls(K=K, nT=nT, B=B, P=phi * M * nT / (M - 1), M=M)

    @property
    def L(self):
        return self.nT

    @property
    def delta(self):
        return 2.0 ** (-self.B / (self.nT - 1))

    @property
    def kappa(self):
        return self.M / (self.M - 1) * self.L

    @property
    def phi(self):
        # Equals P / kappa with L = nT.
        return (self.M - 1) * self.P / (self.M * self.nT)

    @property
    def varrho(self):
        return self.P / self.nT

    @property
    def x_min(self):
        """Lower edge of the support on which the closed-form CDFs hold."""
        return 1.0 / self.delta - 1.0

    def replace(self, **changes):
        values = {"K": self.K, "nT": self.nT, "B": self.B, "P": self.P, "M": self.M}
        values.update(changes)
        return SystemParams(**values)


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream keyed by ``(seed, stream_id, trial)``.

    Every trial gets its own Philox generator, so results do not depend on the
    order in which trials are evaluated.
    """

    seed: int
    stream_id: int = STREAM_CHANNEL

    def generator(self, trial=0):
        ss = np.random.SeedSequence([self.seed & 0xFFFFFFFFFFFFFFFF, self.stream_id, trial])
        return np.random.Generator(np.random.Philox(ss))

    def substream(self, stream_id):
        return RngStream(self.seed, stream_id)


def complex_normal(gen, shape):
    """Circularly-symmetric CN(0, 1) samples by the Box-Muller transform."""
    u1 = 1.0 - gen.random(shape)  # (0, 1]
    u2 = gen.random(shape)
    radius = np.sqrt(-np.log(u1))
    return radius * np.exp(2j * np.pi * u2)


@dataclass(frozen=True)
class ChannelSet:
    """Per-user channel rows ``h[k]`` (shape ``K x nT``) and ``rho2[k] = ||h_k||^2``."""

    h: np.ndarray
    rho2: np.ndarray = field(repr=False)

    @classmethod
    def from_rows(cls, h):
        h = np.asarray(h, dtype=np.complex128)
        rho2 = np.einsum("kn,kn->k", h, h.conj()).real
        return cls(h=h, rho2=rho2)

    @property
    def K(self):
        return self.h.shape[0]


def draw_channels(params, rng, trial=0):
    """Draw ``K`` i.i.d. Rayleigh channels with unit-variance entries."""
    gen = rng.generator(trial)
    return ChannelSet.from_rows(complex_normal(gen, (params.K, params.nT)))
