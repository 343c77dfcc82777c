"""Random vector quantization of channel directions.

Two backends produce the same per-user feedback state:

* ``rvq``: true nearest-codeword search over a random isotropic codebook.
* ``cell-approx``: the spherical-cap cell model, where
  ``(rho^2 cos^2, rho^2 sin^2)`` is distributed as ``(X + (1-delta) Y, delta Y)``
  with ``X ~ Gamma(1, 1)`` and ``Y ~ Gamma(nT - 1, 1)``, and the quantized and
  error directions are isotropic.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .channel import STREAM_CELL, STREAM_CODEBOOK, complex_normal
from .errors import CapacityError, DegeneracyError, DimensionError, ThpError

__all__ = [
    "Codebook",
    "QuantizedCsi",
    "CsiBatch",
    "MAX_CODEBOOK_BITS",
    "generate_codebook",
    "quantize",
    "quantize_rows",
    "sample_cell_approx",
    "cell_approx_batch",
    "perfect_csi_batch",
    "save_codebook",
    "load_codebook",
]

MAX_CODEBOOK_BITS = 20
_BIN_MAGIC = b"THPCB\x00\x01\x00"


@dataclass(frozen=True)
class Codebook:
    vectors: np.ndarray  # (2**B, nT), unit-norm rows
    B: int

    @property
    def size(self):
        return self.vectors.shape[0]

    @property
    def nT(self):
        return self.vectors.shape[1]


@dataclass(frozen=True)
class QuantizedCsi:
    """Feedback state of one user.

    ``hhat`` is the selected codeword rotated by the common phase of the
    channel direction, so that ``hbar = hhat*cos + htilde*sin`` holds with real
    nonnegative ``cos`` and ``sin``. The phase is a per-user convention and does
    not change any scheduling or precoding quantity.
    """

    user: int
    index: int
    hhat: np.ndarray
    rho2: float
    cos2: float
    sin2: float
    htilde: np.ndarray

    @property
    def cos(self):
        return float(np.sqrt(self.cos2))

    @property
    def sin(self):
        return float(np.sqrt(self.sin2))

    def direction(self):
        """Reconstructed unit channel direction."""
        return self.hhat * self.cos + self.htilde * self.sin

    def channel(self):
        """Reconstructed channel row ``rho * direction``."""
        return np.sqrt(self.rho2) * self.direction()


@dataclass
class CsiBatch:
    """Array form of the feedback state for ``K`` users (rows)."""

    hhat: np.ndarray  # (K, nT)
    htilde: np.ndarray  # (K, nT)
    rho2: np.ndarray
    cos2: np.ndarray
    sin2: np.ndarray
    index: np.ndarray

    @property
    def K(self):
        return self.hhat.shape[0]

    def __len__(self):
        return self.hhat.shape[0]

    def channels(self):
        cos = np.sqrt(self.cos2)[:, None]
        sin = np.sqrt(self.sin2)[:, None]
        return np.sqrt(self.rho2)[:, None] * (self.hhat * cos + self.htilde * sin)

    def to_list(self):
        return [
            QuantizedCsi(
                user=k,
                index=int(self.index[k]),
                hhat=self.hhat[k].copy(),
                rho2=float(self.rho2[k]),
                cos2=float(self.cos2[k]),
                sin2=float(self.sin2[k]),
                htilde=self.htilde[k].copy(),
            )
            for k in range(self.K)
        ]

    @classmethod
    def from_list(cls, csi):
        return cls(
            hhat=np.array([c.hhat for c in csi]),
            htilde=np.array([c.htilde for c in csi]),
            rho2=np.array([c.rho2 for c in csi], dtype=float),
            cos2=np.array([c.cos2 for c in csi], dtype=float),
            sin2=np.array([c.sin2 for c in csi], dtype=float),
            index=np.array([c.index for c in csi], dtype=np.int64),
        )


def generate_codebook(params, rng, trial=0):
    """Draw ``2**B`` isotropic unit vectors in ``C^nT``."""
    if params.B > MAX_CODEBOOK_BITS:
        raise CapacityError(f"B = {params.B} exceeds the {MAX_CODEBOOK_BITS}-bit codebook guard")
    gen = rng.substream(STREAM_CODEBOOK).generator(trial)
    w = complex_normal(gen, (2**params.B, params.nT))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    return Codebook(vectors=w, B=params.B)


def _orthogonal_fill(hhat):
    """First canonical basis vector made orthogonal to ``hhat`` (unit norm)."""
    nT = hhat.shape[0]
    for j in range(nT):
        e = np.zeros(nT, dtype=np.complex128)
        e[j] = 1.0
        v = e - np.vdot(hhat, e) * hhat
        nv = np.linalg.norm(v)
        if nv > 1e-6:
            return v / nv
    raise DegeneracyError("could not build a vector orthogonal to the codeword")


def quantize_rows(H, codebook):
    """Quantize every row of ``H`` against ``codebook``; returns a :class:`CsiBatch`."""
    H = np.asarray(H, dtype=np.complex128)
    if H.ndim != 2 or H.shape[1] != codebook.nT:
        raise DimensionError(f"channel rows of length {codebook.nT} expected, got shape {H.shape}")
    rho2 = np.einsum("kn,kn->k", H, H.conj()).real
    if np.any(rho2 <= 0):
        raise DegeneracyError("zero channel cannot be quantized")
    hbar = H / np.sqrt(rho2)[:, None]
    corr = hbar @ codebook.vectors.conj().T  # hbar w_i^H
    power = corr.real**2 + corr.imag**2
    index = np.argmax(power, axis=1)  # lowest index wins ties
    rows = np.arange(H.shape[0])
    c = corr[rows, index]
    cos2 = np.minimum(power[rows, index], 1.0)
    sin2 = 1.0 - cos2
    phase = np.ones_like(c)
    nz = np.abs(c) > 0
    phase[nz] = c[nz] / np.abs(c[nz])
    hhat = codebook.vectors[index] * phase[:, None]
    resid = hbar - np.sqrt(cos2)[:, None] * hhat
    # One more projection pass keeps htilde orthogonal to hhat to ~1e-16.
    resid -= np.einsum("kn,kn->k", resid, hhat.conj())[:, None] * hhat
    rn = np.linalg.norm(resid, axis=1)
    htilde = np.empty_like(hbar)
    ok = rn > 1e-12
    htilde[ok] = resid[ok] / rn[ok, None]
    for k in np.flatnonzero(~ok):
        htilde[k] = _orthogonal_fill(hhat[k])
        sin2[k] = 0.0
        cos2[k] = 1.0
    return CsiBatch(hhat=hhat, htilde=htilde, rho2=rho2, cos2=cos2, sin2=sin2, index=index)


def quantize(h, codebook, user=0):
    """Quantize one channel row (nearest codeword by ``|hbar w^H|^2``)."""
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 1:
        raise DimensionError("quantize expects a single channel vector")
    if not np.any(h):
        raise DegeneracyError("zero channel cannot be quantized")
    csi = quantize_rows(h[None, :], codebook).to_list()[0]
    return QuantizedCsi(
        user=user,
        index=csi.index,
        hhat=csi.hhat,
        rho2=csi.rho2,
        cos2=csi.cos2,
        sin2=csi.sin2,
        htilde=csi.htilde,
    )


def sample_cell_approx(params, rng, size=None, trial=0, delta=None):
    """Draw ``(S, I) = (X + (1-delta) Y, delta Y)`` under the cell approximation.

    ``S`` models ``rho^2 cos^2`` and ``I`` models ``rho^2 sin^2``.
    """
    if delta is None:
        delta = params.delta
    gen = rng.substream(STREAM_CELL).generator(trial)
    return _cell_pair(gen, params.nT, delta, size)


def _cell_pair(gen, nT, delta, size):
    X = gen.standard_gamma(1.0, size)
    Y = gen.standard_gamma(nT - 1.0, size)
    return X + (1.0 - delta) * Y, delta * Y


def _isotropic_rows(gen, K, nT):
    g = complex_normal(gen, (K, nT))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def cell_approx_batch(params, gen, K=None):
    """Synthesize feedback state for ``K`` users under the cell approximation.

    ``hhat`` is isotropic, ``htilde`` is isotropic in the orthogonal complement
    of ``hhat``, and the gains follow :func:`sample_cell_approx`.
    """
    K = params.K if K is None else K
    nT = params.nT
    hhat = _isotropic_rows(gen, K, nT)
    g = complex_normal(gen, (K, nT))
    g -= np.einsum("kn,kn->k", g, hhat.conj())[:, None] * hhat
    htilde = g / np.linalg.norm(g, axis=1, keepdims=True)
    S, I = _cell_pair(gen, nT, params.delta, K)
    rho2 = S + I
    cos2 = S / rho2
    return CsiBatch(hhat=hhat, htilde=htilde, rho2=rho2, cos2=cos2, sin2=I / rho2,
                    index=np.full(K, -1, dtype=np.int64))


def perfect_csi_batch(H):
    """Feedback state when the transmitter knows each direction exactly."""
    H = np.asarray(H, dtype=np.complex128)
    rho2 = np.einsum("kn,kn->k", H, H.conj()).real
    hhat = H / np.sqrt(rho2)[:, None]
    htilde = np.array([_orthogonal_fill(v) for v in hhat]) if H.shape[0] else hhat.copy()
    K = H.shape[0]
    return CsiBatch(hhat=hhat, htilde=htilde, rho2=rho2, cos2=np.ones(K), sin2=np.zeros(K),
                    index=np.full(K, -1, dtype=np.int64))


def save_codebook(codebook, path):
    """Write a codebook as a text table or, for ``.bin`` paths, a flat binary file.

    Each row holds the codeword index followed by ``2*nT`` real components
    ``(re_0, im_0, re_1, im_1, ...)``.
    """
    path = str(path)
    m, nT = codebook.vectors.shape
    comps = np.empty((m, 2 * nT))
    comps[:, 0::2] = codebook.vectors.real
    comps[:, 1::2] = codebook.vectors.imag
    if path.endswith(".bin"):
        rec = np.zeros(m, dtype=[("index", "<i4"), ("comp", "<f8", (2 * nT,))])
        rec["index"] = np.arange(m)
        rec["comp"] = comps
        with open(path, "wb") as fh:
            fh.write(_BIN_MAGIC + struct.pack("<ii", codebook.B, nT))
            fh.write(rec.tobytes())
        return
    with open(path, "w") as fh:
        fh.write(f"# thpsim codebook B={codebook.B} nT={nT}\n")
        for i in range(m):
            fh.write(str(i) + " " + " ".join(repr(float(x)) for x in comps[i]) + "\n")


def load_codebook(path):
    path = str(path)
    if path.endswith(".bin"):
        with open(path, "rb") as fh:
            head = fh.read(len(_BIN_MAGIC))
            if head != _BIN_MAGIC:
                raise ThpError(f"{path}: not a thpsim codebook file")
            B, nT = struct.unpack("<ii", fh.read(8))
            rec = np.frombuffer(fh.read(), dtype=[("index", "<i4"), ("comp", "<f8", (2 * nT,))])
        order = np.argsort(rec["index"], kind="stable")
        comps = rec["comp"][order]
    else:
        B = nT = None
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    for tok in line[1:].split():
                        if tok.startswith("B="):
                            B = int(tok[2:])
                        elif tok.startswith("nT="):
                            nT = int(tok[3:])
                    continue
                rows.append([float(x) for x in line.split()])
        table = np.array(rows)
        comps = table[np.argsort(table[:, 0], kind="stable"), 1:]
        if nT is None:
            nT = comps.shape[1] // 2
        if B is None:
            B = int(np.log2(comps.shape[0]))
    vectors = comps[:, 0::2] + 1j * comps[:, 1::2]
    if vectors.shape != (2**B, nT):
        raise DimensionError(f"codebook table has shape {vectors.shape}, header says B={B}, nT={nT}")
    return Codebook(vectors=np.ascontiguousarray(vectors), B=B)
