"""Small-dimension complex linear algebra and the special functions used by
the distribution theory.

Vectors and matrices are plain ``numpy`` complex arrays; the factorizations
here are written out explicitly because the dimensions never exceed a few
antennas and the scheduler depends on the exact Gram-Schmidt ordering.

Special functions
-----------------
whittaker_w
    :math:`W_{\\kappa,\\mu}(x)` for real parameters from its Laplace-type
    integral representation.
v_integral
    :math:`\\int_x^\\infty e^{-\\mu t}(t-x)^{m_1-1}(t+1)^{m_2-1}t^{m_3-1}dt`.
gauss_2f1
    Gauss hypergeometric series inside the unit disc.
"""

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError, DegeneracyError, DimensionError, DomainError

__all__ = [
    "QuadratureSpec",
    "LqFactors",
    "as_cvector",
    "as_cmatrix",
    "conj_inner",
    "lq_decompose",
    "adaptive_quad",
    "semi_infinite_quad",
    "whittaker_w",
    "v_integral",
    "gauss_2f1",
    "ln_gamma",
    "beta_fn",
]

DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for :func:`adaptive_quad`."""

    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadratureSpec()


def as_cvector(a):
    v = np.asarray(a, dtype=np.complex128)
    if v.ndim != 1 or v.size < 1:
        raise DimensionError(f"expected a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DomainError("vector entries must be finite")
    return v


def as_cmatrix(a):
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.size < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError("matrix entries must be finite")
    return m


def conj_inner(a, b):
    """Return ``sum(a_i * conj(b_i))``, i.e. the row-vector product a b^H."""
    a = as_cvector(a)
    b = as_cvector(b)
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.size} vs {b.size}")
    acc = 0j
    for x, y in zip(a.tolist(), b.tolist()):
        acc += x * y.conjugate()
    return acc


@dataclass(frozen=True)
class LqFactors:
    """``H = R @ Q`` with ``R`` lower triangular and ``Q`` having orthonormal rows."""

    R: np.ndarray
    Q: np.ndarray


def lq_decompose(H, tol=DEGENERACY_TOL):
    """Row-wise Gram-Schmidt factorization ``H = R Q``.

    Rows are orthogonalized in the order given, with one re-orthogonalization
    sweep per row. The diagonal of ``R`` is real and nonnegative.

    Raises
    ------
    DegeneracyError
        If a row's residual after projection has norm below ``tol``.
    """
    H = as_cmatrix(H)
    L, n = H.shape
    if L > n:
        raise DimensionError(f"LQ needs rows <= cols, got {L}x{n}")
    R = np.zeros((L, L), dtype=np.complex128)
    Q = np.zeros((L, n), dtype=np.complex128)
    for i in range(L):
        v = H[i].copy()
        for _sweep in range(2):
            for j in range(i):
                c = np.vdot(Q[j], v)  # v q_j^H
                R[i, j] += c
                v -= c * Q[j]
        r = math.sqrt(float(np.vdot(v, v).real))
        if r < tol:
            raise DegeneracyError(f"row {i} is linearly dependent on previous rows (residual {r:.3e})")
        R[i, i] = r
        Q[i] = v / r
    return LqFactors(R=R, Q=Q)


# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KWEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss points are the odd-indexed Kronrod abscissae (1, 3, 5 and the centre).
_GWEIGHTS = np.zeros(15)
_GWEIGHTS[[1, 3, 5]] = _WG[:3]
_GWEIGHTS[[13, 11, 9]] = _WG[:3]
_GWEIGHTS[7] = _WG[3]


def _gk15(f, a, b):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    fx = np.asarray(f(c + h * _NODES), dtype=float)
    k = h * float(fx @ _KWEIGHTS)
    g = h * float(fx @ _GWEIGHTS)
    return k, abs(k - g)


def adaptive_quad(f, a, b, q=DEFAULT_QUAD, initial_panels=8):
    """Globally adaptive Gauss-Kronrod (7/15) quadrature of a vectorized ``f``.

    The panel with the largest error estimate is bisected until the summed
    estimate meets ``max(q.abs_tol, q.rel_tol * |I|)``.

    Raises
    ------
    AccuracyError
        When ``q.max_subdivisions`` bisections do not reach the tolerance;
        carries the achieved estimate and error.
    """
    edges = np.linspace(a, b, initial_panels + 1)
    heap = []
    total = 0.0
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, e = _gk15(f, lo, hi)
        heapq.heappush(heap, (-e, lo, hi, val))
        total += val
        err += e
    splits = 0
    while err > max(q.abs_tol, q.rel_tol * abs(total)):
        if splits >= q.max_subdivisions or not np.isfinite(total):
            raise AccuracyError(
                f"quadrature did not converge: estimate {total!r}, error {err:.3e}",
                estimate=total,
                error=err,
            )
        neg_e, lo, hi, val = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            raise AccuracyError("quadrature panel collapsed to machine precision", estimate=total, error=err)
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        total += v1 + v2 - val
        err += e1 + e2 + neg_e
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
        splits += 1
    # Re-sum to shed the drift of the running updates.
    total = math.fsum(item[3] for item in heap)
    return total, err


def semi_infinite_quad(f, lower, scale=1.0, q=DEFAULT_QUAD):
    """Integrate ``f`` over ``[lower, inf)`` via ``t = lower + scale*u/(1-u)``."""

    def g(u):
        one_minus = 1.0 - u
        t = lower + scale * u / one_minus
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            out = f(t) * scale / (one_minus * one_minus)
        return np.where(np.isfinite(out), out, 0.0)

    return adaptive_quad(g, 0.0, 1.0, q)


def ln_gamma(x):
    """Natural log of the gamma function for ``x > 0``."""
    if not x > 0:
        raise DomainError(f"ln_gamma needs a positive argument, got {x!r}")
    return math.lgamma(x)


def beta_fn(a, b):
    """Euler beta function for positive arguments."""
    if not (a > 0 and b > 0):
        raise DomainError(f"beta_fn needs positive arguments, got ({a!r}, {b!r})")
    return math.exp(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))


def whittaker_w(kappa, mu, x, q=DEFAULT_QUAD):
    """Whittaker function of the second kind for real parameters.

    Evaluated as

    .. math::

        W_{\\kappa,\\mu}(x) = \\frac{e^{-x/2} x^{\\mu+1/2}}{\\Gamma(\\mu-\\kappa+1/2)}
        \\int_0^\\infty e^{-xt} t^{\\mu-\\kappa-1/2} (1+t)^{\\mu+\\kappa-1/2} dt,

    after rescaling ``s = x t`` so the integrand peak sits at unit scale
    for every ``x``.

    Parameters
    ----------
    kappa, mu : float
        Real parameters with ``mu - kappa + 1/2 > 0``.
    x : float
        Positive argument.
    """
    if not x > 0:
        raise DomainError(f"whittaker_w needs x > 0, got {x!r}")
    a = mu - kappa + 0.5
    if not a > 0:
        raise DomainError("whittaker_w needs mu - kappa + 1/2 > 0 for the integral representation")
    p = a - 1.0
    r = mu + kappa - 0.5
    inv_x = 1.0 / x

    def integrand(s):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.exp(-s + p * np.log(s) + r * np.log1p(s * inv_x))

    scale = max(1.0, p)
    integral, _ = semi_infinite_quad(integrand, 0.0, scale=scale, q=q)
    # int e^{-xt} ... dt = x^{-(p+1)} int e^{-s} s^p (1+s/x)^r ds
    log_pref = -0.5 * x + (mu + 0.5) * math.log(x) - (p + 1.0) * math.log(x) - math.lgamma(a)
    return math.exp(log_pref) * integral


def v_integral(m1, m2, m3, mu, x, q=DEFAULT_QUAD):
    """``int_x^inf exp(-mu t) (t-x)^(m1-1) (t+1)^(m2-1) t^(m3-1) dt``.

    Requires ``m1 >= 1``, ``mu > 0`` and ``x > 0``. The tail is mapped onto
    ``(0, 1)`` by ``t = x + u/(mu (1-u))``.
    """
    if m1 < 1:
        raise DomainError(f"v_integral needs m1 >= 1, got {m1}")
    if not (mu > 0 and x > 0):
        raise DomainError("v_integral needs mu > 0 and x > 0")
    e1, e2, e3 = m1 - 1, m2 - 1, m3 - 1
    # exp(-mu x) is pulled out so large x does not underflow the integrand.
    log_shift = -mu * x

    def integrand(t):
        d = t - x
        with np.errstate(divide="ignore", invalid="ignore"):
            logd = np.log(d) if e1 else 0.0
            return np.exp(-mu * d + e1 * logd + e2 * np.log1p(t) + e3 * np.log(t))

    val, _ = semi_infinite_quad(integrand, x, scale=1.0 / mu, q=q)
    return math.exp(log_shift) * val


def gauss_2f1(a, b, c, z, max_terms=100000):
    """Gauss hypergeometric series :math:`{}_2F_1(a, b; c; z)` for ``|z| < 1``.

    Summed term by term until a term falls below ``1e-16`` of the partial sum.
    """
    if not abs(z) < 1:
        raise DomainError(f"gauss_2f1 series needs |z| < 1, got {z!r}")
    if c <= 0 and float(c).is_integer():
        raise DomainError("c must not be a nonpositive integer")
    total = 1.0
    term = 1.0
    for l in range(max_terms):
        term *= (a + l) * (b + l) / ((c + l) * (l + 1)) * z
        total += term
        if abs(term) < 1e-16 * abs(total):
            return total
    raise AccuracyError("gauss_2f1 series did not converge", estimate=total, error=abs(term))
