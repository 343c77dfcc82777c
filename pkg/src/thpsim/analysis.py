"""Distribution theory of the scheduled SINRs under the cell approximation.

All CDF-type functions describe ``gamma_k(n)`` for a candidate at greedy
iteration ``n`` and are only claimed on ``x >= 1/delta - 1``; below that edge
they raise :class:`~thpsim.errors.SupportError`. Survival functions (``sf_*``)
are provided alongside because ``1 - F`` is tiny in the tail where the
asymptotics live.
"""

import math
from dataclasses import dataclass

from .errors import DomainError, InfeasibleError, SupportError
from .numerics import DEFAULT_QUAD, beta_fn, gauss_2f1, ln_gamma, v_integral, whittaker_w

__all__ = [
    "CdfParams",
    "ExtremeInterval",
    "ScalingTargets",
    "sf_gamma_first",
    "cdf_gamma_first",
    "sf_gamma_n",
    "cdf_gamma_n",
    "sf_bounds",
    "cdf_bounds",
    "sf_tail_expansion",
    "tail_expansion",
    "interference_penalty",
    "chi_n",
    "extreme_interval",
    "evt_normalized_tail",
    "sf_highsnr",
    "cdf_highsnr",
    "extreme_interval_highsnr",
    "highsnr_correction",
    "sumrate_highsnr_approx",
    "scaling_targets",
    "perfect_csi_interval",
    "tradeoff_constant",
    "tradeoff_bits",
    "beta_cdf",
]


@dataclass(frozen=True)
class CdfParams:
    """Parameters of the per-iteration SINR law.

    ``n`` is the greedy iteration (1-based); the coefficients that involve
    ``beta(nT - n + 1, n - 1)`` are only defined for ``n >= 2``.
    """

    nT: int
    B: int
    phi: float
    n: int = 1

    def __post_init__(self):
        if self.nT < 2 or self.B < 1 or not self.phi > 0:
            raise DomainError("need nT >= 2, B >= 1 and phi > 0")
        if not 1 <= self.n <= self.nT:
            raise DomainError(f"iteration n must lie in [1, nT], got {self.n}")

    @classmethod
    def from_system(cls, params, n=1):
        return cls(nT=params.nT, B=params.B, phi=params.phi, n=n)

    def at(self, n):
        return CdfParams(self.nT, self.B, self.phi, n)

    @property
    def delta(self):
        return 2.0 ** (-self.B / (self.nT - 1))

    @property
    def x_min(self):
        return 1.0 / self.delta - 1.0

    def _need_n2(self):
        if self.n < 2:
            raise DomainError("coefficient defined only for n >= 2")

    @property
    def beta_n(self):
        self._need_n2()
        return beta_fn(self.nT - self.n + 1, self.n - 1)

    @property
    def a_n(self):
        return 2.0**self.B / self.beta_n

    @property
    def c_n(self):
        self._need_n2()
        return 2.0**self.B * math.factorial(self.n - 2) / self.beta_n

    @property
    def shift(self):
        """``(nT-1)/(2nT-1)``, the offset from the mean-value bound."""
        return (self.nT - 1) / (2.0 * self.nT - 1)

    @property
    def b1_n(self):
        return self.c_n * (1.0 / self.phi) ** ((2 * self.nT - self.n - 1) / 2.0)

    @property
    def b2_n(self):
        return self.b1_n * math.exp(self.shift / (2.0 * self.phi))

    @property
    def d_n(self):
        return 2.0**self.B * beta_fn(2 * self.nT - self.n, self.n - 1) / self.beta_n

    @property
    def whittaker_params(self):
        return (-2 * self.nT - self.n + 3) / 2.0, (2 * self.nT - self.n) / 2.0


@dataclass(frozen=True)
class ExtremeInterval:
    """Concentration interval for the scheduled SINR at one iteration.

    Holds with probability at least ``1 - O(1/log K)``. Symmetric intervals
    also carry ``center`` and ``half_width``.
    """

    lower: float
    upper: float
    center: float = None
    half_width: float = None
    floor: str = "1 - O(1/log K)"

    def contains(self, value):
        return self.lower <= value <= self.upper


def _check_support(x, p):
    if x < p.x_min * (1 - 1e-12):
        raise SupportError(f"x = {x!r} is below the support edge 1/delta - 1 = {p.x_min!r}")


def sf_gamma_first(x, p):
    """``Pr(gamma(1) > x) = 2^B exp(-x/phi) / (1+x)^(nT-1)``."""
    _check_support(x, p)
    return math.exp(p.B * math.log(2.0) - x / p.phi - (p.nT - 1) * math.log1p(x))


def cdf_gamma_first(x, p):
    return 1.0 - sf_gamma_first(x, p)


def sf_gamma_n(x, p, q=DEFAULT_QUAD):
    """Exact ``Pr(gamma(n) > x)`` for ``n >= 2`` through the V-integral."""
    _check_support(x, p)
    if p.n < 2:
        return sf_gamma_first(x, p)
    V = v_integral(p.n - 1, -p.nT + 2, -p.nT + 1, 1.0 / p.phi, x, q)
    return p.a_n * x ** (p.nT - p.n + 1) * V


def cdf_gamma_n(x, p, q=DEFAULT_QUAD):
    return 1.0 - sf_gamma_n(x, p, q)


def sf_bounds(x, p, side, q=DEFAULT_QUAD):
    """Survival functions of the Whittaker-type bounds.

    ``side="lower"`` is the CDF lower bound (larger survival), ``"upper"`` the
    CDF upper bound.
    """
    _check_support(x, p)
    p._need_n2()
    kappa, mu = p.whittaker_params
    if side == "lower":
        W = whittaker_w(kappa, mu, x / p.phi, q)
        return p.b1_n * x ** (-(p.n - 1) / 2.0) * math.exp(-x / (2.0 * p.phi)) * W
    if side == "upper":
        xs = x + p.shift
        W = whittaker_w(kappa, mu, xs / p.phi, q)
        return (
            p.b2_n
            * x ** (p.nT - p.n + 1)
            * xs ** (-(2 * p.nT - p.n + 1) / 2.0)
            * math.exp(-x / (2.0 * p.phi))
            * W
        )
    raise ValueError("side must be 'lower' or 'upper'")


def cdf_bounds(x, p, q=DEFAULT_QUAD, side="lower"):
    return 1.0 - sf_bounds(x, p, side, q)


def sf_tail_expansion(x, p, side):
    """Leading term of the bound survival functions as ``x -> inf``."""
    if not x > 0:
        raise DomainError("x must be positive")
    p._need_n2()
    lead = p.c_n * p.phi ** (p.n - 1) * math.exp(-x / p.phi)
    if side == "lower":
        return lead * x ** (-p.nT - p.n + 2)
    if side == "upper":
        return lead * x ** (p.nT - p.n + 1) / (x + p.shift) ** (2 * p.nT - 1)
    raise ValueError("side must be 'lower' or 'upper'")


def tail_expansion(x, p, side):
    return 1.0 - sf_tail_expansion(x, p, side)


def interference_penalty(p):
    """``Delta = 2^B / phi^(nT-1)``, the quantization term in the diversity gain."""
    return 2.0**p.B / p.phi ** (p.nT - 1)


def _chi_coefficients(n, p):
    if n == 1:
        return 2.0**p.B, p.nT - 1
    return p.at(n).c_n, p.nT + n - 2


def chi_n(n, K, p):
    """Centre of the extreme-value interval at iteration ``n``.

    ``phi log A - phi a log log A`` with ``A = c K / phi^(nT-1)``, where
    ``c = 2^B, a = nT - 1`` for ``n = 1`` and ``c = c_n, a = nT + n - 2``
    otherwise.

    Raises
    ------
    DomainError
        When ``A <= e``: the asymptotic form is not applicable.
    """
    c, a = _chi_coefficients(n, p)
    A = c * K / p.phi ** (p.nT - 1)
    if not A > math.e:
        raise DomainError(f"c K / phi^(nT-1) = {A:.4g} must exceed e for the extreme-value centre")
    LA = math.log(A)
    return p.phi * LA - p.phi * a * math.log(LA)


def extreme_interval(n, K, p):
    """``[chi_n - phi log log sqrt K, chi_n + phi log log sqrt K]``."""
    if not K > math.exp(2.0):
        raise DomainError("K must exceed e^2 so that log log sqrt(K) > 0")
    center = chi_n(n, K, p)
    hw = p.phi * math.log(math.log(math.sqrt(K)))
    return ExtremeInterval(lower=center - hw, upper=center + hw, center=center, half_width=hw)


def evt_normalized_tail(x, K, n, p, q=DEFAULT_QUAD):
    """``K (1 - F(a x + b))`` with ``a = phi`` and ``b = chi_n`` on the lower-bound law.

    Tends to ``exp(-x)`` as ``K`` grows.
    """
    b = chi_n(n, K, p)
    arg = p.phi * x + b
    if n == 1:
        return K * sf_gamma_first(arg, p.at(1))
    return K * sf_bounds(arg, p.at(n), "lower", q)


def sf_highsnr(x, p, n=None):
    """Survival function of ``omega cos^2 / sin^2`` (the ``P -> inf`` SINR)."""
    n = p.n if n is None else n
    pn = p.at(n)
    _check_support(x, pn)
    if n == 1:
        return 2.0**p.B / (1.0 + x) ** (p.nT - 1)
    a, b, c = p.nT - 1, 2 * p.nT - n, 2 * p.nT - 1
    z = -1.0 / x
    if z < -0.5:
        # Pfaff transformation keeps the series argument inside [0, 1/2].
        f = (1.0 - z) ** (-a) * gauss_2f1(a, c - b, c, z / (z - 1.0))
    else:
        f = gauss_2f1(a, b, c, z)
    return pn.d_n / x ** (p.nT - 1) * f


def cdf_highsnr(x, p, n=None):
    return 1.0 - sf_highsnr(x, p, n)


def extreme_interval_highsnr(n, K, p):
    """High-SNR interval ``[(c K / log sqrt K)^(1/(nT-1)), (c K log sqrt K)^(1/(nT-1))]``.

    ``c = 2^B`` with both ends shifted by ``-1`` for ``n = 1``; ``c = d_n``
    otherwise.
    """
    if not K > math.e:
        raise DomainError("K must exceed e")
    ls = math.log(math.sqrt(K))
    e = 1.0 / (p.nT - 1)
    if n == 1:
        c, shift = 2.0**p.B, 1.0
    else:
        c, shift = p.at(n).d_n, 0.0
    return ExtremeInterval(lower=(c * K / ls) ** e - shift, upper=(c * K * ls) ** e - shift)


def highsnr_correction(nT):
    """``(1/(nT-1)) sum_{n=2}^{nT} log2(beta(2nT-n, n-1) / beta(nT-n+1, n-1))``."""
    total = 0.0
    for n in range(2, nT + 1):
        total += (
            ln_gamma(2 * nT - n) - ln_gamma(2 * nT - 1) - ln_gamma(nT - n + 1) + ln_gamma(nT)
        ) / math.log(2.0)
    return total / (nT - 1)


def sumrate_highsnr_approx(K, p):
    """High-SNR average sum rate without the ``O(log2 log K)`` term, in bits."""
    if p.nT < 2:
        raise DomainError("nT must be >= 2")
    return p.nT / (p.nT - 1) * (p.B + math.log2(K)) + highsnr_correction(p.nT)


@dataclass(frozen=True)
class ScalingTargets:
    """Reference values for the large-``K`` sum rate.

    ``scaling_law`` is ``nT log2(varrho log K)``; ``gap_bound`` is the
    precoding-loss bound ``nT log2(1 + 1/(M-1))``; ``bc_ceiling`` is
    ``nT log2(1 + varrho log K)`` with the ``O(log log K)`` slack reported as
    ``loglog_slack``. ``gap_rate_log`` and ``gap_rate_modulation`` are the two
    branch expressions ``log log K / log K`` and ``1/(M-1)``.
    """

    scaling_law: float
    gap_bound: float
    bc_ceiling: float
    loglog_slack: float
    gap_rate_log: float
    gap_rate_modulation: float


def scaling_targets(K, params):
    if K < 3:
        raise DomainError("K must be >= 3")
    nT, varrho = params.nT, params.varrho
    lk = math.log(K)
    return ScalingTargets(
        scaling_law=nT * math.log2(varrho * lk),
        gap_bound=nT * math.log2(1.0 + 1.0 / (params.M - 1)),
        bc_ceiling=nT * math.log2(1.0 + varrho * lk),
        loglog_slack=math.log(lk),
        gap_rate_log=math.log(lk) / lk,
        gap_rate_modulation=1.0 / (params.M - 1),
    )


def _eps_perfect(n, nT):
    # (n-1)^(n-1) is 1 at n = 1.
    lead = 0.0 if n == 1 else (n - 1) * math.log(n - 1)
    return math.exp(math.lgamma(nT - n + 1) + lead - math.lgamma(n))


def perfect_csi_interval(n, K, P, nT):
    """Perfect-CSI interval ``[varpi_n - varrho log log sqrt K, upsilon_n + varrho log log sqrt K]``."""
    if not 1 <= n <= nT:
        raise DomainError("n must lie in [1, nT]")
    varrho = P / nT
    eps_a = _eps_perfect(n, nT)
    eps_b = math.gamma(nT - n + 1)
    out = []
    for eps in (eps_a, eps_b):
        A = K / eps
        if not A > math.e:
            raise DomainError(f"K / eps = {A:.4g} must exceed e")
        out.append(varrho * math.log(A) + varrho * (nT - n) * math.log(math.log(A)))
    varpi, upsilon = out
    hw = varrho * math.log(math.log(math.sqrt(K)))
    return ExtremeInterval(lower=varpi - hw, upper=upsilon + hw, half_width=hw)


def tradeoff_constant(K0, B0, P0, nT):
    """``c`` in ``B + log2 K = (nT-1) log2 P + c`` from an anchor point (linear ``P0``)."""
    return B0 + math.log2(K0) - (nT - 1) * math.log2(P0)


def tradeoff_bits(K, P, nT, c):
    """Feedback bits keeping ``B + log2 K - (nT-1) log2 P`` at ``c``, rounded."""
    B = (nT - 1) * math.log2(P) + c - math.log2(K)
    Bi = int(math.floor(B + 0.5))
    if Bi < 1:
        raise InfeasibleError(f"tradeoff gives B = {B:.3f} < 1 bit")
    return Bi


def beta_cdf(x, a, b):
    """Regularized incomplete beta for integer ``a, b >= 1`` (finite binomial sum)."""
    if x <= 0:
        return 0.0
    if x >= 1:
        return 1.0
    n = a + b - 1
    return sum(math.comb(n, j) * x**j * (1 - x) ** (n - j) for j in range(a, n + 1))
