"""Greedy selection of ``L = nT`` users from quantized CSI.

At iteration ``n`` every remaining candidate is scored by

    gamma_k(n) = phi rho_k^2 ||xi_k||^2 cos^2 / (phi rho_k^2 sin^2 + 1),

where ``xi_k`` is the part of its quantized direction orthogonal to the basis
built from the users already chosen. The best candidate joins the schedule and
its normalized residual extends the basis.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DegeneracyError, InsufficientUsersError
from .numerics import DEGENERACY_TOL, as_cvector, conj_inner
from .quantizer import CsiBatch

__all__ = [
    "Schedule",
    "metric_first",
    "metric_n",
    "metric_factors",
    "greedy_select",
    "schedule_batch",
]


@dataclass(frozen=True)
class Schedule:
    """Ordered schedule of one greedy run.

    Attributes
    ----------
    users : tuple of int
        Selected user ids in precoding order.
    basis : ndarray (L, nT)
        Orthonormal rows ``q_1 .. q_L``.
    omega : ndarray (L,)
        ``||xi_{S(n)}||^2`` at the iteration each user was chosen (first is 1).
    gamma : ndarray (L,)
        Selection metric of each chosen user at its iteration.
    candidate_omega : ndarray (L, K) or None
        Every candidate's ``omega_k(n)`` (NaN once selected), when recorded.
    """

    users: tuple
    basis: np.ndarray
    omega: np.ndarray
    gamma: np.ndarray
    candidate_omega: np.ndarray = None

    @property
    def L(self):
        return len(self.users)


def metric_first(csi, params):
    """Selection metric at the first iteration."""
    phi = params.phi
    return phi * csi.rho2 * csi.cos2 / (phi * csi.rho2 * csi.sin2 + 1.0)


def metric_n(csi, basis, params):
    """Metric of a candidate against a partial basis; returns ``(gamma, xi)``."""
    hhat = as_cvector(csi.hhat)
    xi = hhat.copy()
    for q in basis:
        xi = xi - conj_inner(hhat, q) * as_cvector(q)
    w = conj_inner(xi, xi).real
    phi = params.phi
    gamma = phi * csi.rho2 * w * csi.cos2 / (phi * csi.rho2 * csi.sin2 + 1.0)
    return gamma, xi


def metric_factors(rho2, cos2, sin2, phi):
    """Numerator and denominator factors used by the batched kernel."""
    return phi * rho2 * cos2, phi * rho2 * sin2 + 1.0


def greedy_select(all_csi, params, record_candidates=False):
    """Greedy schedule of exactly ``nT`` users.

    Ties go to the lowest user id.

    Raises
    ------
    InsufficientUsersError
        If fewer than ``nT`` users are offered.
    DegeneracyError
        If the chosen user's residual direction vanishes; ``iteration`` names
        the (1-based) iteration.
    """
    nT = params.nT
    if len(all_csi) < nT:
        raise InsufficientUsersError(f"need at least nT = {nT} users, got {len(all_csi)}")
    batch = all_csi if isinstance(all_csi, CsiBatch) else CsiBatch.from_list(all_csi)
    num, den = metric_factors(batch.rho2, batch.cos2, batch.sin2, params.phi)
    omega_all = np.empty((1, nT, batch.K)) if record_candidates else None
    sel, omega, gamma, basis, status = _kernels.greedy_batch(
        batch.hhat[None], num[None], den[None], DEGENERACY_TOL, omega_all
    )
    if status[0]:
        n = int(status[0])
        raise DegeneracyError(
            f"selected direction at iteration {n} lies in the span of the previous ones",
            iteration=n,
        )
    ids = sel[0]
    if not isinstance(all_csi, CsiBatch):
        ids = [all_csi[i].user for i in ids]
    return Schedule(
        users=tuple(int(i) for i in ids),
        basis=basis[0],
        omega=omega[0],
        gamma=gamma[0],
        candidate_omega=None if omega_all is None else omega_all[0],
    )


def schedule_batch(hhat, rho2, cos2, sin2, phi, omega_all=None):
    """Vectorized greedy selection over a leading trial axis.

    Shapes are ``(T, K, nT)`` for ``hhat`` and ``(T, K)`` for the gains; see
    :func:`thpsim._kernels.greedy_batch` for the returned arrays.
    """
    if hhat.shape[1] < hhat.shape[2]:
        raise InsufficientUsersError(f"need at least nT = {hhat.shape[2]} users, got {hhat.shape[1]}")
    num, den = metric_factors(rho2, cos2, sin2, phi)
    return _kernels.greedy_batch(hhat, num, den, DEGENERACY_TOL, omega_all)
