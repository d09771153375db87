"""Stability results for class-B (matching) control on the reduced model.

The reduced model has state ``z = (w_g, P_tau_g)`` in p.u. and load input
``w = -(P_L - P_L*)/S``. Stability is certified with the quadratic
Lyapunov function ``V5 = H w_g^2 + tau/(2 d_pg) P_tau_g^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from gfcstab.errors import DomainError, ParameterError
from gfcstab.model import (
    CoiParams,
    ConverterParams,
    MachineParams,
    NetworkParams,
    headroom_pu,
    matching_droop,
    sat,
)

DEFAULT_THETA = 0.9


@dataclass(frozen=True)
class LyapunovQ:
    """Weight matrix ``Q = diag(H, tau/(2 d_pg))`` of V5."""

    H: float
    tau: float
    d_pg: float

    @property
    def diagonal(self) -> tuple[float, float]:
        return self.H, self.tau / (2.0 * self.d_pg)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diagonal)

    @property
    def positive_definite(self) -> bool:
        return self.H > 0 and self.tau > 0 and self.d_pg > 0

    @property
    def lambda_min(self) -> float:
        return min(self.diagonal)

    @property
    def lambda_max(self) -> float:
        return max(self.diagonal)

    @property
    def condition(self) -> float:
        """``sqrt(lambda_max / lambda_min)``."""
        return math.sqrt(self.lambda_max / self.lambda_min)

    def value(self, z) -> float:
        q1, q2 = self.diagonal
        return q1 * z[0] ** 2 + q2 * z[1] ** 2


def gas_check(d_pg: float, d_pc: float) -> bool:
    """Global asymptotic stability of the unforced reduced model."""
    return bool(d_pg > 0 and d_pc > 0)


def v5_eval(z, mp: MachineParams, d_pc: float, p_max: float, w: float = 0.0) -> tuple[float, float]:
    """V5 and its derivative along the reduced model at ``z``."""
    q = LyapunovQ(mp.H_g, mp.tau_g, mp.d_pg)
    omega, p_tau = float(z[0]), float(z[1])
    v_dot = -p_tau * p_tau / mp.d_pg - omega * sat(d_pc * omega, p_max) + omega * w
    return q.value((omega, p_tau)), v_dot


def v5_series(traj, q: LyapunovQ) -> np.ndarray:
    q1, q2 = q.diagonal
    return q1 * traj.y[:, 0] ** 2 + q2 * traj.y[:, 1] ** 2


@dataclass(frozen=True)
class IssCert:
    """Input-to-state gains of the reduced class-B model.

    ``pairs`` holds the converters' ``(d_pc, P_max)`` in p.u. and ``n1``
    their number; the single-converter case is ``n1 = 1``. The gains are
    closed-form functions of ``|w|``:

    * ``chi1(|w|) = max_i (P_i/d_i) atanh(|w| / (theta n1 P_i))``
    * ``chi2(|w|) = sqrt(|w| d_pg chi1(|w|) / theta)``
    * ``gamma = c max(chi1, chi2)``, ``c = sqrt(lambda_max(Q)/lambda_min(Q))``

    and are defined for ``|w| < w_limit = theta n1 min_i P_i``.
    """

    theta: float
    q: LyapunovQ
    pairs: tuple[tuple[float, float], ...]
    conditions: tuple = field(default=(), repr=False)

    @property
    def n1(self) -> int:
        return len(self.pairs)

    @property
    def c(self) -> float:
        return self.q.condition

    @property
    def w_limit(self) -> float:
        return self.theta * self.n1 * min(p for _, p in self.pairs)

    @property
    def w_domain(self) -> tuple[float, float]:
        return -self.w_limit, self.w_limit

    def _check(self, w: float) -> float:
        a = abs(float(w))
        if not a < self.w_limit:
            raise DomainError(
                f"|w| = {a:.6g} p.u. outside the certificate domain |w| < {self.w_limit:.6g} p.u."
            )
        return a

    def chi1(self, w: float) -> float:
        a = self._check(w)
        scale = self.theta * self.n1
        return max((p / d) * math.atanh(a / (scale * p)) for d, p in self.pairs)

    def chi2(self, w: float) -> float:
        a = self._check(w)
        return math.sqrt(a * self.q.d_pg * self.chi1(a) / self.theta)

    def rho(self, w: float) -> float:
        return max(self.chi1(w), self.chi2(w))

    def gamma(self, w: float) -> float:
        return self.c * self.rho(w)


def iss_gains(theta: float, mp: MachineParams, d_pc: float, p_max: float) -> IssCert:
    if not 0 < theta < 1:
        raise ParameterError(f"theta must lie in (0, 1), got {theta}")
    if not (p_max > 0 and d_pc > 0):
        raise ParameterError("converter droop and headroom must be strictly positive")
    return IssCert(theta, LyapunovQ(mp.H_g, mp.tau_g, mp.d_pg), ((float(d_pc), float(p_max)),))


def coi_iss_gains(theta: float, coi: CoiParams) -> IssCert:
    """ISS gains of the centre-of-inertia model.

    The lower bound ``sum_i sat(d_i w, P_i) >= n1 min_i P_i tanh(d_i |w| / P_i)``
    is inverted exactly: the frequency at which it reaches ``|w|/theta``
    is the largest of the per-converter inverses.
    """
    if not 0 < theta < 1:
        raise ParameterError(f"theta must lie in (0, 1), got {theta}")
    if coi.n1 < 1:
        raise ParameterError("at least one class-B converter is required")
    return IssCert(theta, LyapunovQ(coi.H_T, coi.tau_gT, coi.d_pgT), coi.converters)


def brute_force_chi1(cert: IssCert, w: float, omega_grid: np.ndarray) -> float:
    """Smallest grid frequency where ``theta n1 min_i P_i tanh(d_i w / P_i)`` reaches ``|w|``.

    Grid oracle for :meth:`IssCert.chi1`; returns inf if the grid is too short.
    """
    d = np.array([d for d, _ in cert.pairs])
    p = np.array([p for _, p in cert.pairs])
    g = cert.theta * cert.n1 * np.min(p[None, :] * np.tanh(np.outer(omega_grid, d) / p[None, :]), axis=1)
    hit = np.nonzero(g >= abs(w))[0]
    return float(omega_grid[hit[0]]) if hit.size else math.inf


@dataclass(frozen=True)
class EnvelopeReport:
    status: str  # holds | violated | inconclusive
    gamma: float
    steady_norm: float
    transient_peak: float
    margin: float
    window_start: float


def iss_envelope_check(traj, cert: IssCert, w_sup: float, min_window: float = 1.0,
                       rel_flat: float = 1e-9) -> EnvelopeReport:
    """Compare the settled part of a reduced-model run with ``gamma(w_sup)``.

    The settled window is the longest suffix on which V5 is monotone
    (changes below ``rel_flat`` of its range are ignored). The state norm
    is the Euclidean norm of ``z``, which bounds the max-norm from above.
    """
    gamma = cert.gamma(w_sup)
    v5 = v5_series(traj, cert.q)
    z = np.hypot(traj.y[:, 0], traj.y[:, 1])
    peak = float(np.max(z))
    dv = np.diff(v5)
    flat = rel_flat * max(float(np.ptp(v5)), np.finfo(float).tiny)
    sign = np.where(dv > flat, 1, np.where(dv < -flat, -1, 0))
    start = len(v5) - 1
    direction = 0
    for i in range(len(sign) - 1, -1, -1):
        s = sign[i]
        if s != 0:
            if direction == 0:
                direction = s
            elif s != direction:
                break
        start = i
    t0 = float(traj.t[start])
    if traj.t[-1] - t0 < min_window or traj.termination != "t_end":
        return EnvelopeReport("inconclusive", gamma, math.nan, peak, math.nan, t0)
    steady = float(np.max(z[start:]))
    margin = gamma - steady
    return EnvelopeReport("holds" if margin >= 0 else "violated", gamma, steady, peak, margin, t0)


def coi_aggregate(machines: Sequence[MachineParams], converters: Sequence[ConverterParams],
                  net: NetworkParams, rel_tol: float = 1e-12) -> CoiParams:
    """Centre-of-inertia constants of a multi-machine, multi-converter grid.

    Converter droops and headrooms are taken in p.u. on ``net.S_base``.
    All turbine time constants must agree.
    """
    if not machines:
        raise ParameterError("at least one machine is required")
    tau = machines[0].tau_g
    for mp in machines[1:]:
        if abs(mp.tau_g - tau) > rel_tol * abs(tau):
            raise ParameterError(
                f"centre-of-inertia aggregation needs equal turbine time constants, got {tau} and {mp.tau_g}"
            )
    ref = machines[0]
    pairs = tuple((matching_droop(cp, ref, net), headroom_pu(cp, net)) for cp in converters)
    return CoiParams(
        H_T=sum(mp.H_g for mp in machines),
        d_pgT=sum(mp.d_pg for mp in machines),
        tau_gT=tau,
        P_gT_star=sum(mp.P_g_star for mp in machines),
        converters=pairs,
    )
